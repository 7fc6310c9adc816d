"""16-QAM POLMUX transmitter, WDM multiplexer and ideal coherent receiver front-end.

All waveform filtering is done in the frequency domain on whole frames, so
frames are treated as circular. The transmit/receive root-raised-cosine pair
is built directly from the raised-cosine spectrum, which makes the
back-to-back chain Nyquist (zero ISI) to machine precision.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import fft, ifft

from .errors import ConfigError
from .utils import dbm_to_watt

# Gray code on each rail: bit pair 00,01,11,10 -> level -3,-1,+1,+3.
_GRAY_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])  # indexed by the 2-bit value

#: unit-mean-energy 16-QAM constellation indexed by class = b3 b2 b1 b0,
#: I from b3 b2, Q from b1 b0
QAM16 = np.array(
    [
        _GRAY_LEVELS[(c >> 2) & 3] + 1j * _GRAY_LEVELS[c & 3]
        for c in range(16)
    ]
) / np.sqrt(10.0)

#: bits (16, 4) for each class index, MSB first
QAM16_BITS = np.array([[(c >> b) & 1 for b in (3, 2, 1, 0)] for c in range(16)])

#: unit-energy Gray QPSK, used for neighbor-modulation robustness scenarios
QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


def map_bits_to_qam16(bits):
    """Gray-map a bit sequence (length multiple of 4) to 16-QAM symbols."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % 4 != 0:
        raise ValueError(f"bit count {bits.size} not divisible by 4")
    nib = bits.reshape(-1, 4)
    classes = (nib[:, 0] << 3) | (nib[:, 1] << 2) | (nib[:, 2] << 1) | nib[:, 3]
    return QAM16[classes]


def classes_to_bits(classes):
    """Per-class 4-bit words (n, 4), MSB first."""
    return QAM16_BITS[np.asarray(classes, dtype=np.int64)]


def demap_hard(symbols):
    """Nearest-neighbor decision on 16-QAM.

    Returns (classes, bits); ties resolve to the lowest class index.
    """
    s = np.asarray(symbols, dtype=complex)
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite symbol value in hard demapper")
    d2 = np.abs(s.reshape(-1, 1) - QAM16[None, :]) ** 2
    classes = np.argmin(d2, axis=1)
    classes = classes.reshape(s.shape) if s.shape else classes[0]
    return classes, QAM16_BITS[classes]


@dataclass
class SymbolFrame:
    """Transmitted dual-polarization symbol frame.

    symbols holds one 4-real record (Ix, Qx, Iy, Qy) per symbol at unit mean
    constellation energy per polarization; labels are class indices 0..15.
    """

    symbols: np.ndarray  # (n, 4) float64
    labels_x: np.ndarray  # (n,) int
    labels_y: np.ndarray
    baud_rate: float = 25e9

    def __post_init__(self):
        n = len(self.symbols)
        if len(self.labels_x) != n or len(self.labels_y) != n:
            raise ValueError("label length does not match symbol count")

    def __len__(self):
        return len(self.symbols)

    @property
    def sx(self):
        return self.symbols[:, 0] + 1j * self.symbols[:, 1]

    @property
    def sy(self):
        return self.symbols[:, 2] + 1j * self.symbols[:, 3]


@dataclass
class Waveform:
    """Oversampled dual-polarization complex baseband field (sqrt(W) units)."""

    ex: np.ndarray
    ey: np.ndarray
    sample_rate: float
    center_offset: float = 0.0

    def __post_init__(self):
        if len(self.ex) != len(self.ey):
            raise ValueError("polarization arrays differ in length")

    def __len__(self):
        return len(self.ex)

    def power(self):
        """Mean total power (both polarizations) in W."""
        if len(self) == 0:
            return 0.0
        return float(np.mean(np.abs(self.ex) ** 2 + np.abs(self.ey) ** 2))


def records_to_complex(records):
    """(n, 4) I/Q records -> (sx, sy) complex arrays."""
    r = np.asarray(records, dtype=float)
    return r[:, 0] + 1j * r[:, 1], r[:, 2] + 1j * r[:, 3]


def complex_to_records(sx, sy):
    return np.stack([sx.real, sx.imag, sy.real, sy.imag], axis=1)


def build_polmux_frame(rng_seed, n_symbols, baud_rate=25e9, constellation="16qam"):
    """Draw i.i.d. uniform symbol classes for both polarizations.

    rng_seed may be an integer seed or a numpy Generator. The PCG64 stream
    behind default_rng has period 2^128, far beyond any dataset here, so
    sequences never repeat within a run.
    """
    if n_symbols < 0:
        raise ValueError("n_symbols must be >= 0")
    rng = np.random.default_rng(rng_seed)
    if constellation == "16qam":
        points, n_classes = QAM16, 16
    elif constellation == "qpsk":
        points, n_classes = QPSK, 4
    else:
        raise ConfigError(f"unknown constellation {constellation!r}")
    lx = rng.integers(0, n_classes, size=n_symbols)
    ly = rng.integers(0, n_classes, size=n_symbols)
    return SymbolFrame(
        symbols=complex_to_records(points[lx], points[ly]),
        labels_x=lx,
        labels_y=ly,
        baud_rate=baud_rate,
    )


def _raised_cosine_spectrum(n, samples_per_symbol, rolloff):
    """Raised-cosine amplitude response on the length-n FFT grid.

    Frequencies in cycles/symbol; the response satisfies the Nyquist
    criterion exactly on the grid whenever n is a multiple of
    samples_per_symbol.
    """
    f = np.abs(np.fft.fftfreq(n)) * samples_per_symbol
    g = np.zeros(n)
    f1 = 0.5 * (1.0 - rolloff)
    f2 = 0.5 * (1.0 + rolloff)
    g[f <= f1] = 1.0
    if rolloff > 0:
        roll = (f > f1) & (f <= f2)
        g[roll] = 0.5 * (1.0 + np.cos(np.pi * (f[roll] - f1) / rolloff))
    return g


def _rrc_filter(n, samples_per_symbol, rolloff):
    # sqrt(sps * G) on each side makes TX*RX Nyquist with unit symbol gain
    return np.sqrt(samples_per_symbol * _raised_cosine_spectrum(n, samples_per_symbol, rolloff))


def _apply_spectrum(wave, h):
    ex = ifft(fft(wave.ex) * h)
    ey = ifft(fft(wave.ey) * h)
    return Waveform(ex, ey, wave.sample_rate, wave.center_offset)


def modulate(frame, samples_per_symbol, launch_power_dbm, rolloff=0.1):
    """RRC pulse-shape a symbol frame into a dual-pol waveform.

    The output mean power (both polarizations combined) is set exactly to
    launch_power_dbm.
    """
    sps = int(samples_per_symbol)
    if sps < 2 or sps % 2 != 0:
        raise ConfigError(f"samples_per_symbol must be even and >= 2, got {samples_per_symbol}")
    n = len(frame)
    fs = frame.baud_rate * sps
    if n == 0:
        z = np.zeros(0, dtype=complex)
        return Waveform(z, z.copy(), fs)
    up = np.zeros((2, n * sps), dtype=complex)
    up[0, ::sps] = frame.sx
    up[1, ::sps] = frame.sy
    h = _rrc_filter(n * sps, sps, rolloff)
    ex = ifft(fft(up[0]) * h)
    ey = ifft(fft(up[1]) * h)
    p = np.mean(np.abs(ex) ** 2 + np.abs(ey) ** 2)
    scale = np.sqrt(dbm_to_watt(launch_power_dbm) / p)
    return Waveform(ex * scale, ey * scale, fs)


def freq_shift(wave, offset_hz):
    """Shift the waveform spectrum by offset_hz (positive moves up-band)."""
    if offset_hz == 0.0 or len(wave) == 0:
        return Waveform(wave.ex.copy(), wave.ey.copy(), wave.sample_rate, wave.center_offset)
    t = np.arange(len(wave)) / wave.sample_rate
    rot = np.exp(2j * np.pi * offset_hz * t)
    return Waveform(wave.ex * rot, wave.ey * rot, wave.sample_rate, wave.center_offset)


def channel_offsets(n_channels, spacing_hz):
    """Symmetric WDM grid offsets around the comb center."""
    idx = np.arange(n_channels, dtype=float)
    return (idx - (n_channels - 1) / 2.0) * spacing_hz


def central_channel_index(n_channels):
    """Measured channel: ceil(n/2) in 1-based terms, lower-middle for even counts."""
    return (n_channels + 1) // 2 - 1


def wdm_mux(channels, spacing_hz):
    """Sum per-channel waveforms on the symmetric grid given by channel_offsets.

    For an odd channel count the central (measured) channel lands at 0 Hz;
    for even counts it sits at -spacing/2 and the receiver shifts it down.
    """
    if not channels:
        raise ConfigError("wdm_mux needs at least one channel")
    fs = channels[0].sample_rate
    n = len(channels[0])
    for ch in channels:
        if ch.sample_rate != fs or len(ch) != n:
            raise ConfigError("all WDM channels must share sample rate and length")
    offsets = channel_offsets(len(channels), spacing_hz)
    if len(channels) > 1 and np.max(np.abs(offsets)) + spacing_hz / 2 > fs / 2:
        raise ConfigError(
            f"WDM comb exceeds Nyquist: edge {np.max(np.abs(offsets)) / 1e9:.1f} GHz "
            f"+ half spacing at sample rate {fs / 1e9:.1f} GHz"
        )
    if len(channels) == 1:
        return Waveform(channels[0].ex.copy(), channels[0].ey.copy(), fs, 0.0)
    ex = np.zeros(n, dtype=complex)
    ey = np.zeros(n, dtype=complex)
    t = np.arange(n) / fs
    for ch, off in zip(channels, offsets):
        rot = np.exp(2j * np.pi * off * t) if off != 0.0 else 1.0
        ex += ch.ex * rot
        ey += ch.ey * rot
    return Waveform(ex, ey, fs, 0.0)


def brickwall_lowpass(wave, cutoff_hz):
    """Zero every spectral bin with |f| > cutoff_hz."""
    if len(wave) == 0:
        return wave
    f = np.fft.fftfreq(len(wave), 1.0 / wave.sample_rate)
    h = (np.abs(f) <= cutoff_hz).astype(float)
    return _apply_spectrum(wave, h)


def decimate(wave, factor):
    """Keep every factor-th sample (phase 0). Content must already be band-limited."""
    factor = int(factor)
    if factor < 1 or len(wave) % factor != 0:
        raise ValueError(f"cannot decimate length {len(wave)} by {factor}")
    return Waveform(
        wave.ex[::factor].copy(),
        wave.ey[::factor].copy(),
        wave.sample_rate / factor,
        wave.center_offset,
    )


def rx_front_end(wave, frame_len, rolloff=0.1):
    """Ideal coherent receiver front-end for the channel at 0 Hz offset.

    Applies the matched RRC filter and a brick-wall low-pass with cutoff at
    the baud rate, then produces the 4-samples/symbol waveform (DBP path)
    and symbol-rate records sampled at the pulse centers (FDE/LSTM path).

    Returns (records, wave4) where records is an (n, 4) array of
    (Ix, Qx, Iy, Qy) values.
    """
    n = len(wave)
    if frame_len == 0 and n == 0:
        return np.zeros((0, 4)), Waveform(wave.ex.copy(), wave.ey.copy(), wave.sample_rate)
    if frame_len <= 0 or n % frame_len != 0:
        raise ValueError(f"waveform length {n} does not align with frame length {frame_len}")
    sps = n // frame_len
    if sps < 4 or sps % 4 != 0:
        raise ValueError(f"front-end requires samples/symbol divisible by 4, got {sps}")
    baud = wave.sample_rate / sps
    f = np.fft.fftfreq(n, 1.0 / wave.sample_rate)
    h = _rrc_filter(n, sps, rolloff) * (np.abs(f) <= baud)
    filtered = _apply_spectrum(wave, h)
    wave4 = decimate(filtered, sps // 4)
    wave1 = decimate(wave4, 4)
    return complex_to_records(wave1.ex, wave1.ey), wave4


def symbol_records(wave4):
    """Decision sampling: symbol-rate (n, 4) records from a 4-sps waveform."""
    w = decimate(wave4, 4)
    return complex_to_records(w.ex, w.ey)


def align_to_reference(records, frame):
    """Remove the residual complex gain per polarization (genie AGC + CPE).

    Least-squares fit of rx = g * tx per polarization against the known
    transmitted symbols, standing in for the ideal carrier-phase and gain
    recovery assumed throughout.
    """
    rx_x, rx_y = records_to_complex(records)
    out = np.empty((len(rx_x), 4))
    for i, (rx, ref) in enumerate(((rx_x, frame.sx), (rx_y, frame.sy))):
        denom = np.vdot(ref, ref).real
        g = np.vdot(ref, rx) / denom if denom > 0 else 1.0
        eq = rx / g
        out[:, 2 * i] = eq.real
        out[:, 2 * i + 1] = eq.imag
    return out


def dump_waveform(wave, path):
    """Write interleaved little-endian float64 (Ix, Qx, Iy, Qy) samples."""
    complex_to_records(wave.ex, wave.ey).astype("<f8").tofile(path)


def load_records(path):
    """Read an (n, 4) record file written by dump_waveform/dump_records."""
    flat = np.fromfile(path, dtype="<f8")
    if flat.size % 4 != 0:
        raise ValueError(f"record file {path} length {flat.size} not a multiple of 4")
    return flat.reshape(-1, 4)
