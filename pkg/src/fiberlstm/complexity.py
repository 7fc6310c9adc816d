"""BER counting, channel-memory estimation and the analytic complexity model.

Complexity figures are real multiplications per transmitted bit. The DBP and
FDE costs follow the overlap-FFT equalizer accounting; the bi-LSTM cost
covers one prediction pass and is independent of distance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .utils import next_pow2

SYMBOL_PERIOD_PS = 40.0  # 25 Gbaud
SIGNAL_BANDWIDTH_THZ = 0.05  # 50 GHz channel bandwidth used for memory estimates


def ber(tx_bits, rx_bits):
    """Hamming distance over sequence length."""
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.size != rx.size or tx.size == 0:
        raise ValueError(f"bit sequences must match and be non-empty ({tx.size} vs {rx.size})")
    return float(np.mean(tx != rx))


def evm(rx, ref, fit_gain=True):
    """Relative RMS error vector magnitude against reference symbols.

    With fit_gain the residual complex gain is removed first (ideal AGC and
    carrier phase, as assumed throughout the receiver chain).
    """
    rx = np.asarray(rx, dtype=complex).ravel()
    ref = np.asarray(ref, dtype=complex).ravel()
    if rx.size != ref.size or ref.size == 0:
        raise ValueError("rx/ref length mismatch")
    if fit_gain:
        rx = rx / (np.vdot(ref, rx) / np.vdot(ref, ref).real)
    return float(np.sqrt(np.sum(np.abs(rx - ref) ** 2) / np.sum(np.abs(ref) ** 2)))


def delay_spread_ps(beta2_ps2_per_km, length_km, bandwidth_thz=SIGNAL_BANDWIDTH_THZ):
    """Chromatic-dispersion delay spread 2 pi |beta2| L B in picoseconds."""
    if length_km < 0 or bandwidth_thz < 0:
        raise ValueError("length and bandwidth must be nonnegative")
    return 2.0 * math.pi * abs(beta2_ps2_per_km) * length_km * bandwidth_thz


def dispersive_taps(beta2_ps2_per_km, length_km, oversampling, bandwidth_thz=SIGNAL_BANDWIDTH_THZ):
    """Equalizer memory N_D = n_s tau_D / T rounded up to at least one tap."""
    taps = oversampling * delay_spread_ps(beta2_ps2_per_km, length_km, bandwidth_thz) / SYMBOL_PERIOD_PS
    return max(1, math.ceil(taps))


@dataclass
class ComplexityInputs:
    n_span: int
    steps_per_span: int
    fft_size: int
    oversampling: int
    dispersive_taps: int
    constellation_order: int = 16
    hidden_units: int = 0
    word_length: int = 0
    epochs: int = 0
    train_symbols: int = 0

    def __post_init__(self):
        if self.fft_size <= self.dispersive_taps - 1:
            raise ValueError(
                f"FFT size {self.fft_size} must exceed dispersive taps {self.dispersive_taps} - 1"
            )


def _fft_block_cost(fft_size, oversampling, dispersive_taps, constellation_order):
    if fft_size <= dispersive_taps - 1:
        raise ValueError(f"FFT size {fft_size} too small for {dispersive_taps} dispersive taps")
    return (
        fft_size
        * (math.log2(fft_size) + 1.0)
        * oversampling
        / ((fft_size - dispersive_taps + 1) * math.log2(constellation_order))
    )


def c_dbp(n_span, steps_per_span, fft_size, oversampling, dispersive_taps, constellation_order=16):
    """DBP multiplications per bit: 4 N_span N_StpSt [FFT-block cost + n_s]."""
    block = _fft_block_cost(fft_size, oversampling, dispersive_taps, constellation_order)
    return 4.0 * n_span * steps_per_span * (block + oversampling)


def c_fde(fft_size, oversampling, dispersive_taps, constellation_order=16):
    """Frequency-domain equalizer multiplications per bit, whole-link FFT sizing."""
    return 4.0 * _fft_block_cost(fft_size, oversampling, dispersive_taps, constellation_order)


def c_pred(hidden_units, word_length, constellation_order=16):
    """Bi-LSTM prediction multiplications per bit: 16 (L^2 + L m + L) / log2 M."""
    if min(hidden_units, word_length) < 1:
        raise ValueError("hidden units and word length must be positive")
    L, m = hidden_units, word_length
    return 16.0 * (L * L + L * m + L) / math.log2(constellation_order)


def c_train(epochs, train_symbols, c_pred_value):
    """Total training multiplications: N_ep N_TS C_pred."""
    return float(epochs) * float(train_symbols) * float(c_pred_value)


@dataclass
class DbpAssumptions:
    """Operating point for the DBP side of the complexity comparison.

    Four steps per span is the equal-performance setting against the
    bi-LSTM in single-channel runs; FFT sizes follow the per-span memory
    with a floor of 64.
    """

    steps_per_span: int = 4
    oversampling: int = 4
    min_fft: int = 64


def fft_size_for_taps(n_taps, min_fft=64):
    """Smallest power of two >= max(4 N_D, min_fft)."""
    return next_pow2(max(4 * n_taps, min_fft))


def dbp_cost_for_link(beta2_ps2_per_km, n_span, span_km=50.0, assumptions=DbpAssumptions()):
    n_d = dispersive_taps(beta2_ps2_per_km, span_km, assumptions.oversampling)
    n_fft = fft_size_for_taps(n_d, assumptions.min_fft)
    return c_dbp(n_span, assumptions.steps_per_span, n_fft, assumptions.oversampling, n_d)


def fde_cost_for_link(beta2_ps2_per_km, length_km, oversampling=2, min_fft=64):
    n_d = dispersive_taps(beta2_ps2_per_km, length_km, oversampling)
    n_fft = fft_size_for_taps(n_d, min_fft)
    return c_fde(n_fft, oversampling, n_d)


_BAND_BETA2 = {"C": -21.5, "O": -0.82}


def crossover_distance(band, hidden_units, word_length, assumptions=DbpAssumptions(),
                       span_km=50.0, max_spans=120):
    """Shortest distance (km) where the bi-LSTM path undercuts DBP, else None.

    Scans span counts directly; DBP cost is linear in distance while the
    bi-LSTM cost only grows through the (small) FDE term.
    """
    beta2 = _BAND_BETA2[band]
    lstm_fixed = c_pred(hidden_units, word_length)
    for n in range(1, max_spans + 1):
        dbp_cost = dbp_cost_for_link(beta2, n, span_km, assumptions)
        lstm_cost = lstm_fixed + fde_cost_for_link(beta2, n * span_km)
        if dbp_cost > lstm_cost:
            return n * span_km
    return None


def complexity_sweep(band, hidden_units, word_length, distances_km,
                     assumptions=DbpAssumptions(), span_km=50.0):
    """Rows of (distance_km, c_dbp, c_fde, c_pred, c_total_lstm, band, L, m)."""
    beta2 = _BAND_BETA2[band]
    pred = c_pred(hidden_units, word_length)
    rows = []
    for dist in distances_km:
        n_span = max(1, round(dist / span_km))
        dbp_cost = dbp_cost_for_link(beta2, n_span, span_km, assumptions)
        fde_cost = fde_cost_for_link(beta2, n_span * span_km)
        rows.append(
            {
                "distance_km": n_span * span_km,
                "c_dbp": dbp_cost,
                "c_fde": fde_cost,
                "c_pred": pred,
                "c_total_lstm": pred + fde_cost,
                "band": band,
                "L": hidden_units,
                "m": word_length,
            }
        )
    return rows
