"""Classical receiver equalizers: frequency-domain CD compensation and DBP."""

from dataclasses import dataclass

import numpy as np
from scipy.fft import fft, ifft

from .fiber import LinkConfig, _split_step
from .txrx import Waveform
from .utils import alpha_db_km_to_per_m, db_to_lin, dbm_to_watt


def fde(wave, beta2_ps2_per_km, length_km):
    """Ideal frequency-domain equalizer.

    Applies the all-pass response exp(+j (beta2/2) w^2 L), the exact inverse
    of the accumulated linear dispersion.
    """
    if len(wave) == 0 or length_km == 0.0:
        return Waveform(wave.ex.copy(), wave.ey.copy(), wave.sample_rate, wave.center_offset)
    omega = 2.0 * np.pi * np.fft.fftfreq(len(wave), 1.0 / wave.sample_rate)
    h = np.exp(0.5j * (beta2_ps2_per_km * 1e-27) * omega**2 * (length_km * 1e3))
    return Waveform(ifft(fft(wave.ex) * h), ifft(fft(wave.ey) * h), wave.sample_rate, wave.center_offset)


def walkoff_correction(wave, beta2_ps2_per_km, length_km, offset_hz):
    """Undo the group delay a channel picks up when it rides off comb center.

    A channel at offset f experiences the dispersion phase at (w + 2 pi f);
    after shifting it back to baseband the cross term is a pure delay
    beta2 L (2 pi f), removed here as ideal timing recovery.
    """
    if len(wave) == 0 or offset_hz == 0.0 or length_km == 0.0:
        return Waveform(wave.ex.copy(), wave.ey.copy(), wave.sample_rate, wave.center_offset)
    omega = 2.0 * np.pi * np.fft.fftfreq(len(wave), 1.0 / wave.sample_rate)
    h = np.exp(1j * (beta2_ps2_per_km * 1e-27) * (length_km * 1e3) * (2.0 * np.pi * offset_hz) * omega)
    return Waveform(ifft(fft(wave.ex) * h), ifft(fft(wave.ey) * h), wave.sample_rate, wave.center_offset)


@dataclass
class DbpConfig:
    """Digital back-propagation settings for a known link."""

    link: LinkConfig
    steps_per_span: int = 2
    samples_per_symbol: int = 4
    launch_power_dbm: float = 0.0

    def __post_init__(self):
        if self.steps_per_span < 1:
            raise ValueError("steps_per_span must be >= 1")


def dbp(wave, cfg):
    """Single-channel digital back-propagation.

    Runs the split-step method span by span in reverse order with negated
    dispersion and nonlinearity and the loss profile inverted. The field is
    internally rescaled so the nonlinear steps see the known launch power;
    the output keeps the input scale.
    """
    if len(wave) == 0 or cfg.link.n_spans == 0:
        return Waveform(wave.ex.copy(), wave.ey.copy(), wave.sample_rate, wave.center_offset)
    p_in = wave.power()
    if p_in <= 0:
        raise ValueError("cannot back-propagate an all-zero field")
    r = np.sqrt(dbm_to_watt(cfg.launch_power_dbm) / p_in)
    ex, ey = wave.ex * r, wave.ey * r
    fiber = cfg.link.fiber
    inv_gain = 1.0 / np.sqrt(db_to_lin(cfg.link.amp.gain_db))
    for _ in range(cfg.link.n_spans):
        ex, ey = ex * inv_gain, ey * inv_gain
        ex, ey = _split_step(
            ex,
            ey,
            wave.sample_rate,
            -alpha_db_km_to_per_m(fiber.alpha_db_per_km),
            -fiber.beta2_ps2_per_km * 1e-27,
            -fiber.gamma_per_w_km * 1e-3,
            fiber.span_km * 1e3,
            cfg.steps_per_span,
        )
    return Waveform(ex / r, ey / r, wave.sample_rate, wave.center_offset)
