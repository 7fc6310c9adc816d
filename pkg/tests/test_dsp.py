import numpy as np
import pytest
from pytest import approx

from fiberlstm import txrx
from fiberlstm.complexity import evm
from fiberlstm.dsp import DbpConfig, dbp, fde
from fiberlstm.fiber import LinkConfig, propagate_link


def propagate(seed, power_dbm, band="C", n_spans=10, steps=30, n_symbols=2048,
              noiseless=True, gamma=None, rng=None):
    frame = txrx.build_polmux_frame(seed, n_symbols)
    wave = txrx.modulate(frame, 16, power_dbm)
    link = LinkConfig.for_band(band, n_spans=n_spans, noiseless=noiseless,
                               steps_per_span_forward=steps, samples_per_symbol=16)
    if gamma is not None:
        link.fiber.gamma_per_w_km = gamma
    return frame, wave, link, propagate_link(wave, link, rng)


def aligned_symbols(field, frame):
    records, _ = txrx.rx_front_end(field, len(frame))
    aligned = txrx.align_to_reference(records, frame)
    return txrx.records_to_complex(aligned)


def test_fde_zero_length_identity():
    frame = txrx.build_polmux_frame(1, 128)
    wave = txrx.modulate(frame, 4, 0.0)
    out = fde(wave, -21.5, 0.0)
    assert np.allclose(out.ex, wave.ex, atol=1e-12)


def test_fde_inverse_pair_cancels():
    frame = txrx.build_polmux_frame(2, 512)
    wave = txrx.modulate(frame, 4, 0.0)
    out = fde(fde(wave, -21.5, 500.0), +21.5, 500.0)
    assert np.max(np.abs(out.ex - wave.ex)) < 1e-12


def test_fde_is_unitary():
    frame = txrx.build_polmux_frame(3, 512)
    wave = txrx.modulate(frame, 4, 3.0)
    out = fde(wave, -21.5, 1000.0)
    assert out.power() == approx(wave.power(), rel=1e-10)


def test_fde_inverts_linear_channel():
    frame, _, link, field = propagate(4, -2.0, gamma=0.0)
    eq = fde(field, link.fiber.beta2_ps2_per_km, link.total_length_km)
    rx_x, rx_y = aligned_symbols(eq, frame)
    assert evm(np.r_[rx_x, rx_y], np.r_[frame.sx, frame.sy], fit_gain=False) < 1e-9


def test_dbp_exact_inversion_matched_steps():
    frame, _, link, field = propagate(5, 9.0, steps=30)
    cfg = DbpConfig(link=link, steps_per_span=30, launch_power_dbm=9.0)
    back = dbp(field, cfg)
    rx_x, rx_y = aligned_symbols(back, frame)
    assert evm(np.r_[rx_x, rx_y], np.r_[frame.sx, frame.sy], fit_gain=False) < 1e-6


def test_dbp_reduces_to_fde_without_nonlinearity():
    frame, _, link, field = propagate(6, 0.0, gamma=0.0, steps=5)
    _, wave4 = txrx.rx_front_end(field, len(frame))
    via_dbp = dbp(wave4, DbpConfig(link=link, steps_per_span=3, launch_power_dbm=0.0))
    via_fde = fde(wave4, link.fiber.beta2_ps2_per_km, link.total_length_km)
    num = np.sum(np.abs(via_dbp.ex - via_fde.ex) ** 2 + np.abs(via_dbp.ey - via_fde.ey) ** 2)
    den = np.sum(np.abs(via_fde.ex) ** 2 + np.abs(via_fde.ey) ** 2)
    assert np.sqrt(num / den) < 1e-9


def test_dbp_more_steps_beats_fewer_at_high_power():
    frame, _, link, field = propagate(7, 8.0, steps=40, n_symbols=4096)
    _, wave4 = txrx.rx_front_end(field, len(frame))
    evms = {}
    for steps in (2, 6):
        back = dbp(wave4, DbpConfig(link=link, steps_per_span=steps, launch_power_dbm=8.0))
        rx_x, rx_y = txrx.records_to_complex(
            txrx.align_to_reference(txrx.symbol_records(back), frame)
        )
        evms[steps] = evm(np.r_[rx_x, rx_y], np.r_[frame.sx, frame.sy])
    assert evms[6] <= evms[2]


def test_dbp_statistical_monotonicity_in_steps():
    # mean EVM over seeds is non-increasing as steps per span grow
    step_grid = (1, 2, 4, 6)
    sums = {s: 0.0 for s in step_grid}
    for seed in range(10):
        frame, _, link, field = propagate(100 + seed, 7.0, steps=24, n_symbols=1024)
        _, wave4 = txrx.rx_front_end(field, len(frame))
        for s in step_grid:
            back = dbp(wave4, DbpConfig(link=link, steps_per_span=s, launch_power_dbm=7.0))
            rx_x, rx_y = txrx.records_to_complex(
                txrx.align_to_reference(txrx.symbol_records(back), frame)
            )
            sums[s] += evm(np.r_[rx_x, rx_y], np.r_[frame.sx, frame.sy])
    means = [sums[s] / 10 for s in step_grid]
    assert all(a >= b - 1e-12 for a, b in zip(means, means[1:]))


def test_dbp_single_channel_never_worse_than_wdm_central():
    # inter-channel terms are unmodeled by single-channel DBP
    power, steps = 2.0, 20
    evm_single = evm_wdm = 0.0
    for seed in range(10):
        frame, wave, link, field = propagate(200 + seed, power, steps=steps, n_symbols=1024)
        _, w4 = txrx.rx_front_end(field, len(frame))
        back = dbp(w4, DbpConfig(link=link, steps_per_span=6, launch_power_dbm=power))
        rx_x, rx_y = txrx.records_to_complex(
            txrx.align_to_reference(txrx.symbol_records(back), frame)
        )
        evm_single += evm(np.r_[rx_x, rx_y], np.r_[frame.sx, frame.sy])

        neighbors = [
            txrx.modulate(txrx.build_polmux_frame(1000 + 10 * seed + i, 1024), 16, power)
            for i in range(2)
        ]
        comb = txrx.wdm_mux([neighbors[0], wave, neighbors[1]], 50e9)
        field_wdm = propagate_link(comb, link)
        _, w4m = txrx.rx_front_end(field_wdm, len(frame))
        back_m = dbp(w4m, DbpConfig(link=link, steps_per_span=6, launch_power_dbm=power))
        rx_xm, rx_ym = txrx.records_to_complex(
            txrx.align_to_reference(txrx.symbol_records(back_m), frame)
        )
        evm_wdm += evm(np.r_[rx_xm, rx_ym], np.r_[frame.sx, frame.sy])
    assert evm_single <= evm_wdm


def test_dbp_rejects_zero_field():
    link = LinkConfig.for_band("C", n_spans=1, noiseless=True)
    wave = txrx.Waveform(np.zeros(16, complex), np.zeros(16, complex), 100e9)
    with pytest.raises(ValueError):
        dbp(wave, DbpConfig(link=link, steps_per_span=2, launch_power_dbm=0.0))


def test_dbp_config_validation():
    link = LinkConfig.for_band("C", n_spans=1, noiseless=True)
    with pytest.raises(ValueError):
        DbpConfig(link=link, steps_per_span=0)
