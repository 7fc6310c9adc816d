import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from fiberlstm.complexity import (
    ComplexityInputs,
    DbpAssumptions,
    ber,
    c_dbp,
    c_fde,
    c_pred,
    c_train,
    complexity_sweep,
    crossover_distance,
    delay_spread_ps,
    dispersive_taps,
    evm,
    fft_size_for_taps,
)


# --- BER counting -------------------------------------------------------------

def test_ber_identical_zero():
    assert ber([0, 1, 1, 0], [0, 1, 1, 0]) == 0.0


def test_ber_complement_one():
    bits = np.random.default_rng(0).integers(0, 2, 64)
    assert ber(bits, 1 - bits) == 1.0


def test_ber_single_flip():
    bits = np.zeros(10_000, dtype=int)
    flipped = bits.copy()
    flipped[1234] = 1
    assert ber(bits, flipped) == approx(1e-4)


def test_ber_rejects_mismatch():
    with pytest.raises(ValueError):
        ber([0, 1], [0, 1, 1])
    with pytest.raises(ValueError):
        ber([], [])


@settings(max_examples=25)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=200),
       st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_ber_is_mean_hamming(tx, rx):
    n = min(len(tx), len(rx))
    tx, rx = tx[:n], rx[:n]
    expected = sum(a != b for a, b in zip(tx, rx)) / n
    assert ber(tx, rx) == approx(expected)


def test_evm_zero_for_identical():
    ref = np.array([1 + 1j, -1 - 1j, 3 - 1j]) / np.sqrt(10)
    assert evm(ref, ref, fit_gain=False) == 0.0


def test_evm_removes_complex_gain():
    rng = np.random.default_rng(1)
    ref = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    rx = ref * 0.7 * np.exp(0.3j)
    assert evm(rx, ref) < 1e-12
    assert evm(rx, ref, fit_gain=False) > 0.1


# --- channel memory -----------------------------------------------------------

def test_delay_spread_o_band_300km():
    # short-memory regime: roughly two symbol periods
    assert delay_spread_ps(0.82, 300, 0.05) == approx(77.0, abs=1.0)


def test_delay_spread_c_band_500km():
    assert delay_spread_ps(21.5, 500, 0.05) / 1000 == approx(3.38, abs=0.05)


def test_delay_spread_zero_length():
    assert delay_spread_ps(21.5, 0) == 0.0


@settings(max_examples=25)
@given(st.floats(0.01, 50), st.floats(0.1, 5000), st.floats(0.001, 0.2), st.floats(1.5, 4))
def test_delay_spread_linear_in_each_argument(beta2, length, bandwidth, factor):
    base = delay_spread_ps(beta2, length, bandwidth)
    assert delay_spread_ps(beta2 * factor, length, bandwidth) == approx(factor * base, rel=1e-12)
    assert delay_spread_ps(beta2, length * factor, bandwidth) == approx(factor * base, rel=1e-12)
    assert delay_spread_ps(beta2, length, bandwidth * factor) == approx(factor * base, rel=1e-12)


# --- multiplications per bit ---------------------------------------------------

def test_dbp_cost_reference_point():
    assert c_dbp(10, 2, 64, 4, 32) == approx(1406.1, abs=0.1)


def test_fde_cost_reference_point():
    assert c_fde(1024, 2, 512) == approx(43.9, abs=0.1)


def test_pred_cost_reference_points():
    assert c_pred(32, 71) == 13312.0
    assert c_pred(1, 1) == 12.0


def test_train_cost_product():
    assert c_train(100, 20_000, 13312.0) == approx(2.6624e10)
    assert c_train(0, 20_000, 13312.0) == 0.0


def test_training_amortization_within_4_percent():
    # 2e6 symbol periods of training against 5e7 symbols per ms of channel
    # stability: amortized training cost stays at or below the 4% mark
    pred = c_pred(32, 71)
    train_total = c_train(100, 20_000, pred)
    prediction_total = 5e7 * pred
    assert train_total / prediction_total <= 0.04


@settings(max_examples=25)
@given(st.integers(1, 50), st.integers(1, 8), st.integers(1, 4))
def test_dbp_cost_linear_in_spans_and_steps(n_span, steps, factor):
    base = c_dbp(n_span, steps, 256, 4, 34)
    assert c_dbp(factor * n_span, steps, 256, 4, 34) == approx(factor * base, rel=1e-12)
    assert c_dbp(n_span, factor * steps, 256, 4, 34) == approx(factor * base, rel=1e-12)


def test_fde_monotone_in_dispersive_taps():
    costs = [c_fde(1024, 2, taps) for taps in (64, 128, 256, 512)]
    assert costs == sorted(costs)


def test_dbp_fde_algebraic_relation():
    # with matching parameters Eq. 4 is N_span N_StpSt (Eq. 5 + 4 n_s)
    n_span, steps, n_fft, n_s, taps = 7, 3, 512, 4, 40
    lhs = c_dbp(n_span, steps, n_fft, n_s, taps)
    rhs = n_span * steps * (c_fde(n_fft, n_s, taps) + 4 * n_s)
    assert lhs == approx(rhs, rel=1e-12)


def test_pred_cost_distance_independent():
    rows_short = complexity_sweep("C", 20, 50, [500])
    rows_long = complexity_sweep("C", 20, 50, [2500])
    assert rows_short[0]["c_pred"] == rows_long[0]["c_pred"]


def test_denominator_guard():
    with pytest.raises(ValueError):
        c_dbp(1, 1, 64, 4, 65)
    with pytest.raises(ValueError):
        ComplexityInputs(n_span=1, steps_per_span=1, fft_size=64, oversampling=4, dispersive_taps=65)


def test_formulas_against_written_out_arithmetic():
    # spreadsheet-style recomputation with independently written expressions
    rng = np.random.default_rng(2)
    for _ in range(10):
        n_span = int(rng.integers(1, 40))
        steps = int(rng.integers(1, 7))
        taps = int(rng.integers(2, 100))
        n_fft = fft_size_for_taps(taps)
        n_s = int(rng.choice([2, 4]))
        L = int(rng.integers(1, 64))
        m = int(rng.integers(1, 201))
        block = n_fft * (math.log2(n_fft) + 1) * n_s / ((n_fft - taps + 1) * 4.0)
        assert c_dbp(n_span, steps, n_fft, n_s, taps) == approx(
            4 * n_span * steps * (block + n_s), rel=1e-12
        )
        assert c_fde(n_fft, n_s, taps) == approx(4 * block, rel=1e-12)
        assert c_pred(L, m) == approx((16 * L * L + 16 * L * m + 16 * L) / 4, rel=1e-12)


# --- crossover scan -------------------------------------------------------------

def test_fft_schedule():
    assert fft_size_for_taps(34) == 256  # 4 * 34 = 136 -> 256
    assert fft_size_for_taps(2) == 64  # floor
    assert dispersive_taps(21.5, 50, 4) == 34
    assert dispersive_taps(0.82, 50, 4) == 2


def test_crossover_c_band():
    dist = crossover_distance("C", 20, 50)
    assert 800 <= dist <= 1600


def test_crossover_o_band():
    dist = crossover_distance("O", 20, 3)
    assert dist is not None and dist < 600


def test_crossover_none_in_range_reported():
    # degenerate comparison: when DBP stays cheaper than the fixed LSTM cost
    # over the whole scanned range there is no crossover to report
    dist = crossover_distance("C", 64, 201, DbpAssumptions(steps_per_span=1), max_spans=10)
    assert dist is None


def test_sweep_rows_schema():
    rows = complexity_sweep("O", 20, 3, [100, 300, 500])
    assert [r["distance_km"] for r in rows] == [100, 300, 500]
    for row in rows:
        assert set(row) == {"distance_km", "c_dbp", "c_fde", "c_pred", "c_total_lstm", "band", "L", "m"}
        assert row["c_total_lstm"] == approx(row["c_pred"] + row["c_fde"])
