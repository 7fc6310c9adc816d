import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from pytest import approx
from scipy.special import expit

from fiberlstm.errors import CheckpointFormatError
from fiberlstm.lstm import (
    BiLstmModel,
    LstmCellParams,
    _run_direction,
    backward,
    batch_loss,
    bilstm_forward,
    cross_entropy,
    forward_batch,
    head_forward,
    load_model,
    lstm_cell_forward,
    save_model,
    softmax,
)


def test_cell_zero_parameters_zero_output():
    p = LstmCellParams.zeros(3)
    h, c = lstm_cell_forward(np.zeros(4), np.zeros(3), np.zeros(3), p)
    assert np.array_equal(h, np.zeros(3))
    assert np.array_equal(c, np.zeros(3))


def test_cell_gate_saturation_holds_memory():
    p = LstmCellParams.zeros(2)
    p.b[2:4] = 40.0  # forget gate wide open
    p.b[0:2] = -40.0  # input gate closed
    c_prev = np.array([0.3, -0.7])
    _, c = lstm_cell_forward(np.ones(4), np.zeros(2), c_prev, p)
    assert c == approx(c_prev, abs=1e-12)


def test_cell_matches_straight_line_reimplementation():
    # independent elementwise transcription of the gate equations
    rng = np.random.default_rng(10)
    p = LstmCellParams.init(5, rng)
    x = rng.normal(size=4)
    h_prev = rng.normal(size=5)
    c_prev = rng.normal(size=5)
    h, c = lstm_cell_forward(x, h_prev, c_prev, p)
    i = expit(p.W_xi @ x + p.W_hi @ h_prev + p.b_i)
    f = expit(p.W_xf @ x + p.W_hf @ h_prev + p.b_f)
    o = expit(p.W_xo @ x + p.W_ho @ h_prev + p.b_o)
    g = np.tanh(p.W_xc @ x + p.W_hc @ h_prev + p.b_c)
    c_ref = f * c_prev + i * g
    h_ref = o * np.tanh(c_ref)
    assert h == approx(h_ref, abs=1e-12)
    assert c == approx(c_ref, abs=1e-12)


def test_bilstm_combines_direction_passes():
    rng = np.random.default_rng(11)
    model = BiLstmModel.init(6, 7, rng)
    window = rng.normal(size=(7, 4))
    combined = bilstm_forward(window, model)
    hf, _ = _run_direction(model.fwd, window[:, None, :], reverse=False)
    hb, _ = _run_direction(model.bwd, window[:, None, :], reverse=True)
    assert combined == approx(0.5 * (hf + hb)[:, 0], abs=1e-12)


def test_bilstm_single_position_window():
    rng = np.random.default_rng(12)
    model = BiLstmModel.init(4, 1, rng)
    window = rng.normal(size=(1, 4))
    combined = bilstm_forward(window, model)
    hf, cf = lstm_cell_forward(window[0], np.zeros(4), np.zeros(4), model.fwd)
    hb, _ = lstm_cell_forward(window[0], np.zeros(4), np.zeros(4), model.bwd)
    assert combined[0] == approx(0.5 * (hf + hb), abs=1e-12)


def test_bilstm_zero_parameters_zero_output():
    model = BiLstmModel(
        fwd=LstmCellParams.zeros(3), bwd=LstmCellParams.zeros(3),
        head_x_w=np.zeros((16, 3)), head_x_b=np.zeros(16),
        head_y_w=np.zeros((16, 3)), head_y_b=np.zeros(16),
        hidden_size=3, word_length=5,
    )
    out = bilstm_forward(np.ones((5, 4)), model)
    assert np.array_equal(out, np.zeros((5, 3)))


def test_word_length_must_be_odd():
    with pytest.raises(ValueError):
        BiLstmModel.init(4, 4, np.random.default_rng(0))


def test_softmax_uniform_for_equal_logits():
    p = head_forward(np.zeros(8), np.zeros((16, 8)), np.zeros(16))
    assert p == approx(np.full(16, 1 / 16), abs=1e-12)


@settings(max_examples=50)
@given(arrays(np.float64, 16, elements=st.floats(-50, 50)))
def test_softmax_valid_distribution(logits):
    p = softmax(logits)
    assert np.all(p >= 0)
    assert np.sum(p) == approx(1.0, abs=1e-12)


@settings(max_examples=25)
@given(arrays(np.float64, 16, elements=st.floats(-30, 30)), st.floats(-100, 100))
def test_softmax_shift_invariant(logits, shift):
    assert softmax(logits + shift) == approx(softmax(logits), abs=1e-12)


def test_loss_perfect_prediction_zero():
    probs = np.zeros((1, 16))
    probs[0, 3] = 1.0
    assert cross_entropy(probs, np.array([3])) == approx(0.0, abs=1e-9)


def test_loss_uniform_prediction():
    probs = np.full((5, 16), 1 / 16)
    assert cross_entropy(probs, np.arange(5)) == approx(np.log(16), abs=1e-12)


def test_loss_clamped_away_from_infinity():
    probs = np.zeros((1, 16))
    probs[0, 0] = 1.0
    assert cross_entropy(probs, np.array([5])) == approx(-np.log(1e-12), rel=1e-6)


def test_logit_gradient_is_probs_minus_onehot():
    # finite-difference check through the softmax head alone
    rng = np.random.default_rng(13)
    logits = rng.normal(size=16)
    target = 4
    analytic = softmax(logits).copy()
    analytic[target] -= 1.0
    h = 1e-6
    for j in range(16):
        bumped = logits.copy()
        bumped[j] += h
        up = -np.log(softmax(bumped)[target])
        bumped[j] -= 2 * h
        dn = -np.log(softmax(bumped)[target])
        assert (up - dn) / (2 * h) == approx(analytic[j], abs=1e-6)


def grad_check(model, x, tx, ty, step=1e-5):
    _, grads = backward(model, x, tx, ty)

    def loss_only():
        px, py, _ = forward_batch(model, x)
        return batch_loss(px, py, tx, ty)

    worst = 0.0
    for name, arr in model.param_items():
        g = grads[name]
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + step
            up = loss_only()
            arr[idx] = orig - step
            dn = loss_only()
            arr[idx] = orig
            fd = (up - dn) / (2 * step)
            denom = max(abs(fd), abs(g[idx]))
            if denom > 1e-10:
                worst = max(worst, abs(fd - g[idx]) / denom)
    return worst


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(7)
    model = BiLstmModel.init(4, 5, rng)
    x = rng.normal(size=(3, 5, 4))
    tx = rng.integers(0, 16, (3, 5))
    ty = rng.integers(0, 16, (3, 5))
    assert grad_check(model, x, tx, ty) < 1e-5


def test_backward_batch_mean_linearity():
    # duplicating a window doubles its share of the mean-gradient weight
    rng = np.random.default_rng(14)
    model = BiLstmModel.init(4, 3, rng)
    w1 = rng.normal(size=(1, 3, 4))
    w2 = rng.normal(size=(1, 3, 4))
    t1 = rng.integers(0, 16, (1, 3))
    t2 = rng.integers(0, 16, (1, 3))
    x_dup = np.concatenate([w1, w2, w2])
    tx_dup = np.concatenate([t1, t2, t2])
    _, g_dup = backward(model, x_dup, tx_dup, tx_dup)
    _, g1 = backward(model, w1, t1, t1)
    _, g2 = backward(model, w2, t2, t2)
    for name in g_dup:
        assert g_dup[name] == approx((g1[name] + 2 * g2[name]) / 3, abs=1e-12)


def test_backward_permutation_invariant():
    rng = np.random.default_rng(15)
    model = BiLstmModel.init(4, 3, rng)
    x = rng.normal(size=(6, 3, 4))
    tx = rng.integers(0, 16, (6, 3))
    ty = rng.integers(0, 16, (6, 3))
    perm = rng.permutation(6)
    _, g = backward(model, x, tx, ty)
    _, gp = backward(model, x[perm], tx[perm], ty[perm])
    for name in g:
        assert g[name] == approx(gp[name], abs=1e-12)


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(16)
    model = BiLstmModel.init(5, 7, rng)
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_model(model, p1)
    loaded = load_model(p1)
    save_model(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    x = rng.normal(size=(100, 7, 4))
    px_a, py_a, _ = forward_batch(model, x)
    px_b, py_b, _ = forward_batch(loaded, x)
    assert np.array_equal(px_a, px_b)
    assert np.array_equal(py_a, py_b)


def test_load_rejects_tampered_dimension(tmp_path):
    import json

    model = BiLstmModel.init(4, 3, np.random.default_rng(17))
    path = tmp_path / "m.json"
    save_model(model, path)
    doc = json.loads(path.read_text())
    doc["tensors"]["fwd.W_xi"]["shape"] = [3, 4]
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointFormatError, match="fwd.W_xi"):
        load_model(path)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("not json at all")
    with pytest.raises(CheckpointFormatError):
        load_model(path)


def test_float32_path_close_to_float64():
    rng = np.random.default_rng(18)
    model = BiLstmModel.init(8, 9, rng)
    x = rng.normal(size=(32, 9, 4))
    p64, _, _ = forward_batch(model, x)
    p32, _, _ = forward_batch(model, x.astype(np.float32))
    assert p32.dtype == np.float32
    assert np.max(np.abs(p64 - p32)) < 1e-5
