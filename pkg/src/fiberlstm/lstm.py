"""Bidirectional LSTM symbol classifier built from plain numpy.

The recurrent cell follows the standard gated update

    i = sigmoid(W_xi x + W_hi h + b_i)      f, o likewise
    c = f * c_prev + i * tanh(W_xc x + W_hc h + b_c)
    h = o * tanh(c)

run once left-to-right and once right-to-left over each symbol window. The
two hidden states are averaged per position and fed to one 16-way softmax
head per polarization. Gradients come from exact backpropagation through
time; everything stays float64 so finite-difference checks hold tightly.
"""

import json
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import expit

from .errors import CheckpointFormatError

INPUT_SIZE = 4  # (Ix, Qx, Iy, Qy) per symbol
N_CLASSES = 16
_GATES = ("i", "f", "o", "c")


@dataclass
class LstmCellParams:
    """One direction's weights, stored stacked by gate in (i, f, o, c) order.

    w_x is (4L, 4), w_h is (4L, L), b is (4L,). The per-gate views below
    expose the conventional per-gate matrices.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray

    @property
    def hidden_size(self):
        return self.w_h.shape[1]

    def _gate(self, arr, gate):
        L = self.hidden_size
        k = _GATES.index(gate)
        return arr[k * L : (k + 1) * L]

    # spec-level field names
    @property
    def W_xi(self):
        return self._gate(self.w_x, "i")

    @property
    def W_xf(self):
        return self._gate(self.w_x, "f")

    @property
    def W_xo(self):
        return self._gate(self.w_x, "o")

    @property
    def W_xc(self):
        return self._gate(self.w_x, "c")

    @property
    def W_hi(self):
        return self._gate(self.w_h, "i")

    @property
    def W_hf(self):
        return self._gate(self.w_h, "f")

    @property
    def W_ho(self):
        return self._gate(self.w_h, "o")

    @property
    def W_hc(self):
        return self._gate(self.w_h, "c")

    @property
    def b_i(self):
        return self._gate(self.b, "i")

    @property
    def b_f(self):
        return self._gate(self.b, "f")

    @property
    def b_o(self):
        return self._gate(self.b, "o")

    @property
    def b_c(self):
        return self._gate(self.b, "c")

    @classmethod
    def zeros(cls, hidden_size):
        return cls(
            w_x=np.zeros((4 * hidden_size, INPUT_SIZE)),
            w_h=np.zeros((4 * hidden_size, hidden_size)),
            b=np.zeros(4 * hidden_size),
        )

    @classmethod
    def init(cls, hidden_size, rng):
        """Glorot-uniform input kernels, orthogonal recurrent kernels,
        zero biases except forget gate at 1."""
        L = hidden_size
        limit = np.sqrt(6.0 / (INPUT_SIZE + L))
        w_x = rng.uniform(-limit, limit, size=(4 * L, INPUT_SIZE))
        blocks = []
        for _ in _GATES:
            q, r = np.linalg.qr(rng.standard_normal((L, L)))
            blocks.append(q * np.sign(np.diag(r)))
        w_h = np.vstack(blocks)
        b = np.zeros(4 * L)
        b[L : 2 * L] = 1.0  # forget-gate bias
        return cls(w_x=w_x, w_h=w_h, b=b)


@dataclass
class BiLstmModel:
    """Shared bi-LSTM body with one softmax head per polarization."""

    fwd: LstmCellParams
    bwd: LstmCellParams
    head_x_w: np.ndarray  # (16, L)
    head_x_b: np.ndarray  # (16,)
    head_y_w: np.ndarray
    head_y_b: np.ndarray
    hidden_size: int
    word_length: int

    def __post_init__(self):
        if self.word_length % 2 != 1:
            raise ValueError("word length must be odd (m = 2k + 1)")

    @classmethod
    def init(cls, hidden_size, word_length, rng):
        rng = np.random.default_rng(rng)
        limit = np.sqrt(6.0 / (hidden_size + N_CLASSES))
        return cls(
            fwd=LstmCellParams.init(hidden_size, rng),
            bwd=LstmCellParams.init(hidden_size, rng),
            head_x_w=rng.uniform(-limit, limit, size=(N_CLASSES, hidden_size)),
            head_x_b=np.zeros(N_CLASSES),
            head_y_w=rng.uniform(-limit, limit, size=(N_CLASSES, hidden_size)),
            head_y_b=np.zeros(N_CLASSES),
            hidden_size=hidden_size,
            word_length=word_length,
        )

    def param_items(self):
        """Ordered (name, array) pairs covering every trainable tensor."""
        return [
            ("fwd.w_x", self.fwd.w_x),
            ("fwd.w_h", self.fwd.w_h),
            ("fwd.b", self.fwd.b),
            ("bwd.w_x", self.bwd.w_x),
            ("bwd.w_h", self.bwd.w_h),
            ("bwd.b", self.bwd.b),
            ("head_x.w", self.head_x_w),
            ("head_x.b", self.head_x_b),
            ("head_y.w", self.head_y_w),
            ("head_y.b", self.head_y_b),
        ]

    def copy(self):
        return BiLstmModel(
            fwd=LstmCellParams(self.fwd.w_x.copy(), self.fwd.w_h.copy(), self.fwd.b.copy()),
            bwd=LstmCellParams(self.bwd.w_x.copy(), self.bwd.w_h.copy(), self.bwd.b.copy()),
            head_x_w=self.head_x_w.copy(),
            head_x_b=self.head_x_b.copy(),
            head_y_w=self.head_y_w.copy(),
            head_y_b=self.head_y_b.copy(),
            hidden_size=self.hidden_size,
            word_length=self.word_length,
        )


def lstm_cell_forward(x_t, h_prev, c_prev, params):
    """Single cell update on 1-D vectors; returns (h_t, c_t)."""
    x_t = np.asarray(x_t, dtype=float)
    z = params.w_x @ x_t + params.w_h @ h_prev + params.b
    L = params.hidden_size
    i = expit(z[:L])
    f = expit(z[L : 2 * L])
    o = expit(z[2 * L : 3 * L])
    g = np.tanh(z[3 * L :])
    c_t = f * c_prev + i * g
    return o * np.tanh(c_t), c_t


def _sigmoid(z):
    # same values as scipy's expit; large negative z overflows exp to inf -> 0
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _run_direction(params, x_tm, reverse):
    """Batched pass over time-major input (m, B, 4).

    Returns hidden states (m, B, L) and the BPTT cache. The input projection
    is hoisted out of the recurrent loop; per step that leaves one
    (B, L) x (L, 4L) matmul and elementwise updates written straight into
    the cache arrays. Arithmetic follows the input dtype: float32 batches
    train at single precision against float64 master weights, float64
    batches give gradients tight enough for finite-difference checks.
    """
    m, batch, _ = x_tm.shape
    L = params.hidden_size
    dt = x_tm.dtype
    w_x_t = params.w_x.T.astype(dt, copy=False)
    w_h_t = params.w_h.T.astype(dt, copy=False)
    b = params.b.astype(dt, copy=False)
    gates = np.empty((m, batch, 4 * L), dt)  # sigmoid(i, f, o) and tanh candidate
    cells = np.empty((m, batch, L), dt)
    tanh_c = np.empty((m, batch, L), dt)
    hidden = np.empty((m, batch, L), dt)
    xz = (x_tm.reshape(m * batch, -1) @ w_x_t).reshape(m, batch, 4 * L)
    xz += b
    zbuf = np.empty((batch, 4 * L), dt)
    ig = np.empty((batch, L), dt)
    zeros = np.zeros((batch, L), dt)
    h, c_prev = zeros, zeros
    order = range(m - 1, -1, -1) if reverse else range(m)
    with np.errstate(over="ignore"):
        for t in order:
            np.dot(h, w_h_t, out=zbuf)
            zbuf += xz[t]
            gt = gates[t]
            sig = gt[:, : 3 * L]
            np.negative(zbuf[:, : 3 * L], out=sig)
            np.exp(sig, out=sig)
            sig += 1.0
            np.reciprocal(sig, out=sig)
            np.tanh(zbuf[:, 3 * L :], out=gt[:, 3 * L :])
            c = cells[t]
            np.multiply(gt[:, L : 2 * L], c_prev, out=c)  # forget * c_prev
            np.multiply(gt[:, :L], gt[:, 3 * L :], out=ig)  # input * candidate
            c += ig
            np.tanh(c, out=tanh_c[t])
            np.multiply(gt[:, 2 * L : 3 * L], tanh_c[t], out=hidden[t])
            h, c_prev = hidden[t], c
    return hidden, {
        "gates": gates, "cells": cells, "tanh_c": tanh_c, "hidden": hidden,
        "x": x_tm, "reverse": reverse,
    }


@njit(cache=True)
def _bptt_kernel(gates, cells, tanh_c, d_hidden, w_h, dz_all, reverse):
    """Elementwise BPTT recursion; fills dz_all with pre-activation gradients."""
    m, batch, L = tanh_c.shape
    dh_next = np.zeros((batch, L), gates.dtype)
    dc_next = np.zeros((batch, L), gates.dtype)
    for s in range(m):
        t = s if reverse else m - 1 - s
        p = t + 1 if reverse else t - 1
        dz = dz_all[t]
        for bi in range(batch):
            for j in range(L):
                i_ = gates[t, bi, j]
                f_ = gates[t, bi, L + j]
                o_ = gates[t, bi, 2 * L + j]
                g_ = gates[t, bi, 3 * L + j]
                tc_ = tanh_c[t, bi, j]
                c_prev = cells[p, bi, j] if 0 <= p < m else 0.0
                dh = d_hidden[t, bi, j] + dh_next[bi, j]
                dc = dc_next[bi, j] + dh * o_ * (1.0 - tc_ * tc_)
                dz[bi, j] = dc * g_ * i_ * (1.0 - i_)
                dz[bi, L + j] = dc * c_prev * f_ * (1.0 - f_)
                dz[bi, 2 * L + j] = dh * tc_ * o_ * (1.0 - o_)
                dz[bi, 3 * L + j] = dc * i_ * (1.0 - g_ * g_)
                dc_next[bi, j] = dc * f_
        dh_next = np.dot(dz, w_h)


def _backprop_direction(params, cache, d_hidden):
    """Exact gradients for one direction given d(loss)/d(hidden states) (m, B, L)."""
    x_tm = cache["x"]
    m, batch, _ = x_tm.shape
    L = params.hidden_size
    dt = x_tm.dtype
    reverse = cache["reverse"]
    dz_all = np.empty((m, batch, 4 * L), dt)
    _bptt_kernel(
        cache["gates"], cache["cells"], cache["tanh_c"],
        np.ascontiguousarray(d_hidden), params.w_h.astype(dt, copy=False), dz_all, reverse,
    )
    flat_dz = dz_all.reshape(m * batch, 4 * L)
    hidden = cache["hidden"]
    # previous hidden states are the neighbouring positions; boundary step has none
    if reverse:
        dw_h = dz_all[:-1].reshape(-1, 4 * L).T @ hidden[1:].reshape(-1, L)
    else:
        dw_h = dz_all[1:].reshape(-1, 4 * L).T @ hidden[:-1].reshape(-1, L)
    return {
        "w_x": flat_dz.T @ x_tm.reshape(m * batch, -1),
        "w_h": dw_h,
        "b": flat_dz.sum(axis=0),
    }


def bilstm_forward(window, model):
    """Combined per-position hidden states for one (m, 4) window."""
    x_tm = np.asarray(window, dtype=float)[:, None, :]
    hf, _ = _run_direction(model.fwd, x_tm, reverse=False)
    hb, _ = _run_direction(model.bwd, x_tm, reverse=True)
    return 0.5 * (hf + hb)[:, 0]


def softmax(z, axis=-1):
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def head_forward(h, weight, bias):
    """Affine map plus softmax over the 16 classes."""
    h = np.asarray(h)
    w = weight.T.astype(h.dtype, copy=False)
    return softmax(h @ w + bias.astype(h.dtype, copy=False), axis=-1)


def cross_entropy(probs, targets):
    """Mean -ln p[target]; probabilities clamped at 1e-12."""
    probs = np.asarray(probs)
    targets = np.asarray(targets, dtype=np.int64)
    picked = np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]
    return float(np.mean(-np.log(np.maximum(picked, 1e-12))))


def forward_batch(model, x):
    """Class probabilities for a batch of windows (B, m, 4).

    Returns (probs_x, probs_y, caches); the probability arrays are
    time-major, shaped (m, B, 16), so probs[t] covers position t of every
    window in the batch.
    """
    x = np.asarray(x)
    if x.dtype not in (np.float32, np.float64):
        x = x.astype(np.float64)
    x_tm = np.ascontiguousarray(x.transpose(1, 0, 2))
    hf, cache_f = _run_direction(model.fwd, x_tm, reverse=False)
    hb, cache_b = _run_direction(model.bwd, x_tm, reverse=True)
    hc = 0.5 * (hf + hb)
    probs_x = head_forward(hc, model.head_x_w, model.head_x_b)
    probs_y = head_forward(hc, model.head_y_w, model.head_y_b)
    return probs_x, probs_y, (cache_f, cache_b, hc)


def batch_loss(probs_x, probs_y, targets_x, targets_y):
    """Mean categorical cross-entropy over positions and both heads.

    Probabilities are time-major (m, B, 16); targets are (B, m).
    """
    tx = np.asarray(targets_x, dtype=np.int64).T
    ty = np.asarray(targets_y, dtype=np.int64).T
    return 0.5 * (cross_entropy(probs_x, tx) + cross_entropy(probs_y, ty))


def _dlogits(probs, targets_tm, norm):
    # (p - onehot) / (batch * positions * heads)
    d = probs.copy()
    idx = targets_tm[..., None]
    np.put_along_axis(d, idx, np.take_along_axis(d, idx, axis=-1) - 1.0, axis=-1)
    d *= norm
    return d


def backward(model, x, targets_x, targets_y):
    """Loss and exact gradients of the mean batch loss for every parameter.

    Returns (loss, grads) where grads maps the names of param_items() to
    arrays of matching shape.
    """
    x = np.asarray(x)
    if x.dtype not in (np.float32, np.float64):
        x = x.astype(np.float64)
    batch, m, _ = x.shape
    probs_x, probs_y, (cache_f, cache_b, hc) = forward_batch(model, x)
    loss = batch_loss(probs_x, probs_y, targets_x, targets_y)

    norm = 1.0 / (batch * m * 2)
    dlx = _dlogits(probs_x, np.asarray(targets_x, dtype=np.int64).T, norm)
    dly = _dlogits(probs_y, np.asarray(targets_y, dtype=np.int64).T, norm)

    flat_h = hc.reshape(-1, model.hidden_size)
    grads = {
        "head_x.w": dlx.reshape(-1, N_CLASSES).T @ flat_h,
        "head_x.b": dlx.reshape(-1, N_CLASSES).sum(axis=0),
        "head_y.w": dly.reshape(-1, N_CLASSES).T @ flat_h,
        "head_y.b": dly.reshape(-1, N_CLASSES).sum(axis=0),
    }
    d_hc = dlx @ model.head_x_w + dly @ model.head_y_w
    d_dir = 0.5 * d_hc
    for prefix, params, cache in (("fwd", model.fwd, cache_f), ("bwd", model.bwd, cache_b)):
        g = _backprop_direction(params, cache, d_dir)
        for key, val in g.items():
            grads[f"{prefix}.{key}"] = val
    return loss, grads


# --- checkpoint io ---------------------------------------------------------

_CELL_TENSORS = ("W_xi", "W_xf", "W_xo", "W_xc", "W_hi", "W_hf", "W_ho", "W_hc", "b_i", "b_f", "b_o", "b_c")


def save_model(model, path):
    """Write a self-describing text checkpoint (JSON, row-major float lists)."""
    doc = {"format": "fiberlstm-bilstm", "version": 1,
           "hidden_size": model.hidden_size, "word_length": model.word_length,
           "tensors": {}}
    for direction in ("fwd", "bwd"):
        cell = getattr(model, direction)
        for name in _CELL_TENSORS:
            arr = np.asarray(getattr(cell, name))
            doc["tensors"][f"{direction}.{name}"] = {"shape": list(arr.shape), "data": arr.ravel().tolist()}
    for name, arr in (("head_x.w", model.head_x_w), ("head_x.b", model.head_x_b),
                      ("head_y.w", model.head_y_w), ("head_y.b", model.head_y_b)):
        doc["tensors"][name] = {"shape": list(arr.shape), "data": arr.ravel().tolist()}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _take_tensor(tensors, name, shape):
    if name not in tensors:
        raise CheckpointFormatError(f"missing tensor {name!r}")
    entry = tensors[name]
    declared = tuple(entry.get("shape", ()))
    if declared != shape:
        raise CheckpointFormatError(f"tensor {name!r}: expected shape {shape}, file declares {declared}")
    data = np.array(entry.get("data", []), dtype=float)
    if data.size != int(np.prod(shape)):
        raise CheckpointFormatError(
            f"tensor {name!r}: {data.size} values for declared shape {declared}"
        )
    return data.reshape(shape)


def load_model(path):
    """Read a checkpoint written by save_model, validating every dimension."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise CheckpointFormatError(f"not a valid checkpoint document: {err}") from err
    if doc.get("format") != "fiberlstm-bilstm":
        raise CheckpointFormatError("unrecognized checkpoint format tag")
    try:
        L = int(doc["hidden_size"])
        m = int(doc["word_length"])
    except (KeyError, TypeError, ValueError) as err:
        raise CheckpointFormatError(f"bad or missing dimensions: {err}") from err
    if L < 1 or m < 1 or m % 2 == 0:
        raise CheckpointFormatError(f"invalid dimensions hidden_size={L} word_length={m}")
    tensors = doc.get("tensors", {})
    cells = {}
    for direction in ("fwd", "bwd"):
        w_x = np.vstack([_take_tensor(tensors, f"{direction}.W_x{g}", (L, INPUT_SIZE)) for g in _GATES])
        w_h = np.vstack([_take_tensor(tensors, f"{direction}.W_h{g}", (L, L)) for g in _GATES])
        b = np.concatenate([_take_tensor(tensors, f"{direction}.b_{g}", (L,)) for g in _GATES])
        cells[direction] = LstmCellParams(w_x=w_x, w_h=w_h, b=b)
    return BiLstmModel(
        fwd=cells["fwd"],
        bwd=cells["bwd"],
        head_x_w=_take_tensor(tensors, "head_x.w", (N_CLASSES, L)),
        head_x_b=_take_tensor(tensors, "head_x.b", (N_CLASSES,)),
        head_y_w=_take_tensor(tensors, "head_y.w", (N_CLASSES, L)),
        head_y_b=_take_tensor(tensors, "head_y.b", (N_CLASSES,)),
        hidden_size=L,
        word_length=m,
    )
