"""Window construction, Adam optimization and the training/evaluation loop."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .lstm import BiLstmModel, backward, forward_batch
from .txrx import QAM16_BITS


@dataclass
class WindowDataset:
    """Stride-1 sliding windows with per-position targets for both heads."""

    inputs: np.ndarray  # (n_windows, m, 4) standardized
    targets_x: np.ndarray  # (n_windows, m) int
    targets_y: np.ndarray
    scale_mean: np.ndarray  # (4,) standardization offsets from the training split
    scale_std: np.ndarray  # (4,)
    k: int

    def __len__(self):
        return len(self.inputs)

    @property
    def word_length(self):
        return 2 * self.k + 1


def standardization_scale(records):
    """Per-component mean/std of (n, 4) records; std floors at a tiny value."""
    r = np.asarray(records, dtype=float)
    return r.mean(axis=0), np.maximum(r.std(axis=0), 1e-12)


def build_windows(records, labels_x, labels_y, k, scale=None):
    """Slice (n, 4) received records into overlapping words of length 2k + 1.

    scale is a (mean, std) pair; when omitted it is computed from records
    (training split) and should be reused for validation/test data.
    """
    records = np.asarray(records, dtype=float)
    n = len(records)
    m = 2 * k + 1
    if n < m:
        raise ValueError(f"frame of {n} symbols shorter than word length {m}")
    if scale is None:
        scale = standardization_scale(records)
    mean, std = scale
    # training batches run at single precision against float64 master weights
    normed = ((records - mean) / std).astype(np.float32)
    windows = np.lib.stride_tricks.sliding_window_view(normed, (m, 4))[:, 0].copy()
    tx = np.lib.stride_tricks.sliding_window_view(np.asarray(labels_x), m).copy()
    ty = np.lib.stride_tricks.sliding_window_view(np.asarray(labels_y), m).copy()
    return WindowDataset(
        inputs=windows, targets_x=tx, targets_y=ty,
        scale_mean=np.asarray(mean), scale_std=np.asarray(std), k=k,
    )


def split_indices(n_symbols, fractions=(0.6, 0.2, 0.2)):
    """Contiguous train/val/test symbol ranges as (start, stop) pairs."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions {fractions} do not sum to 1")
    n_train = int(round(n_symbols * fractions[0]))
    n_val = int(round(n_symbols * fractions[1]))
    return (0, n_train), (n_train, n_train + n_val), (n_train + n_val, n_symbols)


def make_datasets(records, labels_x, labels_y, k, fractions=(0.6, 0.2, 0.2)):
    """Split a frame into disjoint segments and window each one.

    The standardization scale comes from the training segment and is applied
    unchanged to validation and test.
    """
    spans = split_indices(len(records), fractions)
    (a0, a1), (b0, b1), (c0, c1) = spans
    train = build_windows(records[a0:a1], labels_x[a0:a1], labels_y[a0:a1], k)
    scale = (train.scale_mean, train.scale_std)
    val = build_windows(records[b0:b1], labels_x[b0:b1], labels_y[b0:b1], k, scale)
    test = build_windows(records[c0:c1], labels_x[c0:c1], labels_y[c0:c1], k, scale)
    return train, val, test


@dataclass
class TrainConfig:
    batch_size: int = 512
    max_epochs: int = 400
    patience: int = 20
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    split: tuple = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if min(self.batch_size, self.max_epochs, self.patience) < 1:
            raise ConfigError("batch size, epochs and patience must be positive")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions {self.split} do not sum to 1")


@dataclass
class AdamState:
    """First/second-moment accumulators keyed like BiLstmModel.param_items()."""

    m: dict
    v: dict
    t: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model, alpha=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            m={k: np.zeros_like(a) for k, a in model.param_items()},
            v={k: np.zeros_like(a) for k, a in model.param_items()},
            alpha=alpha, beta1=beta1, beta2=beta2, eps=eps,
        )


def adam_step(model, grads, state):
    """Bias-corrected Adam update, applied in place. Returns (model, state)."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for name, param in model.param_items():
        g = grads[name]
        if g.shape != param.shape:
            raise ValueError(f"gradient {name} shape {g.shape} != param shape {param.shape}")
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = state.m[name] / (1 - b1**state.t)
        v_hat = state.v[name] / (1 - b2**state.t)
        param -= state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    return model, state


def _central_predictions(model, dataset, batch_size=2048):
    """Argmax classes at each window's central position for both heads."""
    k = dataset.k
    out_x = np.empty(len(dataset), dtype=np.int64)
    out_y = np.empty(len(dataset), dtype=np.int64)
    for start in range(0, len(dataset), batch_size):
        x = dataset.inputs[start : start + batch_size]
        probs_x, probs_y, _ = forward_batch(model, x)  # time-major (m, B, 16)
        out_x[start : start + len(x)] = np.argmax(probs_x[k], axis=-1)
        out_y[start : start + len(x)] = np.argmax(probs_y[k], axis=-1)
    return out_x, out_y


def validation_accuracy(model, dataset):
    """Fraction of correct central-symbol decisions over both polarizations."""
    px, py = _central_predictions(model, dataset)
    k = dataset.k
    hits = np.sum(px == dataset.targets_x[:, k]) + np.sum(py == dataset.targets_y[:, k])
    return hits / (2.0 * len(dataset))


def train(model, train_ds, val_ds, cfg, rng):
    """Mini-batch Adam with early stopping on validation symbol accuracy.

    Training windows are reshuffled every epoch from the provided generator.
    The returned model carries the best-validation parameters; history holds
    one record per epoch.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise ConfigError("training and validation splits must be non-empty")
    rng = np.random.default_rng(rng)
    state = AdamState.for_model(
        model, alpha=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps
    )
    best = model.copy()
    best_acc = -1.0
    best_epoch = 0
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_ds))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            loss, grads = backward(
                model, train_ds.inputs[sel], train_ds.targets_x[sel], train_ds.targets_y[sel]
            )
            adam_step(model, grads, state)
            losses.append(loss)
        val_acc = validation_accuracy(model, val_ds)
        history.append(
            {"epoch": epoch, "train_loss": float(np.mean(losses)), "val_accuracy": float(val_acc)}
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best = model.copy()
        elif epoch - best_epoch >= cfg.patience:
            break
    return best, history


_BIT_ERR = np.array([[int(bin(a ^ b).count("1")) for b in range(16)] for a in range(16)])


def bit_errors_between_classes(predicted, actual):
    """Total Gray-mapped bit errors between class index arrays."""
    return int(np.sum(_BIT_ERR[np.asarray(predicted), np.asarray(actual)]))


def evaluate_ber(model, test_ds):
    """Hard-decision BER/SER at the central position of every test window.

    Returns a dict with bit/symbol error counts so callers can pool batches.
    """
    px, py = _central_predictions(model, test_ds)
    k = test_ds.k
    tx, ty = test_ds.targets_x[:, k], test_ds.targets_y[:, k]
    bit_errors = bit_errors_between_classes(px, tx) + bit_errors_between_classes(py, ty)
    sym_errors = int(np.sum(px != tx) + np.sum(py != ty))
    n_bits = 2 * 4 * len(test_ds)
    n_syms = 2 * len(test_ds)
    return {
        "ber": bit_errors / n_bits if n_bits else 0.0,
        "ser": sym_errors / n_syms if n_syms else 0.0,
        "bit_errors": bit_errors,
        "n_bits": n_bits,
        "symbol_errors": sym_errors,
        "n_symbols": n_syms,
    }
