"""End-to-end experiment runner: transmit, propagate, equalize, train, count errors.

Every run is a pure function of its configuration; all randomness flows from
named SeedSequence-derived streams so reruns reproduce results bit for bit.
"""

import csv
import itertools
import time
from dataclasses import dataclass, replace

import numpy as np

from . import txrx
from .complexity import c_pred, dbp_cost_for_link, fde_cost_for_link
from .config import ExperimentConfig, LstmSettings
from .dsp import DbpConfig, dbp, fde, walkoff_correction
from .errors import ConfigError
from .fiber import propagate_link
from .lstm import BiLstmModel
from .training import (
    TrainConfig,
    bit_errors_between_classes,
    build_windows,
    evaluate_ber,
    make_datasets,
    train,
)

CSV_COLUMNS = [
    "band", "n_channels", "distance_km", "power_dbm", "equalizer",
    "steps_per_span", "L", "m", "ber", "n_bits", "seed",
]

# stream roles for named seed derivation
_ROLE_DATA, _ROLE_ASE, _ROLE_SHUFFLE, _ROLE_INIT, _ROLE_NEIGHBOR = range(5)
# batch index reserved for a separate training-condition simulation, far above
# any achievable extra-test-batch index
_TRAIN_BATCH = 2**20


def derive_seed(base_seed, index):
    """Stable per-point seed for sweeps, recorded alongside each result."""
    return int(np.random.SeedSequence((int(base_seed), int(index))).generate_state(1)[0])


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence((int(seed), *map(int, key))))


@dataclass
class ExperimentResult:
    band: str
    n_channels: int
    distance_km: float
    power_dbm: float
    equalizer: str
    steps_per_span: int
    hidden_units: int
    word_length: int
    ber: float
    ser: float
    bit_errors: int
    n_bits: int
    seed: int
    training: dict
    history: list
    complexity: dict
    config: dict
    wall_time_s: float

    def to_row(self):
        return {
            "band": self.band,
            "n_channels": self.n_channels,
            "distance_km": self.distance_km,
            "power_dbm": self.power_dbm,
            "equalizer": self.equalizer,
            "steps_per_span": self.steps_per_span,
            "L": self.hidden_units,
            "m": self.word_length,
            "ber": self.ber,
            "n_bits": self.n_bits,
            "seed": self.seed,
        }


def _simulate(cfg, power_dbm, neighbor_mod, seed, batch_index, n_symbols):
    """One transmission: returns (coi frame, received field with COI at 0 Hz)."""
    link = cfg.link()
    coi = txrx.central_channel_index(cfg.n_channels)
    channels = []
    frame_coi = None
    for ch in range(cfg.n_channels):
        if ch == coi:
            frame = txrx.build_polmux_frame(
                _rng(seed, _ROLE_DATA, batch_index), n_symbols, cfg.baud_rate, "16qam"
            )
            frame_coi = frame
        else:
            frame = txrx.build_polmux_frame(
                _rng(seed, _ROLE_NEIGHBOR, ch, batch_index), n_symbols, cfg.baud_rate, neighbor_mod
            )
        channels.append(txrx.modulate(frame, cfg.samples_per_symbol, power_dbm, cfg.rolloff))
    wave = txrx.wdm_mux(channels, cfg.spacing_ghz * 1e9) if len(channels) > 1 else channels[0]
    field = propagate_link(wave, link, _rng(seed, _ROLE_ASE, batch_index))
    offset = txrx.channel_offsets(cfg.n_channels, cfg.spacing_ghz * 1e9)[coi]
    if offset != 0.0:
        # move the measured channel to baseband and undo its walk-off delay
        field = txrx.freq_shift(field, -offset)
        field = walkoff_correction(field, link.fiber.beta2_ps2_per_km, link.total_length_km, offset)
    return frame_coi, field


def _equalize(cfg, equalizer, dbp_steps, power_dbm, frame, field):
    """Aligned symbol-rate records after the selected equalizer path."""
    link = cfg.link()
    if equalizer in ("fde", "fde+lstm"):
        _, wave4 = txrx.rx_front_end(field, len(frame), cfg.rolloff)
        equalized = fde(wave4, link.fiber.beta2_ps2_per_km, link.total_length_km)
        records = txrx.symbol_records(equalized)
    elif equalizer == "dbp":
        dbp_cfg = DbpConfig(link=link, steps_per_span=dbp_steps, launch_power_dbm=power_dbm)
        if cfg.dbp_samples_per_symbol == cfg.samples_per_symbol:
            # back-propagate the raw field, then the normal front-end
            records, _ = txrx.rx_front_end(dbp(field, dbp_cfg), len(frame), cfg.rolloff)
        else:
            _, wave4 = txrx.rx_front_end(field, len(frame), cfg.rolloff)
            records = txrx.symbol_records(dbp(wave4, dbp_cfg))
    else:
        raise ConfigError(f"unknown equalizer {equalizer!r}")
    return txrx.align_to_reference(records, frame)


def _classical_errors(records, frame, start, stop):
    rx_x, rx_y = txrx.records_to_complex(records[start:stop])
    cx, _ = txrx.demap_hard(rx_x)
    cy, _ = txrx.demap_hard(rx_y)
    bit_errors = bit_errors_between_classes(cx, frame.labels_x[start:stop])
    bit_errors += bit_errors_between_classes(cy, frame.labels_y[start:stop])
    n = stop - start
    sym_errors = int(np.sum(cx != frame.labels_x[start:stop]) + np.sum(cy != frame.labels_y[start:stop]))
    return {"bit_errors": bit_errors, "n_bits": 8 * n, "symbol_errors": sym_errors, "n_symbols": 2 * n}


def _train_condition(cfg, power_dbm):
    """(power, neighbor modulation) the model trains under; mismatch-aware."""
    train_power = cfg.train_power_dbm if cfg.train_power_dbm is not None else power_dbm
    train_mod = cfg.train_neighbor_modulation or cfg.neighbor_modulation
    return float(train_power), train_mod


def _fit_lstm(cfg, power_dbm, seed):
    """Simulate training data at the training condition and fit the model."""
    train_power, train_mod = _train_condition(cfg, power_dbm)
    mismatch = (train_power != power_dbm) or (train_mod != cfg.neighbor_modulation)
    batch = _TRAIN_BATCH if mismatch else 0
    frame, field = _simulate(cfg, train_power, train_mod, seed, batch, cfg.symbols.total)
    records = _equalize(cfg, "fde+lstm", cfg.dbp_steps_per_span, train_power, frame, field)
    train_ds, val_ds, test_ds = make_datasets(
        records, frame.labels_x, frame.labels_y, cfg.lstm.context_symbols, cfg.symbols.fractions
    )
    model = BiLstmModel.init(cfg.lstm.hidden_units, cfg.lstm.word_length, _rng(seed, _ROLE_INIT))
    tc = TrainConfig(
        batch_size=cfg.lstm.batch_size,
        max_epochs=cfg.lstm.max_epochs,
        patience=cfg.lstm.patience,
        learning_rate=cfg.lstm.learning_rate,
        split=cfg.symbols.fractions,
    )
    model, history = train(model, train_ds, val_ds, tc, _rng(seed, _ROLE_SHUFFLE))
    scale = (train_ds.scale_mean, train_ds.scale_std)
    info = {
        "epochs": len(history),
        "best_val_accuracy": max(h["val_accuracy"] for h in history),
        "final_train_loss": history[-1]["train_loss"],
        "train_power_dbm": train_power,
        "train_neighbor_modulation": train_mod,
    }
    return model, scale, info, history, (frame, records, test_ds, mismatch)


def run_experiment(cfg, pretrained=None):
    """Execute one experiment point and count errors on held-out symbols.

    pretrained, when given, is a (model, scale, info) triple reused across
    points of a mismatch sweep instead of retraining.
    """
    cfg.validate()
    for name in ("launch_power_dbm", "equalizer", "dbp_steps_per_span"):
        if isinstance(getattr(cfg, name), list):
            raise ConfigError(f"run_experiment needs a scalar {name}; use sweep() for axes")
    t0 = time.perf_counter()
    power = float(cfg.launch_power_dbm)
    equalizer = cfg.equalizer
    seed = cfg.seed
    k = cfg.lstm.context_symbols

    model = scale = training_info = None
    history = []
    counts = None
    if equalizer == "fde+lstm":
        if pretrained is not None:
            model, scale, training_info = pretrained
            frame, field = _simulate(cfg, power, cfg.neighbor_modulation, seed, 0, cfg.symbols.total)
            records = _equalize(cfg, equalizer, cfg.dbp_steps_per_span, power, frame, field)
            (t0s, t1s) = (cfg.symbols.train + cfg.symbols.val, cfg.symbols.total)
            test_ds = build_windows(
                records[t0s:t1s], frame.labels_x[t0s:t1s], frame.labels_y[t0s:t1s], k, scale
            )
            counts = evaluate_ber(model, test_ds)
        else:
            model, scale, training_info, history, ctx = _fit_lstm(cfg, power, seed)
            frame, records, test_ds, mismatch = ctx
            if mismatch:
                # the training simulation ran at the training condition; evaluate
                # on fresh data at the test condition
                frame, field = _simulate(cfg, power, cfg.neighbor_modulation, seed, 0, cfg.symbols.total)
                records = _equalize(cfg, equalizer, cfg.dbp_steps_per_span, power, frame, field)
                t0s = cfg.symbols.train + cfg.symbols.val
                test_ds = build_windows(
                    records[t0s:], frame.labels_x[t0s:], frame.labels_y[t0s:], k, scale
                )
            counts = evaluate_ber(model, test_ds)
    else:
        frame, field = _simulate(cfg, power, cfg.neighbor_modulation, seed, 0, cfg.symbols.total)
        records = _equalize(cfg, equalizer, cfg.dbp_steps_per_span, power, frame, field)
        counts = _classical_errors(records, frame, cfg.symbols.train + cfg.symbols.val, cfg.symbols.total)
        counts = {"ber": counts["bit_errors"] / counts["n_bits"], "ser": counts["symbol_errors"] / counts["n_symbols"], **counts}

    bit_errors = counts["bit_errors"]
    n_bits = counts["n_bits"]
    sym_errors = counts.get("symbol_errors", 0)
    n_syms = counts.get("n_symbols", 0)
    for batch in range(1, cfg.max_extra_test_batches + 1):
        if bit_errors >= cfg.min_bit_errors:
            break
        bframe, bfield = _simulate(
            cfg, power, cfg.neighbor_modulation, seed, batch, cfg.extra_test_batch_symbols
        )
        brecords = _equalize(cfg, equalizer, cfg.dbp_steps_per_span, power, bframe, bfield)
        if equalizer == "fde+lstm":
            bds = build_windows(brecords, bframe.labels_x, bframe.labels_y, k, scale)
            extra = evaluate_ber(model, bds)
        else:
            extra = _classical_errors(brecords, bframe, 0, len(bframe))
        bit_errors += extra["bit_errors"]
        n_bits += extra["n_bits"]
        sym_errors += extra["symbol_errors"]
        n_syms += extra["n_symbols"]

    link = cfg.link()
    complexity = {
        "c_dbp": dbp_cost_for_link(link.fiber.beta2_ps2_per_km, cfg.n_spans, link.fiber.span_km)
        if cfg.n_spans else 0.0,
        "c_fde": fde_cost_for_link(link.fiber.beta2_ps2_per_km, link.total_length_km)
        if cfg.n_spans else 0.0,
        "c_pred": c_pred(cfg.lstm.hidden_units, cfg.lstm.word_length),
    }
    return ExperimentResult(
        band=cfg.band,
        n_channels=cfg.n_channels,
        distance_km=link.total_length_km,
        power_dbm=power,
        equalizer=equalizer,
        steps_per_span=cfg.dbp_steps_per_span if equalizer == "dbp" else 0,
        hidden_units=cfg.lstm.hidden_units if equalizer == "fde+lstm" else 0,
        word_length=cfg.lstm.word_length if equalizer == "fde+lstm" else 0,
        ber=bit_errors / n_bits if n_bits else 0.0,
        ser=sym_errors / n_syms if n_syms else 0.0,
        bit_errors=bit_errors,
        n_bits=n_bits,
        seed=seed,
        training=training_info,
        history=history,
        complexity=complexity,
        config=cfg.to_dict(),
        wall_time_s=time.perf_counter() - t0,
    )


def _axis(value):
    return value if isinstance(value, list) else [value]


def sweep_points(cfg):
    """Deterministic Cartesian expansion of the list-valued config axes."""
    points = []
    for eq, power, steps, hidden, context in itertools.product(
        _axis(cfg.equalizer),
        _axis(cfg.launch_power_dbm),
        _axis(cfg.dbp_steps_per_span),
        _axis(cfg.lstm.hidden_units),
        _axis(cfg.lstm.context_symbols),
    ):
        points.append(
            replace(
                cfg,
                equalizer=eq,
                launch_power_dbm=float(power),
                dbp_steps_per_span=int(steps),
                lstm=replace(cfg.lstm, hidden_units=int(hidden), context_symbols=int(context)),
            )
        )
    return points


def sweep(cfg, on_result=None):
    """Run every point of a sweep with per-point derived seeds.

    With a fixed training condition (train_power_dbm / train_neighbor_
    modulation set) the model is trained once per (L, k) combination and
    reused across test points. Point failures are recorded as NaN rows
    rather than aborting the sweep.
    """
    cfg.validate()
    results = []
    cache = {}
    mismatch_mode = cfg.train_power_dbm is not None or cfg.train_neighbor_modulation is not None
    for index, point in enumerate(sweep_points(cfg)):
        point = replace(point, seed=derive_seed(cfg.seed, index))
        pretrained = None
        if mismatch_mode and point.equalizer == "fde+lstm":
            train_power, train_mod = _train_condition(point, float(point.launch_power_dbm))
            key = (point.lstm.hidden_units, point.lstm.context_symbols, train_power, train_mod)
            if key not in cache:
                train_seed = derive_seed(cfg.seed, 2**32 + len(cache))
                train_cfg = replace(point, seed=train_seed)
                model, scale, info, _, _ = _fit_lstm(train_cfg, float(point.launch_power_dbm), train_seed)
                cache[key] = (model, scale, info)
            pretrained = cache[key]
        try:
            result = run_experiment(point, pretrained=pretrained)
        except (ArithmeticError, ValueError) as err:
            result = ExperimentResult(
                band=point.band, n_channels=point.n_channels,
                distance_km=point.n_spans * point.fiber_params().span_km,
                power_dbm=float(point.launch_power_dbm), equalizer=point.equalizer,
                steps_per_span=point.dbp_steps_per_span if point.equalizer == "dbp" else 0,
                hidden_units=point.lstm.hidden_units if point.equalizer == "fde+lstm" else 0,
                word_length=point.lstm.word_length if point.equalizer == "fde+lstm" else 0,
                ber=float("nan"), ser=float("nan"), bit_errors=0, n_bits=0,
                seed=point.seed, training={"error": str(err)}, history=[],
                complexity={}, config=point.to_dict(), wall_time_s=0.0,
            )
        results.append(result)
        if on_result is not None:
            on_result(result)
    return results


def write_results_csv(results, path):
    """Fixed-order CSV (band, n_channels, distance_km, power_dbm, equalizer,
    steps_per_span, L, m, ber, n_bits, seed)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for res in results:
            row = res.to_row()
            row["ber"] = repr(float(row["ber"]))
            row["distance_km"] = repr(float(row["distance_km"]))
            row["power_dbm"] = repr(float(row["power_dbm"]))
            writer.writerow(row)
