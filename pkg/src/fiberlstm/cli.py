"""Command-line entry point: simulate | train | evaluate | complexity | sweep."""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import txrx
from .complexity import complexity_sweep, crossover_distance
from .config import load_config
from .errors import ConfigError
from .experiments import run_experiment, sweep, write_results_csv
from .lstm import load_model, save_model
from .training import build_windows, evaluate_ber


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, default=float)
        fh.write("\n")


def cmd_simulate(args):
    """Run transmitter, fiber and receiver front-end; dump equalized records."""
    from .experiments import _equalize, _simulate

    cfg = _load(args)
    if isinstance(cfg.launch_power_dbm, list):
        raise ConfigError("simulate needs a scalar launch_power_dbm")
    out = _out_dir(args)
    power = float(cfg.launch_power_dbm)
    frame, field = _simulate(cfg, power, cfg.neighbor_modulation, cfg.seed, 0, cfg.symbols.total)
    equalizer = cfg.equalizer if not isinstance(cfg.equalizer, list) else cfg.equalizer[0]
    records = _equalize(cfg, equalizer, cfg.dbp_steps_per_span, power, frame, field)
    records.astype("<f8").tofile(out / "rx_symbols.f64")
    _write_json(out / "frame.json", {
        "config": cfg.to_dict(),
        "equalizer": equalizer,
        "labels_x": frame.labels_x.tolist(),
        "labels_y": frame.labels_y.tolist(),
    })
    print(f"wrote {out / 'rx_symbols.f64'} ({len(frame)} symbols)")
    return 0


def cmd_train(args):
    from .experiments import _fit_lstm

    cfg = _load(args)
    if isinstance(cfg.launch_power_dbm, list):
        raise ConfigError("train needs a scalar launch_power_dbm")
    out = _out_dir(args)
    model, scale, info, history, _ = _fit_lstm(cfg, float(cfg.launch_power_dbm), cfg.seed)
    save_model(model, out / "model.json")
    _write_json(out / "history.json", {"training": info, "epochs": history})
    _write_json(out / "scale.json", {"mean": scale[0].tolist(), "std": scale[1].tolist()})
    print(f"trained {info['epochs']} epochs, best val accuracy {info['best_val_accuracy']:.4f}")
    return 0


def cmd_evaluate(args):
    from .experiments import _equalize, _simulate

    cfg = _load(args)
    if isinstance(cfg.launch_power_dbm, list):
        raise ConfigError("evaluate needs a scalar launch_power_dbm")
    out = _out_dir(args)
    model = load_model(args.model)
    scale_doc = json.loads(Path(args.scale).read_text())
    scale = (np.asarray(scale_doc["mean"]), np.asarray(scale_doc["std"]))
    power = float(cfg.launch_power_dbm)
    k = model.word_length // 2
    frame, field = _simulate(cfg, power, cfg.neighbor_modulation, cfg.seed, 0, cfg.symbols.total)
    records = _equalize(cfg, "fde+lstm", cfg.dbp_steps_per_span, power, frame, field)
    start = cfg.symbols.train + cfg.symbols.val
    ds = build_windows(records[start:], frame.labels_x[start:], frame.labels_y[start:], k, scale)
    res = evaluate_ber(model, ds)
    _write_json(out / "evaluation.json", {"config": cfg.to_dict(), **res})
    print(f"ber {res['ber']:.3e} on {res['n_bits']} bits")
    return 0


def cmd_complexity(args):
    cfg = _load(args)
    out = _out_dir(args)
    distances = [50.0 * n for n in range(1, args.max_spans + 1)]
    rows = complexity_sweep(cfg.band, cfg.lstm.hidden_units, cfg.lstm.word_length, distances)
    path = out / "complexity.csv"
    with open(path, "w") as fh:
        cols = ["distance_km", "c_dbp", "c_fde", "c_pred", "c_total_lstm", "band", "L", "m"]
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
    cross = crossover_distance(cfg.band, cfg.lstm.hidden_units, cfg.lstm.word_length)
    print(f"wrote {path}; crossover: {cross if cross is not None else 'none in range'} km")
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    out = _out_dir(args)
    results = sweep(cfg)
    write_results_csv(results, out / "results.csv")
    for idx, res in enumerate(results):
        if res.history:
            _write_json(out / f"history_{idx:04d}.json", {"training": res.training, "epochs": res.history})
    _write_json(out / "summary.json", {
        "config": cfg.to_dict(),
        "points": [
            {**res.to_row(), "ser": res.ser, "bit_errors": res.bit_errors,
             "wall_time_s": res.wall_time_s, "complexity": res.complexity}
            for res in results
        ],
    })
    print(f"wrote {out / 'results.csv'} ({len(results)} points)")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fiberlstm",
        description="Fiber transmission simulation with classical and bi-LSTM equalization",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, extra in (
        ("simulate", cmd_simulate, ()),
        ("train", cmd_train, ()),
        ("evaluate", cmd_evaluate, ("model", "scale")),
        ("complexity", cmd_complexity, ("max_spans",)),
        ("sweep", cmd_sweep, ()),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", required=True, help="output directory")
        if "model" in extra:
            p.add_argument("--model", required=True, help="model checkpoint path")
            p.add_argument("--scale", required=True, help="scale.json from training")
        if "max_spans" in extra:
            p.add_argument("--max-spans", type=int, default=60, dest="max_spans")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
