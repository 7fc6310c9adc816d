#!/usr/bin/env python3
"""Grid over hidden units and word length at a fixed operating point,
showing how channel memory sets the useful window size per band."""

import argparse
from pathlib import Path

from fiberlstm.config import ExperimentConfig, LstmSettings, SymbolBudget
from fiberlstm.experiments import sweep, write_results_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--band", choices="CO", default="O")
    ap.add_argument("--channels", type=int, default=5)
    ap.add_argument("--spans", type=int, default=6)
    ap.add_argument("--power", type=float, default=-5.0)
    ap.add_argument("--hidden", type=int, nargs="+", default=[16])
    ap.add_argument("--context", type=int, nargs="+", default=[0, 1, 3, 5, 10, 15])
    ap.add_argument("--seed", type=int, default=2026)
    ap.add_argument("--out", default="results/word_length_grid.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        band=args.band,
        n_channels=args.channels,
        n_spans=args.spans,
        launch_power_dbm=args.power,
        equalizer="fde+lstm",
        lstm=LstmSettings(hidden_units=list(args.hidden), context_symbols=list(args.context),
                          learning_rate=3e-3),
        symbols=SymbolBudget(train=20000, val=5000, test=5000),
        seed=args.seed,
        max_extra_test_batches=5,
    ).validate()
    results = sweep(cfg, on_result=lambda r: print(
        f"L={r.hidden_units:>3} m={r.word_length:>3}  ber={r.ber:.3e}  ({r.wall_time_s:.0f}s)"
    ))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_results_csv(results, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
