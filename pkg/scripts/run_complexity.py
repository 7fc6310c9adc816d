#!/usr/bin/env python3
"""Multiplications-per-bit comparison of DBP against FDE + bi-LSTM over
distance, including the crossover points for both bands."""

import argparse
from pathlib import Path

from fiberlstm.complexity import complexity_sweep, crossover_distance

COLUMNS = ["distance_km", "c_dbp", "c_fde", "c_pred", "c_total_lstm", "band", "L", "m"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hidden", type=int, default=20)
    ap.add_argument("--word-c", type=int, default=50, dest="word_c")
    ap.add_argument("--word-o", type=int, default=3, dest="word_o")
    ap.add_argument("--max-km", type=float, default=3000, dest="max_km")
    ap.add_argument("--out", default="results/complexity.csv")
    args = ap.parse_args()

    distances = [50.0 * n for n in range(1, int(args.max_km / 50) + 1)]
    rows = []
    for band, word in (("C", args.word_c), ("O", args.word_o)):
        rows += complexity_sweep(band, args.hidden, word, distances)
        cross = crossover_distance(band, args.hidden, word)
        print(f"{band}-band (L={args.hidden}, m={word}): crossover at "
              f"{cross if cross is not None else 'none in range'} km")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in COLUMNS) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
