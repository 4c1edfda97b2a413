#!/usr/bin/env python3
"""Recompute the F1/F2 cells of the frozen reference scoreboards from their
own precision/recall columns and report the differences row by row.

The per-class rows of the single-model board reproduce to ~1e-6 (rounding
noise of 6-decimal cells). Two kinds of rows cannot reproduce and show up
clearly here: the Total rows (sample-averaged, so mean-of-F differs from
F-of-mean-P/R) and the rare-label rows of the fold-averaged thresholded
board (per-fold variance makes mean-F2 drift from fbeta(mean-P, mean-R)).
"""

import csv
from pathlib import Path

from canopy.metrics import fbeta

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def report(name, f2_only=False):
    print(f"== {name} ==")
    with open(DATA / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    header = f"{'class':<20}{'printed F2':>12}{'recomputed':>12}{'diff':>12}"
    if not f2_only:
        header += f"{'printed F1':>12}{'recomputed':>12}{'diff':>12}"
    print(header)
    for row in rows:
        p, r = float(row["precision"]), float(row["recall"])
        f2p, f2g = float(row["f2_score"]), fbeta(p, r, 2)
        line = f"{row['class']:<20}{f2p:>12.6f}{f2g:>12.6f}{abs(f2g - f2p):>12.2e}"
        if not f2_only:
            f1p, f1g = float(row["f1_score"]), fbeta(p, r, 1)
            line += f"{f1p:>12.6f}{f1g:>12.6f}{abs(f1g - f1p):>12.2e}"
        print(line)
    print()


def main():
    report("single_model_scoreboard.csv")
    report("stacked_thresholded_scoreboard.csv", f2_only=True)


if __name__ == "__main__":
    main()
