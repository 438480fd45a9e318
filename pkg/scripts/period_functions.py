#!/usr/bin/env python3
"""CSV of period functions T(s) for Loud quadratic centers over a (D, F) list."""
import argparse
import csv
import sys

import numpy as np

from planarlab.cycles import LoudParams, Section, critical_periods, period_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--params", default="-0.5,0.5;-0.25,0.75;-1,0.5",
                    help="semicolon separated D,F pairs")
    ap.add_argument("--s", default="0.05:0.95:19", help="section grid lo:hi:count")
    args = ap.parse_args()
    lo, hi, k = args.s.split(":")
    grid = np.linspace(float(lo), float(hi), int(k))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["D", "F", "s", "T", "critical_periods"])
    for pair in args.params.split(";"):
        D, F = (float(v) for v in pair.split(","))
        ps = period_scan(LoudParams(D, F).field(), Section(), grid)
        count = critical_periods(ps).count if len(ps) >= 8 else ""
        for s, T in zip(ps.s, ps.T):
            w.writerow([D, F, f"{s:.6f}", f"{T:.12f}", count])


if __name__ == "__main__":
    main()
