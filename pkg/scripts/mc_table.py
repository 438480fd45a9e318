#!/usr/bin/env python3
"""CSV of Monte-Carlo stability probabilities for random Gaussian polynomials."""
import argparse
import csv
import sys

from planarlab.stability import mc_probability


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-order", type=int, default=5)
    ap.add_argument("--trials", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["kind", "n", "trials", "successes", "estimate", "stderr"])
    for kind in ("differential", "difference"):
        for n in range(1, args.max_order + 1):
            b = mc_probability(n, kind, args.trials, args.seed, args.workers)
            w.writerow([kind, n, b.trials, b.successes, f"{b.estimate:.6g}", f"{b.stderr:.3g}"])


if __name__ == "__main__":
    main()
