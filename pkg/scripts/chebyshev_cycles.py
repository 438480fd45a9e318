#!/usr/bin/env python3
"""CSV of crossing limit cycles of the Chebyshev piecewise linear systems for a range of n."""
import argparse
import csv
import sys
from fractions import Fraction

from planarlab.pwl import chebyshev_system, crossing_cycles


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="2:12", help="range lo:hi (inclusive)")
    ap.add_argument("--eps", default="1/1000")
    args = ap.parse_args()
    lo, hi = (int(v) for v in args.n.split(":"))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "x_cycle", "x_zero", "pi_prime", "pi_prime_fd", "classification", "period"])
    for n in range(lo, hi + 1):
        s = chebyshev_system(n, Fraction(args.eps))
        zeros = s.chebyshev_zeros()
        for c in sorted(crossing_cycles(s), key=lambda c: c.point[0]):
            xk = min(zeros, key=lambda z: abs(z - c.point[0]))
            w.writerow([n, f"{c.point[0]:.10f}", f"{xk:.10f}", f"{c.pi_prime:.10f}",
                        f"{c.pi_prime_fd:.10f}", c.classification, f"{c.period:.10f}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
