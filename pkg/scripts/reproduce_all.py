#!/usr/bin/env python3
"""Run every acceptance criterion and write a JSON report plus one line per criterion."""
import argparse
import json
import sys
from pathlib import Path

from planarlab.acceptance import CRITERIA, evaluate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results", help="directory for report.json")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--criteria", help="comma list, default all")
    args = ap.parse_args()
    numbers = [int(c) for c in args.criteria.split(",")] if args.criteria else sorted(CRITERIA)
    results = []
    for n in numbers:
        r = evaluate(n, seed=args.seed, workers=args.workers)
        print(r.line(), flush=True)
        results.append(r.to_json())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(results, indent=2, sort_keys=True, default=str))
    sys.exit(0 if all(r["passed"] for r in results) else 1)


if __name__ == "__main__":
    main()
