"""Cascade decode success rate against received overhead, written as CSV.

Fractions are given as multiples of k (1.15 means 1.15*k packets arrive).
"""

import argparse
import logging
from fractions import Fraction
from pathlib import Path

from erasure import CodeParameters
from erasure.bench import run_overhead_curve, write_overhead_csv
from erasure.cascade import CascadeCodec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=1024)
    ap.add_argument("--l", type=int, default=512)
    ap.add_argument("--c", type=Fraction, default=Fraction(2))
    ap.add_argument("--overheads", default="1.0,1.05,1.1,1.15,1.2,1.25,1.3")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=6)
    ap.add_argument("--peeling-only", action="store_true", help="disable inactivation completion")
    ap.add_argument("--out", type=Path, default=Path("results/overhead_cascade.csv"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    params = CodeParameters(n=args.k * args.l - 64, c=args.c, l=args.l, codec="cascade", seed=args.seed)
    fractions = [Fraction(x) * params.k / params.p for x in args.overheads.split(",")]
    codec = CascadeCodec(inactivation=not args.peeling_only)
    records = run_overhead_curve(params, fractions, trials=args.trials, seed=args.seed, codec=codec)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_overhead_csv(records, args.out)
    for r in records:
        logging.info("%.3f k  -> %.3f", float(r.fraction) * params.p / params.k, float(r.success_rate))


if __name__ == "__main__":
    main()
