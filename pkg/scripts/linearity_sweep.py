"""Doubling-size timing sweep for both backends, written as CSV.

    python3 scripts/linearity_sweep.py --out results/
"""

import argparse
import logging
from fractions import Fraction
from pathlib import Path

from erasure import CodeParameters
from erasure.bench import check_linearity, run_throughput, write_throughput_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--trials", type=int, default=15)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--max-ratio", type=Fraction, default=Fraction(5, 2))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out.mkdir(parents=True, exist_ok=True)

    cascade = CodeParameters(n=8, c=2, l=512, codec="cascade", seed=args.seed)
    records = run_throughput(cascade, [2**e for e in range(18, 22)], trials=args.trials, seed=args.seed)
    write_throughput_csv(records, args.out / "throughput_cascade.csv")
    logging.info("cascade %s", check_linearity(records, args.max_ratio).summary())

    # MDS has to grow k with n to keep l fixed, so its decode cost is cubic in k
    mds = CodeParameters(n=8, c=2, l=512, codec="mds", seed=args.seed)
    sizes = [k * 512 - 64 for k in (16, 32, 64, 128)]
    records = run_throughput(mds, sizes, trials=max(5, args.trials // 3), seed=args.seed, received=Fraction(1, 2))
    write_throughput_csv(records, args.out / "throughput_mds.csv")
    logging.info("mds     %s", check_linearity(records, args.max_ratio).summary())


if __name__ == "__main__":
    main()
