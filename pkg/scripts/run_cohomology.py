"""Truncated Hochschild cohomology windows over a point, compared with the wedge powers.

    python scripts/run_cohomology.py --max-rank 3 --order 3
"""
import argparse
import time
from math import comb

from algebroid.chart import builtin_chart
from algebroid.enveloping import truncated_cohomology


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-rank", type=int, default=3)
    p.add_argument("--arity", type=int, default=1)
    p.add_argument("--order", type=int, default=3)
    args = p.parse_args()
    print("r  degree  dim  H  wedge  hkr  seconds")
    for r in range(1, args.max_rank + 1):
        start = time.perf_counter()
        rows = truncated_cohomology(builtin_chart("abelian", r), args.arity, args.order)
        elapsed = time.perf_counter() - start
        for row in rows:
            assert row["wedge_dim"] == comb(r, row["degree"] + 1)
            print(f"{r}  {row['degree']:>6}  {row['dim']:>3}  {row['cohomology']}  {row['wedge_dim']:>5}  "
                  f"{row['hkr_classes']:>3}  {elapsed:.2f}")


if __name__ == "__main__":
    main()
