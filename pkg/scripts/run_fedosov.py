"""Flatten the resolution on every builtin chart and tabulate the residual checks.

    python scripts/run_fedosov.py --degree 4 --samples 5 --seed 0
"""
import argparse
import io
import random
import time

from algebroid import fedosov as fed
from algebroid.chart import builtin_corpus
from algebroid.cli import Output, fedosov_report


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    print("chart              A-terms  checks  failed  seconds")
    for ch in builtin_corpus():
        start = time.perf_counter()
        fs = fed.solve_A(ch, N=args.degree)
        out = Output("lines", stream=io.StringIO())
        fedosov_report(fs, random.Random(args.seed), args.samples, out)
        failed = sum(not i.ok for i in out.idents)
        elapsed = time.perf_counter() - start
        print(f"{ch.name:<18} {len(fs.A.terms):>7}  {len(out.idents):>6}  {failed:>6}  {elapsed:7.2f}")
        for item in out.idents:
            if not item.ok:
                print("   ", item.line())


if __name__ == "__main__":
    main()
