"""Order-by-order twistors for the two reference bivectors, with timing and residual summaries.

    python scripts/run_quantization.py --order 3
"""
import argparse
import random
import time

from algebroid import quantization as qz
from algebroid.chart import builtin_chart
from algebroid.sampling import random_poly

CASES = {
    "abelian2 e1^e2": lambda: qz.Bivector(builtin_chart("abelian", 2), {(0, 1): 1}),
    "poisson_cotangent x1*e1^e2": lambda: qz.Bivector(builtin_chart("poisson_cotangent"), {(0, 1): "x1"}),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--bound", type=int, default=4)
    p.add_argument("--triples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = random.Random(args.seed)
    for name, make in CASES.items():
        lam = make()
        start = time.perf_counter()
        J = qz.quantize(lam, args.order, args.bound)
        solved = time.perf_counter() - start
        print(f"== {name}: order {J.order}, bounds {J.bounds}, solved in {solved:.2f}s")
        for line in J.series().lines():
            print("  " + line)
        checks = qz.cocycle_report(J) + qz.semiclassical_check(J, lam) + qz.twisted_hopf(J)[1]
        bad = sum(
            any(p for p in qz.star_associator(*(random_poly(rng, lam.chart.d) for _ in range(3)), J))
            for _ in range(args.triples))
        failed = [i for i in checks if not i.ok]
        print(f"  identities: {len(checks)} checked, {len(failed)} failed; "
              f"associativity: {args.triples - bad}/{args.triples} triples exact")
        for item in failed:
            print("   ", item.line())


if __name__ == "__main__":
    main()
