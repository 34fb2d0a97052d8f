"""Acceptance suite: one test per criterion, each with its runtime limit.

Every identity is exact.  Each test prints a ``PASS``/``FAIL criterion N`` line
with the elapsed time before asserting.
"""
import itertools
import random
import time
from contextlib import contextmanager
from math import comb

import pytest

from algebroid import fedosov as fed
from algebroid import quantization as qz
from algebroid.chart import EForm, builtin_chart, builtin_corpus, d_E, validate_chart
from algebroid.connection import bianchi_check, canonical_torsion_free, is_torsion_free
from algebroid.enveloping import hkr, hochschild_d, truncated_cohomology
from algebroid.poly import Poly
from algebroid.polyvectors import PolyVector
from algebroid.sampling import (non_lie_perturbations, random_form, random_poly, random_polyvector,
                                random_section, torsion_free_perturbation)

CHARTS = builtin_corpus()


@contextmanager
def criterion(capsys, number, limit):
    """Collect failures for one criterion, report a single line, then assert."""
    failures = []
    start = time.perf_counter()
    yield failures
    elapsed = time.perf_counter() - start
    if elapsed >= limit:
        failures.append(f"runtime {elapsed:.1f}s exceeds {limit}s")
    status = "FAIL" if failures else "PASS"
    with capsys.disabled():
        print(f"\n{status} criterion {number} ({elapsed:.2f}s, limit {limit}s)")
    assert not failures, failures[:5]


def test_criterion_1_chart_axioms_iff_d_squared(capsys):
    rng = random.Random(101)
    with criterion(capsys, 1, 10) as failures:
        for ch in CHARTS:
            for n in range(50):
                w = random_form(rng, ch)
                if not d_E(d_E(w)).is_zero():
                    failures.append(f"{ch.name}: d_E^2 != 0 on sample {n}")
        perturbed = non_lie_perturbations()
        if len(perturbed) != 5:
            failures.append(f"expected 5 perturbations, got {len(perturbed)}")
        for ch in perturbed:
            if not validate_chart(ch):
                failures.append(f"{ch.name}: validate_chart passed")
            forms = [EForm(ch, {(): Poly.var(a, ch.d)}) for a in range(ch.d)]
            forms += [EForm(ch, {(i,): 1}) for i in range(ch.r)]
            forms += [random_form(rng, ch) for _ in range(20)]
            if all(d_E(d_E(w)).is_zero() for w in forms):
                failures.append(f"{ch.name}: d_E^2 vanished on every sample")


def test_criterion_2_hkr_chain_map(capsys):
    rng = random.Random(202)
    with criterion(capsys, 2, 30) as failures:
        for name in ("so3", "poisson_cotangent"):
            ch = builtin_chart(name)
            for n in range(50):
                v = random_polyvector(rng, ch, degree=rng.randint(0, 2))
                if not hochschild_d(hkr(v)).is_zero():
                    failures.append(f"{name}: d hkr(v) != 0 for {v}")


def test_criterion_3_truncated_quasi_isomorphism(capsys):
    with criterion(capsys, 3, 120) as failures:
        for r in (1, 2, 3):
            rows = truncated_cohomology(builtin_chart("abelian", r), 1, 3)
            if [row["degree"] for row in rows] != [-1, 0, 1]:
                failures.append(f"r={r}: degrees {[row['degree'] for row in rows]}")
            for row in rows:
                want = comb(r, row["degree"] + 1)
                got = (row["cohomology"], row["wedge_dim"], row["hkr_classes"])
                if got != (want, want, want) or not row["hkr_closed"]:
                    failures.append(f"r={r} degree {row['degree']}: H, wedge, hkr = {got}, want {want}")


def test_criterion_4_hodge_identity(capsys):
    rng = random.Random(404)
    N = 7
    pool = [ch for ch in CHARTS if ch.r >= 3] + [builtin_chart("foliation2in3")]
    combos = [(kind, k, l) for kind in fed.KINDS for k in range(4) for l in range(7) if k + l <= 6]
    with criterion(capsys, 4, 30) as failures:
        for n in range(100):
            kind, k, l = combos[n % len(combos)]
            charts = [ch for ch in pool if ch.r >= k]
            ch = charts[n % len(charts)]
            u = random_section(rng, ch, kind, N, form_degree=k, fiber_degree=l)
            lhs = fed.delta(fed.kappa(u)) + fed.kappa(fed.delta(u)) + fed.harmonic(u)
            if lhs != u:
                failures.append(f"{ch.name} {kind} (k={k}, l={l}) sample {n}")
        if len(combos) > 100:
            failures.append("not every (k, l) pair was sampled")


def test_criterion_5_flattening(capsys):
    rng = random.Random(505)
    with criterion(capsys, 5, 120) as failures:
        for name in ("so3", "poisson_cotangent", "heisenberg"):
            ch = builtin_chart(name)
            fs = fed.solve_A(ch, canonical_torsion_free(ch), 4)
            if not fed.kappa(fs.A).is_zero():
                failures.append(f"{name}: kappa A != 0")
            res, bound = fed.flatness_residual(fs)
            if not res.is_zero() or bound != 3:
                failures.append(f"{name}: flatness residual through degree {bound}: {fed.format_section(res)}")
            for n in range(20):
                kind = fed.KINDS[n % 3]
                s = random_section(rng, ch, kind, fs.N, fiber_degree=rng.randint(0, fs.N - 1))
                dd, b = fed.d_squared_residual(fs, s)
                if not dd.is_zero():
                    failures.append(f"{name}: D^2 residual on {kind} sample {n} through degree {b}")


def test_criterion_6_lift(capsys):
    rng = random.Random(606)
    with criterion(capsys, 6, 60) as failures:
        for ch in CHARTS:
            fs = fed.solve_A(ch, N=4)
            for kind in fed.KINDS:
                for n in range(20):
                    u0 = random_section(rng, ch, kind, fs.N, form_degree=0, fiber_degree=0)
                    u = fed.theta_lift(u0, fs)
                    if fed.harmonic(u) != u0:
                        failures.append(f"{ch.name} {kind} {n}: H theta != id")
                    if not fs.D(u).truncated(fed.reliable_degree(fs, u, 1)).is_zero():
                        failures.append(f"{ch.name} {kind} {n}: D theta != 0")
            for n in range(5):
                for u0 in (random_poly(rng, ch.d), random_polyvector(rng, ch, degree=1)):
                    ident = fed.first_order_check(u0, fs)
                    if not ident.ok:
                        failures.append(f"{ch.name}: {ident}")


def test_criterion_7_bracket_transfer(capsys):
    rng = random.Random(707)
    with criterion(capsys, 7, 60) as failures:
        for ch in CHARTS:
            fs = fed.solve_A(ch, N=3)
            gens = [PolyVector.basis(ch, i) for i in range(ch.r)]
            pairs = list(itertools.product(gens, repeat=2))
            # random pairs go beyond the generator cases the identity is derived for
            for _ in range(20):
                pairs.append(tuple(random_polyvector(rng, ch, degree=rng.randint(0, 1), max_degree=1)
                                   for _ in range(2)))
            for u0, v0 in pairs:
                for ident in fed.bracket_transfer_check(u0, v0, fs):
                    if not ident.ok:
                        failures.append(f"{ch.name}: {ident}")


def test_criterion_8_pbw_comparison(capsys):
    with criterion(capsys, 8, 60) as failures:
        for ch in CHARTS:
            fs = fed.solve_A(ch, N=3)
            idents = fed.mu_transfer_check(fs)
            cases = {i.name.split("[")[0] for i in idents}
            want = {"pbw-vector-vector", "pbw-vector-function", "pbw-function-vector", "pbw-function-function",
                    "mu-coproduct"}
            if cases != want:
                failures.append(f"{ch.name}: cases checked {sorted(cases)}")
            failures.extend(f"{ch.name}: {i}" for i in idents if not i.ok)
            for i, j in itertools.product(range(ch.r), repeat=2):
                diff = fed.mu_second_order(i, j, fs.connection) - fed.second_order_mu_formula(i, j, fs.connection)
                if not diff.is_zero():
                    failures.append(f"{ch.name}: second-order mu (e{i + 1}, e{j + 1}) off by {diff}")


@pytest.mark.parametrize("case", ["abelian2", "poisson_cotangent"])
def test_criterion_9_quantization(capsys, case):
    rng = random.Random(909)
    with criterion(capsys, f"9 [{case}]", 300) as failures:
        if case == "abelian2":
            lam = qz.Bivector(builtin_chart("abelian", 2), {(0, 1): 1})
        else:
            lam = qz.Bivector(builtin_chart("poisson_cotangent"), {(0, 1): "x1"})
        ch = lam.chart
        J = qz.quantize(lam, 2)
        if J.order != 2:
            failures.append(f"twistor stopped at order {J.order}")
        failures.extend(str(i) for i in qz.cocycle_report(J) if not i.ok)
        failures.extend(str(i) for i in qz.semiclassical_check(J, lam) if not i.ok)
        _, axioms = qz.twisted_hopf(J)
        if not axioms:
            failures.append("no twisted Hopf axioms checked")
        failures.extend(str(i) for i in axioms if not i.ok)
        for n in range(20):
            a, b, c = (random_poly(rng, ch.d) for _ in range(3))
            bad = [m for m, p in enumerate(qz.star_associator(a, b, c, J)) if p]
            if bad:
                failures.append(f"associativity fails at orders {bad} on triple {n}")


def test_criterion_10_connections(capsys):
    rng = random.Random(1010)
    with criterion(capsys, 10, 60) as failures:
        for ch in CHARTS:
            conn = canonical_torsion_free(ch)
            if not is_torsion_free(conn):
                failures.append(f"{ch.name}: canonical connection has torsion")
            failures.extend(f"{ch.name} canonical: {f}" for f in bianchi_check(conn))
            for n in range(5):
                pert = torsion_free_perturbation(rng, conn)
                if not is_torsion_free(pert):
                    failures.append(f"{ch.name} perturbation {n} has torsion")
                failures.extend(f"{ch.name} perturbation {n}: {f}" for f in bianchi_check(pert))
