"""Seeded random inputs for the property suites, the scripts and the command line.

Everything takes a ``random.Random`` so that a seed reproduces a run exactly.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .chart import Chart, EForm, builtin_chart
from .connection import Connection
from .enveloping import UEElement
from .fedosov import MixedSection
from .poly import Poly
from .polyvectors import PolyVector


def random_coefficient(rng: random.Random, size: int = 3) -> Fraction:
    num = 0
    while num == 0:
        num = rng.randint(-size, size)
    return Fraction(num, rng.choice((1, 1, 2, 3)))


def random_exponent(rng: random.Random, nvars: int, max_degree: int) -> Tuple[int, ...]:
    e = [0] * nvars
    for _ in range(rng.randint(0, max_degree) if nvars else 0):
        e[rng.randrange(nvars)] += 1
    return tuple(e)


def random_poly(rng: random.Random, nvars: int, max_degree: int = 2, max_terms: int = 3) -> Poly:
    terms: Dict[Tuple[int, ...], Fraction] = {}
    for _ in range(rng.randint(1, max_terms)):
        e = random_exponent(rng, nvars, max_degree)
        terms[e] = terms.get(e, 0) + random_coefficient(rng)
    return Poly(nvars, terms)


def random_key(rng: random.Random, r: int, degree: int) -> Tuple[int, ...]:
    return tuple(sorted(rng.sample(range(r), degree)))


def random_form(rng: random.Random, ch: Chart, degree: Optional[int] = None, max_terms: int = 3) -> EForm:
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        k = rng.randint(0, ch.r) if degree is None else degree
        terms[random_key(rng, ch.r, k)] = random_poly(rng, ch.d)
    return EForm(ch, terms)


def random_polyvector(rng: random.Random, ch: Chart, max_degree: int = 2, max_terms: int = 3,
                      degree: Optional[int] = None) -> PolyVector:
    terms = {}
    top = min(max_degree, ch.r)
    for _ in range(rng.randint(1, max_terms)):
        k = rng.randint(0, top) if degree is None else degree
        terms[random_key(rng, ch.r, k)] = random_poly(rng, ch.d)
    return PolyVector(ch, terms)


def random_ue(rng: random.Random, ch: Chart, max_order: int = 2, max_terms: int = 3) -> UEElement:
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        word = tuple(sorted(rng.randrange(ch.r) for _ in range(rng.randint(0, max_order))))
        terms[word] = random_poly(rng, ch.d, 1, 2)
    return UEElement(ch, terms)


def random_payload(rng: random.Random, ch: Chart, kind: str, max_order: int = 2):
    r = ch.r
    if kind == "W":
        return ()
    if kind == "T":
        return random_key(rng, r, rng.randint(0, min(2, r)))
    arity = rng.randint(1, 2)
    return tuple(random_exponent(rng, r, max_order) for _ in range(arity))


def random_section(rng: random.Random, ch: Chart, kind: str, N: int, form_degree: Optional[int] = None,
                   fiber_degree: Optional[int] = None, max_terms: int = 3, x_degree: int = 1) -> MixedSection:
    """A mixed section with the given form and fiber degrees (random when omitted)."""
    d, r = ch.d, ch.r
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        k = rng.randint(0, r) if form_degree is None else form_degree
        l = rng.randint(0, N) if fiber_degree is None else fiber_degree
        xi = random_key(rng, r, k)
        ye = [0] * r
        for _ in range(l):
            ye[rng.randrange(r)] += 1
        xe = random_exponent(rng, d, x_degree)
        coeff = Poly.monomial(tuple(xe) + tuple(ye), random_coefficient(rng))
        terms[(xi, random_payload(rng, ch, kind))] = coeff
    return MixedSection(ch, kind, N, terms)


def torsion_free_perturbation(rng: random.Random, conn: Connection, max_terms: int = 3) -> Connection:
    """Add a random tensor S_ij^k symmetric in (i, j); the torsion is unchanged."""
    ch = conn.chart
    gamma = dict(conn.gamma)
    for _ in range(rng.randint(1, max_terms)):
        i, j, k = (rng.randrange(ch.r) for _ in range(3))
        s = random_poly(rng, ch.d, 1, 2)
        for key in {(i, j, k), (j, i, k)}:
            gamma[key] = gamma.get(key, ch.zero()) + s
    return Connection(ch, gamma)


def non_lie_perturbations() -> List[Chart]:
    """Five charts that violate the Jacobi or the anchor-morphism identity."""
    so3 = builtin_chart("so3")
    sl2 = builtin_chart("sl2")
    heis = builtin_chart("heisenberg")
    fol = builtin_chart("foliation2in3")

    def bump(ch: Chart, extra_c=None, extra_rho=None, name=""):
        c = dict(ch.c)
        for key, v in (extra_c or {}).items():
            c[key] = c.get(key, ch.zero()) + ch.poly(v)
        rho = {(i, a): ch.rho(i, a) for i in range(ch.r) for a in range(ch.d) if ch.rho(i, a)}
        for key, v in (extra_rho or {}).items():
            rho[key] = rho.get(key, ch.zero()) + ch.poly(v)
        return Chart(ch.d, ch.r, rho, c, name=name)

    return [
        bump(so3, {(0, 1, 0): 1}, name="so3+c12^1"),
        bump(sl2, {(0, 2, 0): 1}, name="sl2+c13^1"),
        bump(heis, {(0, 2, 0): 1}, name="heisenberg+c13^1"),
        Chart(2, 2, {(0, 0): 1, (1, 1): "x1"}, {}, name="tangent2-bad-anchor"),
        bump(fol, extra_rho={(0, 2): "x1"}, name="foliation2in3-bad-anchor"),
    ]
