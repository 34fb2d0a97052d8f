import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given

from algebroid.chart import builtin_chart
from algebroid.connection import (Connection, ETensor, bianchi_check, canonical_torsion_free, covariant_derivative,
                                  curvature, is_torsion_free, torsion)
from algebroid.poly import Poly
from algebroid.sampling import random_poly, torsion_free_perturbation

from conftest import CORPUS, seeds


def test_abelian_connection_vanishes():
    assert canonical_torsion_free(builtin_chart("abelian", 3)).gamma == {}


def test_so3_christoffels_are_half_levi_civita():
    conn = canonical_torsion_free(builtin_chart("so3"))
    for i, j, k in itertools.product(range(3), repeat=3):
        eps = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (1, 0, 2): -1, (2, 1, 0): -1, (0, 2, 1): -1}.get((i, j, k), 0)
        assert conn(i, j, k) == Poly.constant(Fraction(eps, 2), 0)


def test_canonical_is_torsion_free(any_chart):
    assert is_torsion_free(canonical_torsion_free(any_chart))


def test_torsion_detects_asymmetric_part():
    ch = builtin_chart("abelian", 2)
    conn = Connection(ch, {(0, 1, 0): 1})
    T = torsion(conn)
    assert T[(0, 0, 1)] == Poly.constant(1, 0) and T[(0, 1, 0)] == Poly.constant(-1, 0)


def test_so3_curvature():
    R = curvature(canonical_torsion_free(builtin_chart("so3")))
    assert R[(1, 0, 1, 0)] == Poly.constant(Fraction(-1, 4), 0)
    # R(X, Y) Z = -[[X, Y], Z] / 4, i.e. R(e_i, e_j) e_k = (delta_jk e_i - delta_ik e_j) / 4
    for l, i, j, k in itertools.product(range(3), repeat=4):
        expected = Fraction((j == k) * (i == l) - (i == k) * (j == l), 4)
        assert R[(l, i, j, k)] == Poly.constant(expected, 0)


def test_flat_nonconstant_connection_on_a_line():
    conn = Connection(builtin_chart("tangent", 1), {(0, 0, 0): "x1"})
    assert is_torsion_free(conn)
    assert curvature(conn).is_zero()


def test_covariant_derivative_examples():
    ch = builtin_chart("tangent", 2)
    x1 = Poly.var(0, 2)
    conn = Connection(ch, {(0, 1, 1): x1})
    scalar = ETensor(ch, 0, 0, {(): x1 * x1})
    assert covariant_derivative(0, scalar, conn) == ETensor(ch, 0, 0, {(): x1.scale(2)})
    vec = ETensor(ch, 1, 0, {(1,): 1})
    assert covariant_derivative(0, vec, conn) == ETensor(ch, 1, 0, {(1,): x1})
    covec = ETensor(ch, 0, 1, {(1,): 1})
    assert covariant_derivative(0, covec, conn) == ETensor(ch, 0, 1, {(1,): -x1})
    # nabla is function-linear in the direction
    assert covariant_derivative({0: x1}, vec, conn) == ETensor(ch, 1, 0, {(1,): x1 * x1})


def test_curvature_is_antisymmetric(any_chart):
    R = curvature(canonical_torsion_free(any_chart))
    r = any_chart.r
    for l, i, j, k in itertools.product(range(r), repeat=4):
        assert R[(l, i, j, k)] == -R[(l, j, i, k)]


def test_bianchi_canonical(any_chart):
    assert bianchi_check(canonical_torsion_free(any_chart)) == []


@given(seeds())
def test_bianchi_perturbed(seed):
    rng = random.Random(seed)
    for ch in CORPUS.values():
        conn = torsion_free_perturbation(rng, canonical_torsion_free(ch))
        assert is_torsion_free(conn)
        assert bianchi_check(conn) == []


@given(seeds())
def test_bianchi_with_torsion(seed):
    # both identities also hold for connections with torsion
    rng = random.Random(seed)
    ch = CORPUS["foliation2in3"]
    gamma = {(rng.randrange(2), rng.randrange(2), rng.randrange(2)): random_poly(rng, 3, 1) for _ in range(2)}
    assert bianchi_check(Connection(ch, gamma)) == []


@given(seeds())
def test_commutator_of_derivatives_is_curvature(seed):
    rng = random.Random(seed)
    for name in ("so3", "foliation2in3", "poisson_cotangent"):
        ch = CORPUS[name]
        conn = torsion_free_perturbation(rng, canonical_torsion_free(ch))
        R = curvature(conn)
        vec = ETensor(ch, 1, 0, {(k,): random_poly(rng, ch.d, 1) for k in range(ch.r)})
        for i, j in itertools.combinations(range(ch.r), 2):
            lhs = covariant_derivative(i, covariant_derivative(j, vec, conn), conn) \
                - covariant_derivative(j, covariant_derivative(i, vec, conn), conn) \
                - covariant_derivative(dict(ch.bracket(i, j)), vec, conn)
            rhs = {}
            for l, k in itertools.product(range(ch.r), repeat=2):
                rhs[(l,)] = rhs.get((l,), ch.zero()) + R[(l, i, j, k)] * vec[(k,)]
            assert lhs == ETensor(ch, 1, 0, rhs)


def test_out_of_range_christoffel():
    with pytest.raises(IndexError):
        Connection(builtin_chart("so3"), {(0, 1, 3): 1})
