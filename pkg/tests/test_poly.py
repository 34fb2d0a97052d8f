from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from algebroid.poly import ParseError, Poly, VariableRangeError, format_poly, parse_poly

from conftest import polys


def x(i, n=2):
    return Poly.var(i, n)


def test_parse_zero():
    assert parse_poly("0", 2).is_zero()


def test_parse_three_terms():
    p = parse_poly("x1^2 + 2*x2 - 1/3", 2)
    assert dict(p.items()) == {(2, 0): 1, (0, 1): 2, (0, 0): Fraction(-1, 3)}


def test_parse_variable_out_of_range():
    with pytest.raises(VariableRangeError):
        parse_poly("x3", 2)


@pytest.mark.parametrize("text", ["x1/x2", "x1 +", "(x1", "x1 ** 2", "1/0", ""])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse_poly(text, 2)


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_poly("x1 + $", 2)
    assert info.value.position == 5


def test_partial_power_rule():
    assert (x(0) ** 2).partial(0) == x(0).scale(2)


def test_mul_identity():
    p = parse_poly("3*x1*x2 - x2^3 + 1/2", 2)
    assert p * Poly.constant(1, 2) == p


def test_nvars_zero_is_rationals():
    p = parse_poly("1/2 + 3/4", 0)
    assert p == Poly.constant(Fraction(5, 4), 0)


def _brute_mul(p, q):
    # independent oracle: explicit double loop over term lists
    out = {}
    for e1, c1 in p.terms:
        for e2, c2 in q.terms:
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return Poly(p.nvars, out)


def _brute_partial(p, i):
    out = {}
    for e, c in p.terms:
        if e[i]:
            e2 = list(e)
            e2[i] -= 1
            out[tuple(e2)] = out.get(tuple(e2), 0) + c * e[i]
    return Poly(p.nvars, out)


@given(polys(2), polys(2), st.integers(0, 1))
def test_product_rule(p, q, i):
    lhs = _brute_partial(_brute_mul(p, q), i)
    assert (p * q).partial(i) == lhs
    assert lhs == p * q.partial(i) + q * p.partial(i)


@given(polys(3), polys(3), polys(3))
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == Poly.zero(3)


@given(polys(3, max_degree=3, max_terms=5))
def test_parse_round_trip(p):
    assert parse_poly(format_poly(p), 3) == p


@given(polys(2))
def test_canonical_form(p):
    q = Poly(2, dict(p.items()))
    assert p == q and hash(p) == hash(q)


def test_embed_and_truncate():
    p = parse_poly("x1*x2 + x2^3", 2)
    e = p.embed(4, 1)
    assert e == Poly.var(1, 4) * Poly.var(2, 4) + Poly.var(2, 4) ** 3
    assert e.truncate([2], 1) == Poly.var(1, 4) * Poly.var(2, 4)
