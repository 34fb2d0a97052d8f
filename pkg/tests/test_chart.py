import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given

from algebroid.chart import (Chart, ChartError, ChartFileError, EForm, builtin_chart, builtin_corpus, d_E,
                             format_chart, format_form, parse_chart_text, parse_entries, parse_form,
                             poisson_cotangent, validate_chart)
from algebroid.poly import Poly
from algebroid.sampling import non_lie_perturbations, random_form

from conftest import CORPUS, seeds


def _jacobi_oracle(r, table):
    """Independent Jacobi check for constant structure constants.

    ``table[(i, j)]`` is the full antisymmetric bracket as a dict k -> c.
    """
    def c(i, j, k):
        if i == j:
            return 0
        if i < j:
            return table.get((i, j), {}).get(k, 0)
        return -table.get((j, i), {}).get(k, 0)

    for i, j, k, l in itertools.product(range(r), repeat=4):
        total = sum(c(j, k, m) * c(i, m, l) + c(k, i, m) * c(j, m, l) + c(i, j, m) * c(k, m, l) for m in range(r))
        if total:
            return False
    return True


def test_tangent_valid():
    assert validate_chart(builtin_chart("tangent", 3)) == []


def test_so3_valid_and_matches_oracle():
    ch = builtin_chart("so3")
    assert validate_chart(ch) == []
    table = {}
    for (i, j, k), p in ch.c.items():
        table.setdefault((i, j), {})[k] = p.constant_term()
    assert _jacobi_oracle(3, table)


def test_two_dim_nonabelian_valid():
    assert validate_chart(Chart(0, 2, {}, {(0, 1, 0): 1})) == []


def test_constructed_jacobi_violation_lists_components():
    ch = Chart(0, 3, {}, {(0, 1, 2): 1, (1, 2, 0): 1, (0, 2, 1): -1, (0, 1, 0): 1})
    report = validate_chart(ch)
    assert report and all(v.kind == "jacobi" for v in report)
    assert all(len(v.indices) == 4 for v in report)


def test_single_entry_perturbations_of_so3():
    base = builtin_chart("so3")
    for i, j in itertools.combinations(range(3), 2):
        for k in range(3):
            c = {key: p for key, p in base.c.items()}
            c[(i, j, k)] = c.get((i, j, k), Poly.zero(0)) + 1
            ch = Chart(0, 3, {}, c)
            table = {}
            for (a, b, m), p in ch.c.items():
                table.setdefault((a, b), {})[m] = p.constant_term()
            assert (validate_chart(ch) == []) == _jacobi_oracle(3, table)


def test_d_E_on_function_tangent():
    ch = builtin_chart("tangent", 1)
    f = EForm(ch, {(): Poly.var(0, 1)})
    assert d_E(f) == EForm(ch, {(0,): 1})


def test_d_E_xi1_on_so3():
    ch = builtin_chart("so3")
    assert d_E(EForm(ch, {(0,): 1})) == EForm(ch, {(1, 2): -1})


def test_builtin_abelian2():
    ch = builtin_chart("abelian", 2)
    assert (ch.d, ch.r, ch.c) == (0, 2, {})
    assert all(not ch.rho(i, a) for i in range(2) for a in range(0))


def test_poisson_cotangent_anchor():
    ch = builtin_chart("poisson_cotangent")
    x1 = Poly.var(0, 2)
    assert (ch.rho(0, 0), ch.rho(0, 1)) == (Poly.zero(2), x1)
    assert (ch.rho(1, 0), ch.rho(1, 1)) == (-x1, Poly.zero(2))
    # Koszul bracket [dx1, dx2] = d(x1) = dx1
    assert ch.bracket(0, 1) == {0: Poly.constant(1, 2)}
    assert validate_chart(ch) == []


def test_poisson_cotangent_rejects_non_poisson():
    # d1^d2 + x2 d2^d3 on R^3 corresponds to V = (x2, 0, 1) with V . curl V = -1
    with pytest.raises(ChartError) as info:
        poisson_cotangent({(0, 1): 1, (1, 2): "x2"}, 3)
    assert info.value.report


def test_builtin_corpus_is_valid(any_chart):
    assert validate_chart(any_chart) == []


def test_corpus_covers_anchor_types():
    kinds = set()
    for ch in builtin_corpus():
        if ch.d == 0:
            kinds.add("zero")
        elif ch.name == "foliation2in3":
            kinds.add("injective")
        elif ch.name == "poisson_cotangent":
            kinds.add("degenerate")
    assert kinds == {"zero", "injective", "degenerate"}


@given(seeds())
def test_d_E_squared_zero(seed):
    rng = random.Random(seed)
    for ch in CORPUS.values():
        w = random_form(rng, ch)
        assert d_E(d_E(w)).is_zero()


@given(seeds())
def test_d_E_super_derivation(seed):
    rng = random.Random(seed)
    for ch in CORPUS.values():
        k = rng.randint(0, ch.r)
        w = random_form(rng, ch, degree=k)
        e = random_form(rng, ch)
        lhs = d_E(w.wedge(e))
        rhs = d_E(w).wedge(e) + w.wedge(d_E(e)).scale(-1 if k % 2 else 1)
        assert lhs == rhs


def test_non_lie_perturbations_detected():
    for ch in non_lie_perturbations():
        assert validate_chart(ch)
        forms = [EForm(ch, {(): Poly.var(a, ch.d)}) for a in range(ch.d)]
        forms += [EForm(ch, {(i,): 1}) for i in range(ch.r)]
        assert any(not d_E(d_E(w)).is_zero() for w in forms)


@given(seeds())
def test_form_round_trip(seed):
    rng = random.Random(seed)
    for ch in CORPUS.values():
        w = random_form(rng, ch)
        assert parse_form(format_form(w), ch) == w


def test_parse_form_signs():
    ch = builtin_chart("so3")
    assert parse_form("xi2^xi1 - 3", ch) == EForm(ch, {(0, 1): -1, (): -3})
    assert parse_form("(1/2)*xi1*xi1", ch).is_zero()


def test_chart_file_round_trip(any_chart):
    cf = parse_chart_text(format_chart(any_chart))
    assert cf.chart == any_chart


def test_chart_file_errors():
    with pytest.raises(ChartFileError) as info:
        parse_chart_text("chart d=0 r=2\nc 1 2 1 = x1\n")
    assert info.value.line == 2
    with pytest.raises(ChartFileError):
        parse_chart_text("c 1 2 1 = 1\n")
    with pytest.raises(ChartFileError) as info:
        parse_chart_text("chart d=1 r=2\n# comment\nc 2 1 1 = 1\n")
    assert info.value.line == 3


def test_parse_entries():
    ch = builtin_chart("so3")
    gamma = parse_entries("gamma 1 2 3 = 1/2\nlambda 1 2 = 1\n", ch, "gamma")
    assert gamma == {(0, 1, 2): Poly.constant(Fraction(1, 2), 0)}
    with pytest.raises(ChartFileError):
        parse_entries("chart d=1 r=3\n", ch, "gamma")
