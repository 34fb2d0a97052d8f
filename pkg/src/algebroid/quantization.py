"""Order-by-order quantization of triangular Lie bialgebroids through twistors.

A twistor is a truncated hbar-series ``J = m0 + hbar J_1 + hbar^2 J_2 + ...`` of
elements of UE (x)_R UE.  J_1 is the HKR image of the bivector; higher
orders solve the cocycle equation

    J^{12,3} J^{1,2} - J^{1,23} J^{2,3} = 0   (mod hbar^{n+1})

as a linear system over Q, one order at a time.

The twisted coproduct lives in UE (x)_{R_J} UE.  Left multiplication by J
is well defined on plain tensors and identifies that space with UE (x)_R UE,
so twisted elements are compared through their images under J . (-).
Plain tensors keep one block of base variables per slot (see ``KTerms``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .chart import Chart, PolyLike, Violation, _accumulate
from .enveloping import (PolyDiffOp, TensorKey, TensorTerms, UEElement, UETerms, _add_into,
                         anchor_mono, bullet_terms, coproduct_terms, factorwise_product,
                         format_tensor_terms, hkr, hochschild_d, gerstenhaber_terms,
                         monomials_upto, ue_mul_terms)
from .poly import Poly
from .polyvectors import PolyVector, schouten_bracket
from .report import Ident


class MaurerCartanError(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("[L, L] != 0: " + "; ".join(str(v) for v in report))


class InconsistentAtBound(ValueError):
    def __init__(self, order: int, bound: int):
        self.order = order
        self.bound = bound
        super().__init__(f"inconsistent-at-bound: no order-{order} twistor term with operator order <= {bound}")


class CocycleFailure(ValueError):
    pass


# -- bivectors ----------------------------------------------------------------

class Bivector:
    """Lambda = sum_{i<j} L^{ij} e_i ^ e_j."""

    def __init__(self, chart: Chart, entries: Optional[Mapping[Tuple[int, int], PolyLike]] = None):
        self.chart = chart
        pv = PolyVector(chart, {k: v for k, v in (entries or {}).items()})
        if any(len(k) != 2 for k in pv.terms):
            raise ValueError("a bivector has only e_i ^ e_j terms")
        self.entries: Dict[Tuple[int, int], Poly] = dict(pv.terms)

    @classmethod
    def from_polyvector(cls, v: PolyVector) -> "Bivector":
        return cls(v.chart, v.terms)

    def polyvector(self) -> PolyVector:
        return PolyVector(self.chart, self.entries)

    def is_zero(self):
        return not self.entries

    def __str__(self):
        return str(self.polyvector())

    def lines(self) -> str:
        return "".join(f"lambda {i + 1} {j + 1} = {p}\n" for (i, j), p in sorted(self.entries.items()))


def maurer_cartan_check(lam: Bivector) -> List[Violation]:
    """Components of [L, L]_E; empty iff L is a Maurer-Cartan element."""
    v = lam.polyvector()
    br = schouten_bracket(v, v)
    return [Violation("maurer-cartan", key, p) for key, p in sorted(br.terms.items())]


# -- hbar series ----------------------------------------------------------------

@dataclass
class HbarSeries:
    coefficients: list

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, m):
        return self.coefficients[m]

    def lines(self) -> List[str]:
        return [f"order {m}: {c}" for m, c in enumerate(self.coefficients)]

    def __str__(self):
        return "\n".join(self.lines())


@dataclass
class FormalTwistor:
    chart: Chart
    coefficients: List[PolyDiffOp]
    bounds: List[Optional[int]] = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, m) -> PolyDiffOp:
        if m < len(self.coefficients):
            return self.coefficients[m]
        return PolyDiffOp._raw(self.chart, {})

    def terms(self, m) -> TensorTerms:
        return self[m].terms

    def series(self) -> HbarSeries:
        return HbarSeries([format_tensor_terms(c.terms) for c in self.coefficients])


def identity_twistor(ch: Chart) -> FormalTwistor:
    return FormalTwistor(ch, [PolyDiffOp.m0(ch)], [0])


def twistor_order1(lam: Bivector) -> FormalTwistor:
    """J = m0 + hbar hkr(L)."""
    report = maurer_cartan_check(lam)
    if report:
        raise MaurerCartanError(report)
    ch = lam.chart
    return FormalTwistor(ch, [PolyDiffOp.m0(ch), hkr(lam.polyvector())], [0, 1])


def counit_normalized(J: FormalTwistor) -> bool:
    """(eps (x) id)(J) = (id (x) eps)(J) = 1 at every order."""
    for m, c in enumerate(J.coefficients):
        left: TensorTerms = {}
        right: TensorTerms = {}
        for (a, b), p in c.terms.items():
            if not a:
                _accumulate(left, (b,), p)
            if not b:
                _accumulate(right, (a,), p)
        want = {((),): J.chart.one()} if m == 0 else {}
        if left != want or right != want:
            return False
    return True


def cocycle_residual(J: FormalTwistor, m: int) -> PolyDiffOp:
    """hbar^m coefficient of J^{12,3} J^{1,2} - J^{1,23} J^{2,3}."""
    ch = J.chart
    out: TensorTerms = {}
    for a in range(m + 1):
        _add_into(out, bullet_terms(ch, J.terms(a), J.terms(m - a)))
    return PolyDiffOp._raw(ch, out)


def maurer_cartan_residual(J: FormalTwistor, m: int) -> PolyDiffOp:
    """The same residual written as d J_m + 1/2 sum_{a+b=m, a,b>=1} [J_a, J_b]."""
    ch = J.chart
    out: TensorTerms = dict(hochschild_d(J[m]).terms) if m else {}
    half = Poly.constant(Fraction(1, 2), ch.d)
    for a in range(1, m):
        _add_into(out, gerstenhaber_terms(ch, J.terms(a), J.terms(m - a)), half)
    return PolyDiffOp._raw(ch, out)


# -- the linear solver ------------------------------------------------------------

def _x_monomials(d: int, deg: int):
    out = []
    for k in range(deg + 1):
        for combo in itertools.combinations_with_replacement(range(d), k):
            out.append(tuple(combo.count(a) for a in range(d)))
    return out


def _unknown_keys(r: int, L: int) -> List[TensorKey]:
    monos = [m for m in monomials_upto(r, L) if m]
    keys = [(a, b) for a in monos for b in monos]
    keys.sort(key=lambda k: (len(k[0]) + len(k[1]), k))
    return keys


def _solve_rref(columns: List[Dict], rhs: Dict) -> Optional[Dict[int, Fraction]]:
    """Solve sum_c x_c columns[c] = rhs exactly; free variables are set to zero."""
    from sympy.polys.domains import QQ
    from sympy.polys.matrices import DomainMatrix
    from sympy.polys.matrices.sdm import SDM

    rows: Dict = {}
    for c, col in enumerate(columns):
        for row, v in col.items():
            rows.setdefault(row, {})[c] = v
    for row in rhs:
        rows.setdefault(row, {})
    n = len(columns)
    order = sorted(rows, key=repr)
    data = {}
    for i, row in enumerate(order):
        entries = {c: QQ(v.numerator, v.denominator) for c, v in rows[row].items()}
        b = rhs.get(row)
        if b:
            entries[n] = QQ(b.numerator, b.denominator)
        if entries:
            data[i] = entries
    if not data:
        return {}
    M = DomainMatrix.from_rep(SDM(data, (len(order), n + 1), QQ))
    R, pivots = M.rref()
    if n in pivots:
        return None
    sol = {}
    Rs = R.to_sdm()
    for i, p in enumerate(pivots):
        v = Rs.get(i, {}).get(n)
        if v:
            sol[p] = Fraction(int(v.numerator), int(v.denominator))
    return sol


def _coordinates(terms: TensorTerms) -> Dict:
    out = {}
    for key, p in terms.items():
        for e, c in p.items():
            out[(key, e)] = c
    return out


def twistor_extend(J: FormalTwistor, L: int, x_degree: Optional[int] = None) -> FormalTwistor:
    """Solve for J_{n+1} with operator order <= L in each slot.

    The order-(n+1) part of the cocycle equation is linear in J_{n+1}:
    d J_{n+1} = -sum_{a+b=n+1, a,b>=1} J_a . J_b.  Unknowns are
    eps-normalized (no empty slot) with base coefficients of degree at most
    ``x_degree`` (default: the degree of the right side).  Among the
    solutions the reduced row echelon form with free variables set to zero
    is returned, scanning basis tuples from low to high order.
    """
    ch = J.chart
    n = J.order
    for m in range(n + 1):
        if cocycle_residual(J, m).terms:
            raise CocycleFailure(f"residual at order {m} is nonzero; cannot extend")
    m = n + 1
    rhs: TensorTerms = {}
    minus = Poly.constant(-1, ch.d)
    for a in range(1, m):
        _add_into(rhs, bullet_terms(ch, J.terms(a), J.terms(m - a)), minus)
    if not rhs:
        return FormalTwistor(ch, J.coefficients + [PolyDiffOp._raw(ch, {})], J.bounds + [L])
    if x_degree is None:
        x_degree = max(p.degree() for p in rhs.values())
    m0 = PolyDiffOp.m0(ch).terms
    keys = _unknown_keys(ch.r, L)
    xmons = _x_monomials(ch.d, x_degree)
    unknowns = []
    columns = []
    for key in keys:
        dkey = gerstenhaber_terms(ch, m0, {key: ch.one()})
        for alpha in sorted(xmons, key=lambda a: (sum(a), a)):
            xa = Poly.monomial(alpha) if ch.d else ch.one()
            unknowns.append((key, xa))
            columns.append(_coordinates({k: xa * p for k, p in dkey.items()}))
    sol = _solve_rref(columns, _coordinates(rhs))
    if sol is None:
        raise InconsistentAtBound(m, L)
    Jm: TensorTerms = {}
    for c, v in sol.items():
        key, xa = unknowns[c]
        _accumulate(Jm, key, xa.scale(v))
    return FormalTwistor(ch, J.coefficients + [PolyDiffOp._raw(ch, Jm)], J.bounds + [L])


def extend_with_retry(J: FormalTwistor, L_start: int = 1, L_max: int = 4, x_degree: Optional[int] = None) -> FormalTwistor:
    """twistor_extend with increasing bounds until a solution exists."""
    last = None
    for L in range(L_start, L_max + 1):
        try:
            return twistor_extend(J, L, x_degree)
        except InconsistentAtBound as exc:
            last = exc
    raise last


def quantize(lam: Bivector, order: int, L_max: int = 4) -> FormalTwistor:
    J = twistor_order1(lam)
    while J.order < order:
        J = extend_with_retry(J, 1, L_max)
    return J


def moyal_twistor(lam: Bivector, order: int) -> FormalTwistor:
    """exp(hbar J_1) with J_1 = hkr(L), for constant L on a chart over a point."""
    ch = lam.chart
    if ch.d != 0:
        raise ValueError("the exponential twistor needs a chart over a point")
    J1 = hkr(lam.polyvector()).terms
    coeffs = [PolyDiffOp.m0(ch)]
    power = PolyDiffOp.m0(ch).terms
    fact = 1
    for k in range(1, order + 1):
        power = factorwise_product(ch, J1, power)
        fact *= k
        coeffs.append(PolyDiffOp._raw(ch, {key: p / fact for key, p in power.items()}))
    return FormalTwistor(ch, coeffs, [None] * (order + 1))


# -- star product and semiclassical limit ------------------------------------------

def twisted_product(a: PolyLike, b: PolyLike, J: FormalTwistor) -> HbarSeries:
    """a *_J b = sum (rho(x) a)(rho(y) b), order by order."""
    ch = J.chart
    a, b = ch.poly(a), ch.poly(b)
    return HbarSeries([c.act(a, b) for c in J.coefficients])


def star_associator(a, b, c, J: FormalTwistor) -> List[Poly]:
    """(a*b)*c - a*(b*c) order by order, mod hbar^{n+1}."""
    ch = J.chart
    n = J.order
    ab = twisted_product(a, b, J)
    bc = twisted_product(b, c, J)
    out = []
    for m in range(n + 1):
        val = ch.zero()
        for k in range(m + 1):
            val = val + J[k].act(ab[m - k], c) - J[k].act(a, bc[m - k])
        out.append(val)
    return out


def _opposite(terms: TensorTerms) -> TensorTerms:
    return {(b, a): p for (a, b), p in terms.items()}


def semiclassical_check(J: FormalTwistor, lam: Bivector) -> List[Ident]:
    """(J - J^op)/hbar at order 0 equals L read as sum L^{ij}(e_i (x) e_j - e_j (x) e_i)."""
    ch = J.chart
    if J.order < 1:
        raise ValueError("semiclassical check needs order >= 1")
    alt = dict(J.terms(1))
    _add_into(alt, _opposite(J.terms(1)), Poly.constant(-1, ch.d))
    want: TensorTerms = {}
    for (i, j), p in lam.entries.items():
        _accumulate(want, ((i,), (j,)), p)
        _accumulate(want, ((j,), (i,)), -p)
    diff = dict(alt)
    _add_into(diff, want, Poly.constant(-1, ch.d))
    ok = not diff
    return [Ident("semiclassical", ok, 1, "" if ok else f"difference {format_tensor_terms(diff)}")]


def cocycle_report(J: FormalTwistor) -> List[Ident]:
    out = []
    for m in range(J.order + 1):
        res = cocycle_residual(J, m)
        alt = maurer_cartan_residual(J, m)
        out.append(Ident(f"cocycle[order {m}]", res.is_zero(), m, "" if res.is_zero() else str(res)))
        same = (res - alt).is_zero()
        out.append(Ident(f"cocycle-vs-mc-form[order {m}]", same, m, "" if same else str(res - alt)))
    out.append(Ident("counit-normalized", counit_normalized(J)))
    return out


# -- plain tensors with per-slot coefficients ------------------------------------
#
# KTerms maps a tuple of PBW monomials to a Poly in n*d variables; the block
# of variables [s*d, (s+1)*d) holds the coefficient written in front of the
# monomial in slot s.  A series is a list indexed by the power of hbar.

KTerms = Dict[TensorKey, Poly]


def _split(e, n, d):
    return [e[s * d:(s + 1) * d] for s in range(n)]


def kt_from_factors(ch: Chart, factors: Sequence[UETerms]) -> KTerms:
    n = len(factors)
    nv = n * ch.d
    out: KTerms = {(): Poly.constant(1, nv)}
    for s, fac in enumerate(factors):
        nxt: KTerms = {}
        for key, c in out.items():
            for m, p in fac.items():
                _accumulate(nxt, key + (m,), c * p.embed(nv, s * ch.d))
        out = nxt
    return out


def kt_from_canonical(ch: Chart, terms: TensorTerms) -> KTerms:
    """Plain representative with the whole coefficient in slot 0."""
    out: KTerms = {}
    for key, p in terms.items():
        nv = len(key) * ch.d
        _accumulate(out, key, p.embed(nv, 0))
    return out


def kt_reduce(ch: Chart, kt: KTerms) -> TensorTerms:
    """Image in UE (x)_R ... (x)_R UE: all coefficients move to the front."""
    d = ch.d
    out: TensorTerms = {}
    for key, p in kt.items():
        n = len(key)
        terms: Dict = {}
        for e, c in p.items():
            parts = _split(e, n, d)
            tot = tuple(sum(col) for col in zip(*parts)) if d else ()
            terms[tot] = terms.get(tot, 0) + c
        _accumulate(out, key, Poly(d, terms))
    return out


def _kt_pieces(ch: Chart, kt: KTerms):
    """Yield (scalar, [UETerms per slot]) for each monomial of each coefficient."""
    d = ch.d
    for key, p in kt.items():
        n = len(key)
        for e, c in p.items():
            parts = _split(e, n, d)
            yield c, [{m: Poly.monomial(part) if d else Poly.constant(1, 0)} for m, part in zip(key, parts)]


def kt_mul(ch: Chart, X: KTerms, Y: KTerms) -> KTerms:
    """Factorwise product of plain tensors."""
    out: KTerms = {}
    ys = list(_kt_pieces(ch, Y))
    for cx, fx in _kt_pieces(ch, X):
        for cy, fy in ys:
            if len(fx) != len(fy):
                raise ValueError("arity mismatch")
            factors = [ue_mul_terms(ch, a, b) for a, b in zip(fx, fy)]
            if any(not f for f in factors):
                continue
            for key, p in kt_from_factors(ch, factors).items():
                _accumulate(out, key, p.scale(cx * cy))
    return out


def kt_add(out: KTerms, other: KTerms, scale=1):
    for key, p in other.items():
        _accumulate(out, key, p if scale == 1 else p.scale(scale))


def series_mul(ch, A: List[KTerms], B: List[KTerms], n: int) -> List[KTerms]:
    out = [dict() for _ in range(n + 1)]
    for a, X in enumerate(A):
        for b, Y in enumerate(B):
            if a + b <= n and X and Y:
                kt_add(out[a + b], kt_mul(ch, X, Y))
    return out


def series_reduce(ch, A: List[KTerms]) -> List[TensorTerms]:
    return [kt_reduce(ch, X) for X in A]


# -- the twisted Hopf algebroid -----------------------------------------------------

UESeries = List[UETerms]


def _ue_series_add(out: UESeries, other: UESeries, scale=1):
    for m, terms in enumerate(other):
        for k, p in terms.items():
            _accumulate(out[m], k, p if scale == 1 else p.scale(scale))


class TwistedHopf:
    """(UE[[hbar]], R_J, Delta_J, s_J, t_J, eps) truncated at the order of J."""

    def __init__(self, J: FormalTwistor, check_cocycle: bool = True):
        self.J = J
        self.chart = J.chart
        self.n = J.order
        if check_cocycle:
            for m in range(self.n + 1):
                if cocycle_residual(J, m).terms:
                    raise CocycleFailure(f"twistor residual nonzero at order {m}; refusing to twist")
        ch = self.chart
        self.J_kt = [kt_from_canonical(ch, J.terms(m)) for m in range(self.n + 1)]
        self._delta_cache: Dict = {}

    # source and target ------------------------------------------------------
    def _st(self, f: Poly, b: int, source: bool) -> UETerms:
        ch = self.chart
        out: UETerms = {}
        for (x, y), g in self.J.terms(b).items():
            act, keep = (x, y) if source else (y, x)
            val = anchor_mono(ch, act, f)
            if val:
                _accumulate(out, keep, g * val)
        return out

    def s_J(self, f: PolyLike) -> UESeries:
        f = self.chart.poly(f)
        return [self._st(f, b, True) for b in range(self.n + 1)]

    def t_J(self, f: PolyLike) -> UESeries:
        f = self.chart.poly(f)
        return [self._st(f, b, False) for b in range(self.n + 1)]

    def star(self, a: PolyLike, b: PolyLike) -> List[Poly]:
        return twisted_product(a, b, self.J).coefficients

    def inverse(self) -> List[KTerms]:
        """J^{-1} mod hbar^{n+1} as a plain tensor: sum_k (1 - J)^k."""
        ch = self.chart
        one = kt_from_factors(ch, [{(): ch.one()}, {(): ch.one()}])
        minus = [dict()] + [{k: -p for k, p in t.items()} for t in self.J_kt[1:]]
        out = [dict(one)] + [dict() for _ in range(self.n)]
        power = [dict(one)] + [dict() for _ in range(self.n)]
        for _ in range(self.n):
            power = series_mul(ch, power, minus, self.n)
            for m, t in enumerate(power):
                kt_add(out[m], t)
        return out

    def conjugated_coproduct(self, u: UESeries) -> List[TensorTerms]:
        """J^{-1} Delta(u) J computed factorwise; meaningful over a point only."""
        ch = self.chart
        if ch.d:
            raise ValueError("plain conjugation by J is only well defined over a point")
        du = [kt_from_canonical(ch, coproduct_terms(ch, t)) if t else {} for t in u]
        return series_reduce(ch, series_mul(ch, series_mul(ch, self.inverse(), du, self.n), self.J_kt, self.n))

    # products of series of UE elements -----------------------------------------
    def ue_series_mul(self, A: UESeries, B: UESeries) -> UESeries:
        ch = self.chart
        out = [dict() for _ in range(self.n + 1)]
        for a, X in enumerate(A):
            for b, Y in enumerate(B):
                if a + b <= self.n and X and Y:
                    for k, p in ue_mul_terms(ch, X, Y).items():
                        _accumulate(out[a + b], k, p)
        return out

    # J . X ---------------------------------------------------------------------
    def F(self, X: List[KTerms]) -> List[TensorTerms]:
        """Left multiplication by J, landing in UE (x)_R UE."""
        return series_reduce(self.chart, series_mul(self.chart, self.J_kt, X, self.n))

    def F3(self, X: List[KTerms]) -> List[TensorTerms]:
        """Left multiplication by J^{12,3} J^{1,2} on plain triple tensors."""
        ch = self.chart
        K = [dict() for _ in range(self.n + 1)]
        for a in range(self.n + 1):
            spread = {}
            for (x, y), p in self.J.terms(a).items():
                for (x1, x2), q in coproduct_terms(ch, {x: ch.one()}).items():
                    _accumulate(spread, (x1, x2, y), p * q)
            for b in range(self.n + 1 - a):
                right = {(x, y, ()): p for (x, y), p in self.J.terms(b).items()}
                for key, p in factorwise_product(ch, spread, right, coeff_slot=0).items():
                    _accumulate(K[a + b], key, p)
        K_kt = [kt_from_canonical(ch, t) for t in K]
        return series_reduce(ch, series_mul(ch, K_kt, X, self.n))

    # the twisted coproduct ---------------------------------------------------------
    def delta_J(self, u: UESeries) -> List[KTerms]:
        """A plain representative sum t_J(f) m1 (x) m2 of Delta_J(u)."""
        ch = self.chart
        n = self.n
        key = tuple(frozenset(t.items()) for t in u)
        got = self._delta_cache.get(key)
        if got is not None:
            return got
        # target: Delta(u) J, computed with J's coefficient inside the Delta block
        target: List[TensorTerms] = [dict() for _ in range(n + 1)]
        for a, ua in enumerate(u):
            if not ua:
                continue
            du = coproduct_terms(ch, ua)
            for b in range(n + 1 - a):
                _add_into(target[a + b], factorwise_product(ch, du, self.J.terms(b), coeff_slot=0))
        X: List[KTerms] = [dict() for _ in range(n + 1)]
        for k in range(n + 1):
            current = self.F(X)[k]
            residual = dict(target[k])
            _add_into(residual, current, Poly.constant(-1, ch.d))
            for (m1, m2), f in residual.items():
                for b in range(n + 1 - k):
                    slot0 = ue_mul_terms(ch, self._st(f, b, False), {m1: ch.one()})
                    kt_add(X[k + b], kt_from_factors(ch, [slot0, {m2: ch.one()}]))
        self._delta_cache[key] = X
        return X

    def delta_J_element(self, u: Union[UEElement, UESeries]) -> List[KTerms]:
        if isinstance(u, UEElement):
            u = [u.terms] + [dict() for _ in range(self.n)]
        return self.delta_J(u)

    # maps out of plain tensors --------------------------------------------------------
    def _slots(self, X: List[KTerms]):
        """Yield (hbar order, scalar, slot UE terms) for every piece of a plain series."""
        for m, kt in enumerate(X):
            for c, factors in _kt_pieces(self.chart, kt):
                yield m, c, factors

    def counit_left(self, X: List[KTerms]) -> UESeries:
        """(eps (x) id): x (x) y -> s_J(eps(x)) y."""
        out = [dict() for _ in range(self.n + 1)]
        for m, c, (x, y) in self._slots(X):
            e = x.get((), None)
            if e is None:
                continue
            sJ = self.s_J(e.scale(c))
            ys = [dict() for _ in range(self.n + 1)]
            ys[0] = y
            shifted = [dict() for _ in range(self.n + 1)]
            for b, t in enumerate(self.ue_series_mul(sJ, ys)):
                if m + b <= self.n:
                    shifted[m + b] = t
            _ue_series_add(out, shifted)
        return out

    def counit_right(self, X: List[KTerms]) -> UESeries:
        """(id (x) eps): x (x) y -> t_J(eps(y)) x."""
        out = [dict() for _ in range(self.n + 1)]
        for m, c, (x, y) in self._slots(X):
            e = y.get((), None)
            if e is None:
                continue
            tJ = self.t_J(e.scale(c))
            xs = [dict() for _ in range(self.n + 1)]
            xs[0] = x
            shifted = [dict() for _ in range(self.n + 1)]
            for b, t in enumerate(self.ue_series_mul(tJ, xs)):
                if m + b <= self.n:
                    shifted[m + b] = t
            _ue_series_add(out, shifted)
        return out

    def _apply_slot(self, X: List[KTerms], slot: int) -> List[KTerms]:
        """Apply Delta_J to one slot of a plain double tensor, giving a triple."""
        ch = self.chart
        out: List[KTerms] = [dict() for _ in range(self.n + 1)]
        for m, c, factors in self._slots(X):
            u = [dict() for _ in range(self.n + 1)]
            u[0] = {k: p.scale(c) for k, p in factors[slot].items()}
            D = self.delta_J(u)
            other = factors[1 - slot]
            for b, kt in enumerate(D):
                if m + b > self.n:
                    continue
                for key, p in kt.items():
                    pieces = []
                    for e, cc in p.items():
                        parts = _split(e, 2, ch.d)
                        pieces.append((cc, parts))
                    for cc, parts in pieces:
                        slots2 = [{key[0]: Poly.monomial(parts[0]) if ch.d else ch.one()},
                                  {key[1]: Poly.monomial(parts[1]) if ch.d else ch.one()}]
                        factors3 = slots2 + [other] if slot == 0 else [other] + slots2
                        kt_add(out[m + b], kt_from_factors(ch, factors3), cc)
        return out

    # axiom report ---------------------------------------------------------------------
    def axioms(self, elements: Sequence[UEElement], functions: Sequence[Poly]) -> List[Ident]:
        ch = self.chart
        n = self.n
        out: List[Ident] = []

        def series_of(u: UEElement) -> UESeries:
            return [u.terms] + [dict() for _ in range(n)]

        def ue_diff(A: UESeries, B: UESeries):
            diff = [dict(t) for t in A]
            _ue_series_add(diff, B, -1)
            return [t for t in diff if t]

        def tensor_diff(A: List[TensorTerms], B: List[TensorTerms]):
            bad = []
            for m, (a, b) in enumerate(zip(A, B)):
                d = dict(a)
                _add_into(d, b, Poly.constant(-1, ch.d))
                if d:
                    bad.append((m, format_tensor_terms(d)))
            return bad

        def record(name, bad):
            detail = "" if not bad else f"{bad[0]}"
            out.append(Ident(name, not bad, n, detail))

        one = UEElement.one(ch)
        # Delta_J(1) = 1 (x) 1 and eps(1) = 1
        X1 = self.delta_J(series_of(one))
        unit = [kt_from_factors(ch, [{(): ch.one()}, {(): ch.one()}])] + [dict() for _ in range(n)]
        record("twisted-coproduct-unit", tensor_diff(self.F(X1), self.F(unit)))
        record("twistor-inverse", tensor_diff(self.F(self.inverse()), series_reduce(ch, unit)))
        for u in elements:
            label = str(u).replace(" ", "")
            X = self.delta_J(series_of(u))
            if ch.d == 0:
                record(f"twisted-coproduct-conjugation[{label}]",
                       tensor_diff(series_reduce(ch, X), self.conjugated_coproduct(series_of(u))))
            record(f"twisted-counit-left[{label}]", ue_diff(self.counit_left(X), series_of(u)))
            record(f"twisted-counit-right[{label}]", ue_diff(self.counit_right(X), series_of(u)))
            record(f"twisted-coassociativity[{label}]",
                   tensor_diff(self.F3(self._apply_slot(X, 0)), self.F3(self._apply_slot(X, 1))))
            for a in functions:
                tl = [kt_from_factors(ch, [t, {(): ch.one()}]) if t else {} for t in self.t_J(a)]
                sr = [kt_from_factors(ch, [{(): ch.one()}, t]) if t else {} for t in self.s_J(a)]
                lhs = self.F(series_mul(ch, X, tl, n))
                rhs = self.F(series_mul(ch, X, sr, n))
                record(f"twisted-ideal[{label};{a}]", tensor_diff(lhs, rhs))
                # anchor equations: s_J(rho(x1) a) x2 = x s_J(a) and t_J(rho(x2) a) x1 = x t_J(a)
                left = [dict() for _ in range(n + 1)]
                right = [dict() for _ in range(n + 1)]
                for m, c, (x1, x2) in self._slots(X):
                    ra = sum((p * anchor_mono(ch, mono, a) for mono, p in x1.items()), ch.zero()).scale(c)
                    piece = self.ue_series_mul(self.s_J(ra), [x2] + [dict() for _ in range(n)])
                    _ue_series_add(left, [dict() for _ in range(m)] + piece[:n + 1 - m])
                    rb = sum((p * anchor_mono(ch, mono, a) for mono, p in x2.items()), ch.zero()).scale(c)
                    piece = self.ue_series_mul(self.t_J(rb), [x1] + [dict() for _ in range(n)])
                    _ue_series_add(right, [dict() for _ in range(m)] + piece[:n + 1 - m])
                record(f"anchor-source[{label};{a}]", ue_diff(left, self.ue_series_mul(series_of(u), self.s_J(a))))
                record(f"anchor-target[{label};{a}]", ue_diff(right, self.ue_series_mul(series_of(u), self.t_J(a))))
        for u, v in itertools.product(elements, repeat=2):
            label = f"{u}|{v}".replace(" ", "")
            Xuv = self.delta_J(series_of(UEElement._raw(ch, ue_mul_terms(ch, u.terms, v.terms))))
            prod = series_mul(ch, self.delta_J(series_of(u)), self.delta_J(series_of(v)), n)
            record(f"twisted-multiplicativity[{label}]", tensor_diff(self.F(prod), self.F(Xuv)))
        # source and target maps
        for a, b in itertools.product(functions, repeat=2):
            label = f"{a};{b}"
            ab = self.star(a, b)
            sab = [dict() for _ in range(n + 1)]
            tab = [dict() for _ in range(n + 1)]
            for m, p in enumerate(ab):
                _ue_series_add(sab, [dict() for _ in range(m)] + self.s_J(p)[:n + 1 - m])
                _ue_series_add(tab, [dict() for _ in range(m)] + self.t_J(p)[:n + 1 - m])
            record(f"source-homomorphism[{label}]", ue_diff(sab, self.ue_series_mul(self.s_J(a), self.s_J(b))))
            record(f"target-antihomomorphism[{label}]", ue_diff(tab, self.ue_series_mul(self.t_J(b), self.t_J(a))))
            record(f"source-target-commute[{label}]",
                   ue_diff(self.ue_series_mul(self.s_J(a), self.t_J(b)), self.ue_series_mul(self.t_J(b), self.s_J(a))))
            act_s = [UEElement._raw(ch, t).act(b) for t in self.s_J(a)]
            act_t = [UEElement._raw(ch, t).act(a) for t in self.t_J(b)]
            bad = [m for m in range(n + 1) if act_s[m] != ab[m] or act_t[m] != ab[m]]
            record(f"anchor-star[{label}]", bad)
        for a in functions:
            eps_s = [t.get((), ch.zero()) for t in self.s_J(a)]
            eps_t = [t.get((), ch.zero()) for t in self.t_J(a)]
            want = [a] + [ch.zero()] * n
            record(f"counit-source-target[{a}]", [m for m in range(n + 1) if eps_s[m] != want[m] or eps_t[m] != want[m]])
        return out


def twisted_hopf(J: FormalTwistor, elements: Optional[Sequence[UEElement]] = None,
                 functions: Optional[Sequence[PolyLike]] = None) -> Tuple[TwistedHopf, List[Ident]]:
    """Build the twisted structure and check it on sample elements and functions."""
    ch = J.chart
    H = TwistedHopf(J)
    if elements is None:
        elements = [UEElement.generator(ch, i) for i in range(ch.r)]
        elements += [UEElement.function(ch, Poly.var(a, ch.d)) for a in range(ch.d)]
    if functions is None:
        functions = [Poly.var(a, ch.d) for a in range(ch.d)] or [ch.one()]
    functions = [ch.poly(f) for f in functions]
    return H, H.axioms(elements, functions)
