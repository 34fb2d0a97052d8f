"""The enveloping algebroid UE, polydifferential operators D_poly E, and HKR.

UE elements are stored in PBW normal form: a map from non-decreasing
generator tuples to left coefficients.  Tensor powers over the base ring use
the relation ``f u (x) v = u (x) f v`` (both actions on the left), which is
the one under which a tensor ``x (x) y`` acts as the bidifferential operator
``(a, b) -> (rho(x) a)(rho(y) b)``.  UE^{(x)n} is then a free left module on
tuples of PBW monomials, so a PolyDiffOp is a map from monomial tuples to a
single coefficient.

The empty tuple ``()`` is the arity-0 key (a function, degree -1); ``((),)``
is the unit 1 of UE in degree 0.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .chart import Chart, PolyLike, _accumulate
from .exterior import perm_sign
from .poly import ParseError, Poly
from .polyvectors import PolyVector
from .syntax import Algebra, ExprParser

Mono = Tuple[int, ...]
UETerms = Dict[Mono, Poly]
TensorKey = Tuple[Mono, ...]
TensorTerms = Dict[TensorKey, Poly]


def _add_into(out: dict, other: Mapping, scale: Optional[Poly] = None):
    for k, p in other.items():
        _accumulate(out, k, p if scale is None else scale * p)


# -- UE normal ordering -----------------------------------------------------

def _gen_times_mono(ch: Chart, i: int, m: Mono) -> UETerms:
    """e_i * m for a normal-ordered monomial m (coefficient 1)."""
    cache = ch.cache.setdefault("ue_gen_mono", {})
    key = (i, m)
    got = cache.get(key)
    if got is not None:
        return got
    if not m or i <= m[0]:
        out = {(i,) + m: ch.one()}
    else:
        j, rest = m[0], m[1:]
        # e_i e_j rest = e_j (e_i rest) + [e_i, e_j] rest
        out = _gen_times(ch, j, _gen_times_mono(ch, i, rest))
        for k, cijk in ch.bracket(i, j).items():
            _add_into(out, _gen_times_mono(ch, k, rest), cijk)
    cache[key] = out
    return out


def _gen_times(ch: Chart, i: int, terms: UETerms) -> UETerms:
    """e_i * sum h_m m = sum h_m (e_i m) + (rho(e_i) h_m) m."""
    out: UETerms = {}
    for m, h in terms.items():
        _add_into(out, _gen_times_mono(ch, i, m), h)
        dh = ch.anchor(i, h)
        if dh:
            _accumulate(out, m, dh)
    return out


def _mono_times(ch: Chart, m: Mono, terms: UETerms) -> UETerms:
    out = terms
    for i in reversed(m):
        out = _gen_times(ch, i, out)
    return out if out is not terms else dict(terms)


def ue_mul_terms(ch: Chart, a: UETerms, b: UETerms) -> UETerms:
    out: UETerms = {}
    if not a or not b:
        return out
    for m, f in a.items():
        _add_into(out, _mono_times(ch, m, b), f)
    return out


def anchor_mono(ch: Chart, m: Mono, f: Poly) -> Poly:
    """rho(e_{m_1} ... e_{m_n}) . f = rho(e_{m_1})(... rho(e_{m_n}) f)."""
    for i in reversed(m):
        if not f:
            break
        f = ch.anchor(i, f)
    return f


def normal_order_word(ch: Chart, word: Sequence) -> UETerms:
    """Normal form of a word whose letters are generator indices (int) or Polys."""
    out: UETerms = {(): ch.one()}
    for letter in reversed(word):
        if isinstance(letter, Poly):
            out = {m: letter * p for m, p in out.items() if letter * p}
            out = {m: p for m, p in out.items() if p}
        else:
            out = _gen_times(ch, letter, out)
    return out


class UEElement:
    """An element of UE in PBW normal form."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: Optional[Mapping[Sequence[int], PolyLike]] = None):
        self.chart = chart
        out: UETerms = {}
        for m, v in (terms or {}).items():
            m = tuple(m)
            if any(not 0 <= i < chart.r for i in m):
                raise IndexError(f"generator index out of range in {m}")
            p = chart.poly(v)
            if list(m) == sorted(m):
                _accumulate(out, m, p)
            else:
                _add_into(out, normal_order_word(chart, m), p)
        self.terms = out

    @classmethod
    def _raw(cls, chart, terms):
        u = object.__new__(cls)
        u.chart = chart
        u.terms = terms
        return u

    @classmethod
    def one(cls, chart):
        return cls._raw(chart, {(): chart.one()})

    @classmethod
    def function(cls, chart, f: PolyLike):
        f = chart.poly(f)
        return cls._raw(chart, {(): f} if f else {})

    @classmethod
    def generator(cls, chart, i: int, coeff: PolyLike = 1):
        return cls(chart, {(i,): coeff})

    def _check(self, other):
        if not isinstance(other, UEElement):
            raise TypeError("expected a UEElement")
        if other.chart != self.chart:
            raise ValueError("chart mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        _add_into(out, other.terms)
        return UEElement._raw(self.chart, out)

    def __neg__(self):
        return UEElement._raw(self.chart, {m: -p for m, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, UEElement):
            return ue_mul(self, other)
        return NotImplemented

    def scale(self, f: PolyLike) -> "UEElement":
        f = self.chart.poly(f)
        out: UETerms = {}
        for m, p in self.terms.items():
            _accumulate(out, m, f * p)
        return UEElement._raw(self.chart, out)

    def filtration(self) -> int:
        return max((len(m) for m in self.terms), default=-1)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, UEElement) and self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"UEElement({format_ue_terms(self.terms)})"

    def __str__(self):
        return format_ue_terms(self.terms)

    def act(self, f: PolyLike) -> Poly:
        """rho(u) . f through the extended anchor."""
        f = self.chart.poly(f)
        out = Poly.zero(self.chart.d)
        for m, c in self.terms.items():
            out = out + c * anchor_mono(self.chart, m, f)
        return out


def ue_mul(a: UEElement, b: UEElement) -> UEElement:
    a._check(b)
    return UEElement._raw(a.chart, ue_mul_terms(a.chart, a.terms, b.terms))


def counit(a: UEElement) -> Poly:
    return a.terms.get((), a.chart.zero())


# -- tensors ----------------------------------------------------------------

def tensor_terms(factors: Sequence[UETerms]) -> TensorTerms:
    """Canonical form of ``u_0 (x) ... (x) u_n``: coefficients multiply together."""
    out: TensorTerms = {(): None}
    for fac in factors:
        nxt: TensorTerms = {}
        for key, c in out.items():
            for m, p in fac.items():
                prod = p if c is None else c * p
                _accumulate(nxt, key + (m,), prod)
        out = nxt
    if () in out and out[()] is None:
        raise ValueError("empty tensor product needs an explicit coefficient")
    return out


def _coproduct_mono(ch: Chart, m: Mono) -> TensorTerms:
    cache = ch.cache.setdefault("coproduct", {})
    got = cache.get(m)
    if got is not None:
        return got
    if not m:
        out = {((), ()): ch.one()}
    else:
        i, rest = m[0], m[1:]
        prev = _coproduct_mono(ch, rest)
        out = {}
        for (a, b), h in prev.items():
            # (e_i (x) 1 + 1 (x) e_i) . (h a (x) b); h stays in the first factor
            for ma, pa in _gen_times(ch, i, {a: h}).items():
                _accumulate(out, (ma, b), pa)
            for mb, pb in _gen_times_mono(ch, i, b).items():
                _accumulate(out, (a, mb), h * pb)
    cache[m] = out
    return out


def coproduct_terms(ch: Chart, terms: UETerms) -> TensorTerms:
    out: TensorTerms = {}
    for m, f in terms.items():
        _add_into(out, _coproduct_mono(ch, m), f)
    return out


def iterated_coproduct_mono(ch: Chart, m: Mono, n: int) -> TensorTerms:
    """Delta^{(n)}(m): n tensor factors; Delta^{(1)} = id, Delta^{(n+1)} = (Delta (x) id) Delta^{(n)}."""
    if n < 1:
        raise ValueError("use the counit for n = 0")
    cache = ch.cache.setdefault("iterated_coproduct", {})
    key = (m, n)
    got = cache.get(key)
    if got is not None:
        return got
    if n == 1:
        out = {(m,): ch.one()}
    else:
        out = {}
        for k, h in iterated_coproduct_mono(ch, m, n - 1).items():
            for (a, b), p in _coproduct_mono(ch, k[0]).items():
                _accumulate(out, (a, b) + k[1:], h * p)
    cache[key] = out
    return out


def apply_in_slot(ch: Chart, terms: TensorTerms, slot: int, fn) -> TensorTerms:
    """Apply a left-linear map ``fn(mono) -> TensorTerms`` to one tensor slot."""
    out: TensorTerms = {}
    for key, c in terms.items():
        for sub, p in fn(key[slot]).items():
            _accumulate(out, key[:slot] + sub + key[slot + 1:], c * p)
    return out


def factorwise_product(ch: Chart, left: TensorTerms, right: TensorTerms, coeff_slot: int = 0) -> TensorTerms:
    """Slot-by-slot product ``left . right`` with right's coefficient placed in ``coeff_slot``.

    Only representative-independent when ``left`` satisfies the Takeuchi
    condition on the slots the coefficient can move through; callers pick
    ``coeff_slot`` inside a coproduct block.
    """
    out: TensorTerms = {}
    for lkey, lc in left.items():
        for rkey, rc in right.items():
            if len(lkey) != len(rkey):
                raise ValueError("arity mismatch in factorwise product")
            factors = []
            for s, (lm, rm) in enumerate(zip(lkey, rkey)):
                base = {rm: rc} if s == coeff_slot else {rm: ch.one()}
                factors.append(_mono_times(ch, lm, base))
            for key, p in tensor_terms(factors).items():
                _accumulate(out, key, lc * p)
    return out


class PolyDiffOp:
    """An element of D_poly E = (+)_k UE^{(x)(k+1)}, possibly mixing arities."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: Optional[Mapping[Sequence[Sequence[int]], PolyLike]] = None):
        self.chart = chart
        out: TensorTerms = {}
        for key, v in (terms or {}).items():
            p = chart.poly(v)
            factors = [UEElement(chart, {tuple(m): 1}).terms for m in key]
            if not factors:
                _accumulate(out, (), p)
            else:
                _add_into(out, tensor_terms(factors), p)
        self.terms = out

    @classmethod
    def _raw(cls, chart, terms):
        P = object.__new__(cls)
        P.chart = chart
        P.terms = terms
        return P

    @classmethod
    def function(cls, chart, f: PolyLike):
        f = chart.poly(f)
        return cls._raw(chart, {(): f} if f else {})

    @classmethod
    def m0(cls, chart):
        """The multiplication 1 (x) 1 in D^1."""
        return cls._raw(chart, {((), ()): chart.one()})

    @classmethod
    def from_ue(cls, u: UEElement):
        return cls._raw(u.chart, {(m,): p for m, p in u.terms.items()})

    @classmethod
    def tensor(cls, *factors: UEElement):
        ch = factors[0].chart
        return cls._raw(ch, tensor_terms([u.terms for u in factors]))

    # -- grading --------------------------------------------------------
    def degrees(self):
        return sorted({len(k) - 1 for k in self.terms})

    @property
    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) > 1:
            raise ValueError("inhomogeneous polydifferential operator")
        return ds[0] if ds else -1

    def component(self, k: int) -> "PolyDiffOp":
        return PolyDiffOp._raw(self.chart, {key: p for key, p in self.terms.items() if len(key) == k + 1})

    def filtration(self) -> int:
        return max((sum(len(m) for m in key) for key in self.terms), default=-1)

    def is_zero(self):
        return not self.terms

    # -- linear structure ----------------------------------------------
    def _check(self, other):
        if not isinstance(other, PolyDiffOp):
            raise TypeError("expected a PolyDiffOp")
        if other.chart != self.chart:
            raise ValueError("chart mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        _add_into(out, other.terms)
        return PolyDiffOp._raw(self.chart, out)

    def __neg__(self):
        return PolyDiffOp._raw(self.chart, {k: -p for k, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f: PolyLike) -> "PolyDiffOp":
        f = self.chart.poly(f)
        out: TensorTerms = {}
        for k, p in self.terms.items():
            _accumulate(out, k, f * p)
        return PolyDiffOp._raw(self.chart, out)

    def __eq__(self, other):
        return isinstance(other, PolyDiffOp) and self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"PolyDiffOp({format_tensor_terms(self.terms)})"

    def __str__(self):
        return format_tensor_terms(self.terms)

    # -- operations -----------------------------------------------------
    def act(self, *functions: PolyLike) -> Poly:
        """Evaluate as a polydifferential operator on polynomials."""
        ch = self.chart
        fs = [ch.poly(f) for f in functions]
        out = ch.zero()
        for key, c in self.terms.items():
            if len(key) != len(fs):
                raise ValueError(f"operator of arity {len(key)} applied to {len(fs)} functions")
            prod = c
            for m, f in zip(key, fs):
                prod = prod * anchor_mono(ch, m, f)
                if not prod:
                    break
            out = out + prod
        return out

    def bullet(self, other: "PolyDiffOp") -> "PolyDiffOp":
        return bullet(self, other)

    def bracket(self, other: "PolyDiffOp") -> "PolyDiffOp":
        return gerstenhaber_bracket(self, other)


def coproduct(a: UEElement) -> PolyDiffOp:
    return PolyDiffOp._raw(a.chart, coproduct_terms(a.chart, a.terms))


def counit_slot(ch: Chart, terms: TensorTerms, slot: int) -> TensorTerms:
    """(id (x) .. eps .. (x) id) on the given slot."""
    out: TensorTerms = {}
    for key, c in terms.items():
        if not key[slot]:
            _accumulate(out, key[:slot] + key[slot + 1:], c)
    return out


def _by_arity(terms: TensorTerms) -> Dict[int, TensorTerms]:
    out: Dict[int, TensorTerms] = {}
    for key, p in terms.items():
        out.setdefault(len(key), {})[key] = p
    return out


def bullet_terms(ch: Chart, P1: TensorTerms, P2: TensorTerms) -> TensorTerms:
    """P1 . P2 for homogeneous operands given as raw terms."""
    out: TensorTerms = {}
    if not P1 or not P2:
        return out
    n1 = len(next(iter(P1)))
    n2 = len(next(iter(P2)))
    k1, k2 = n1 - 1, n2 - 1
    for i in range(n1):
        sign = -1 if (i * k2) % 2 else 1
        if n2 == 0:
            # inserting a function: slot i acts on it through the anchor
            g = P2[()]
            for key, c in P1.items():
                val = anchor_mono(ch, key[i], g)
                if val:
                    _accumulate(out, key[:i] + key[i + 1:], c * val if sign > 0 else -(c * val))
            continue
        spread = apply_in_slot(ch, P1, i, lambda m: iterated_coproduct_mono(ch, m, n2))
        placed = {((),) * i + key + ((),) * (k1 - i): p for key, p in P2.items()}
        prod = factorwise_product(ch, spread, placed, coeff_slot=i)
        _add_into(out, prod, None if sign > 0 else Poly.constant(-1, ch.d))
    return out


def bullet(P1: PolyDiffOp, P2: PolyDiffOp) -> PolyDiffOp:
    P1._check(P2)
    ch = P1.chart
    out: TensorTerms = {}
    for n1, t1 in _by_arity(P1.terms).items():
        for n2, t2 in _by_arity(P2.terms).items():
            _add_into(out, bullet_terms(ch, t1, t2))
    return PolyDiffOp._raw(ch, out)


def gerstenhaber_terms(ch: Chart, a: TensorTerms, b: TensorTerms) -> TensorTerms:
    out: TensorTerms = {}
    minus = Poly.constant(-1, ch.d)
    for n1, t1 in _by_arity(a).items():
        for n2, t2 in _by_arity(b).items():
            _add_into(out, bullet_terms(ch, t1, t2))
            if ((n1 - 1) * (n2 - 1)) % 2 == 0:
                _add_into(out, bullet_terms(ch, t2, t1), minus)
            else:
                _add_into(out, bullet_terms(ch, t2, t1))
    return out


def gerstenhaber_bracket(P1: PolyDiffOp, P2: PolyDiffOp) -> PolyDiffOp:
    """[P1, P2] = P1 . P2 - (-1)^{k1 k2} P2 . P1, extended bilinearly over arities."""
    P1._check(P2)
    return PolyDiffOp._raw(P1.chart, gerstenhaber_terms(P1.chart, P1.terms, P2.terms))


def hochschild_d(P: PolyDiffOp) -> PolyDiffOp:
    """The differential [m0, .]."""
    return gerstenhaber_bracket(PolyDiffOp.m0(P.chart), P)


def hkr(v: PolyVector) -> PolyDiffOp:
    """Antisymmetrization ``v_0 ^ .. ^ v_n -> 1/(n+1)! sum sgn(s) v_s0 (x) .. (x) v_sn``."""
    ch = v.chart
    out: TensorTerms = {}
    for key, f in v.terms.items():
        if not key:
            _accumulate(out, (), f)
            continue
        n = len(key)
        w = f / math.factorial(n)
        for perm in itertools.permutations(range(n)):
            tk = tuple((key[p],) for p in perm)
            _accumulate(out, tk, w if perm_sign(perm) > 0 else -w)
    return PolyDiffOp._raw(ch, out)


# -- truncated cohomology over a point ----------------------------------------

class WindowTooLarge(ValueError):
    pass


def monomials_upto(r: int, L: int) -> List[Mono]:
    out: List[Mono] = []
    for n in range(L + 1):
        out.extend(itertools.combinations_with_replacement(range(r), n))
    return out


def window_basis(r: int, arity: int, L: int) -> List[TensorKey]:
    """Tuples of ``arity`` PBW monomials with total length <= L."""
    if arity == 0:
        return [()]
    monos = monomials_upto(r, L)
    out: List[TensorKey] = []

    def rec(prefix, budget, left):
        if left == 0:
            out.append(tuple(prefix))
            return
        for m in monos:
            if len(m) <= budget:
                rec(prefix + [m], budget - len(m), left - 1)

    rec([], L, arity)
    return out


def _rank(rows: List[Dict[int, Fraction]], ncols: int) -> int:
    from sympy.polys.domains import QQ
    from sympy.polys.matrices import DomainMatrix
    from sympy.polys.matrices.sdm import SDM

    if not rows or ncols == 0:
        return 0
    sdm = SDM({i: {j: QQ(v.numerator, v.denominator) for j, v in row.items()} for i, row in enumerate(rows) if row},
              (len(rows), ncols), QQ)
    return DomainMatrix.from_rep(sdm).rank()


def _vector(P: TensorTerms, index: Dict[TensorKey, int]) -> Dict[int, Fraction]:
    vec = {}
    for key, p in P.items():
        if key not in index:
            raise ValueError(f"term {key} falls outside the filtration window")
        vec[index[key]] = p.constant_term()
    return vec


def truncated_cohomology(ch: Chart, K: int, L: int, cap: int = 20000) -> List[dict]:
    """Cohomology of the filtered window F_L of (D_poly, d) in degrees -1..K.

    Requires a chart over a point.  Each row reports the window dimension,
    kernel and image ranks, the cohomology dimension, dim wedge^{k+1} V,
    and how many independent classes the HKR images of the wedge basis
    contribute.
    """
    if ch.d != 0:
        raise ValueError("truncated_cohomology needs a chart over a point (d = 0)")
    r = ch.r
    bases = {}
    for k in range(-1, K + 2):
        basis = window_basis(r, k + 1, L)
        if len(basis) > cap:
            raise WindowTooLarge(f"window of degree {k} has {len(basis)} elements (cap {cap})")
        bases[k] = basis
    index = {k: {key: n for n, key in enumerate(b)} for k, b in bases.items()}
    images: Dict[int, List[Dict[int, Fraction]]] = {}
    ranks: Dict[int, int] = {}
    m0 = PolyDiffOp.m0(ch).terms
    for k in range(-1, K + 1):
        cols = []
        for key in bases[k]:
            P = {key: ch.one()}
            cols.append(_vector(gerstenhaber_terms(ch, m0, P), index[k + 1]))
        images[k] = cols
        ranks[k] = _rank(cols, len(bases[k + 1]))
    rows = []
    for k in range(-1, K + 1):
        dim = len(bases[k])
        kernel = dim - ranks[k]
        boundary = ranks.get(k - 1, 0)
        expected = math.comb(r, k + 1)
        # HKR classes: rank of boundaries plus hkr images, minus rank of boundaries
        hkr_vecs = []
        closed = True
        if k + 1 <= L:
            for I in itertools.combinations(range(r), k + 1):
                v = hkr(PolyVector(ch, {I: 1}))
                if hochschild_d(v).terms:
                    closed = False
                hkr_vecs.append(_vector(v.terms, index[k]))
        bvecs = images.get(k - 1, [])
        hkr_rank = _rank(bvecs + hkr_vecs, dim) - _rank(bvecs, dim) if hkr_vecs else 0
        rows.append({
            "degree": k,
            "dim": dim,
            "kernel": kernel,
            "image_in": boundary,
            "cohomology": kernel - boundary,
            "wedge_dim": expected,
            "hkr_classes": hkr_rank,
            "hkr_closed": closed,
        })
    return rows


# -- text -------------------------------------------------------------------

def _mono_str(m: Mono) -> str:
    return "*".join(f"e{i + 1}" for i in m) if m else "1"


def format_ue_terms(terms: UETerms) -> str:
    if not terms:
        return "0"
    parts = []
    for m in sorted(terms, key=lambda m: (len(m), m)):
        parts.append(f"({terms[m]})*{_mono_str(m)}" if m else f"({terms[m]})")
    return " + ".join(parts)


def format_tensor_terms(terms: TensorTerms) -> str:
    if not terms:
        return "0"
    parts = []
    for key in sorted(terms, key=lambda k: (len(k), [len(m) for m in k], k)):
        body = "|".join(_mono_str(m) for m in key)
        parts.append(f"({terms[key]})*{body}" if body else f"({terms[key]})")
    return " + ".join(parts)


class _Scalar:
    __slots__ = ("p",)

    def __init__(self, p):
        self.p = p


class _TensorAlgebra(Algebra):
    """Values are _Scalar (a function) or PolyDiffOp; '*' multiplies in UE."""

    def __init__(self, chart):
        self.chart = chart
        self.nvars = chart.d

    def scalar(self, p):
        return _Scalar(p)

    def generator(self, kind, index):
        if kind != "e":
            return super().generator(kind, index)
        return PolyDiffOp._raw(self.chart, {((index,),): self.chart.one()})

    def _lift(self, v):
        if isinstance(v, _Scalar):
            return PolyDiffOp._raw(self.chart, {((),): v.p} if v.p else {})
        return v

    def add(self, a, b):
        if isinstance(a, _Scalar) and isinstance(b, _Scalar):
            return _Scalar(a.p + b.p)
        return self._lift(a) + self._lift(b)

    def neg(self, a):
        return _Scalar(-a.p) if isinstance(a, _Scalar) else -a

    def mul(self, a, b):
        if isinstance(a, _Scalar) and isinstance(b, _Scalar):
            return _Scalar(a.p * b.p)
        if isinstance(a, _Scalar):
            return b.scale(a.p)
        b = self._lift(b)
        if a.degrees() not in ([0], []) or b.degrees() not in ([0], []):
            raise ParseError("'*' is only defined between UE elements; use '|' for tensors")
        ua = {k[0]: p for k, p in a.terms.items()}
        ub = {k[0]: p for k, p in b.terms.items()}
        return PolyDiffOp._raw(self.chart, {(m,): p for m, p in ue_mul_terms(self.chart, ua, ub).items()})

    def tensor(self, a, b):
        a, b = self._lift(a), self._lift(b)
        out: TensorTerms = {}
        for ka, pa in a.terms.items():
            for kb, pb in b.terms.items():
                _accumulate(out, ka + kb, pa * pb)
        return PolyDiffOp._raw(self.chart, out)

    def power(self, a, n):
        out = _Scalar(Poly.constant(1, self.nvars))
        for _ in range(n):
            out = self.mul(out, a)
        return out


def parse_ue(text: str, chart: Chart) -> UEElement:
    """Parse a UE element such as ``e2*e1 + x1*e3``; the result is normal-ordered."""
    alg = _TensorAlgebra(chart)
    v = alg._lift(ExprParser(text, alg, chart.d, chart.r).parse())
    if any(len(k) != 1 for k in v.terms):
        raise ParseError("tensor separator '|' not allowed in a UE element")
    return UEElement._raw(chart, {k[0]: p for k, p in v.terms.items()})


def parse_polydiff(text: str, chart: Chart) -> PolyDiffOp:
    """Parse a tensor such as ``e1|e2 - e2|e1``; a bare polynomial is a degree -1 function."""
    alg = _TensorAlgebra(chart)
    v = ExprParser(text, alg, chart.d, chart.r).parse()
    if isinstance(v, _Scalar):
        return PolyDiffOp.function(chart, v.p)
    return v
