"""E-polyvector fields T_poly E with wedge product and the extended bracket.

Grading: a k-vector ``f e_{i_1}^...^e_{i_k}`` lives in T^{k-1}; functions
are T^{-1}.  The bracket has degree 0 for this grading and satisfies

    [u, v^w] = [u, v]^w + (-1)^{k(l+1)} v^[u, w]      (u in T^k, v in T^l)
    [u, v]   = -(-1)^{kl} [v, u]

extending [e_i, e_j] = c_ij^k e_k, [e_i, f] = rho(e_i) f and [f, g] = 0.
"""
from __future__ import annotations

from typing import Dict, Mapping, Optional, Tuple

from . import exterior
from .chart import Chart, PolyLike, _accumulate
from .poly import Poly
from .syntax import Algebra, ExprParser

Key = Tuple[int, ...]
Terms = Dict[Key, Poly]


class PolyVector:
    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: Optional[Mapping[Key, PolyLike]] = None):
        self.chart = chart
        clean: Terms = {}
        for key, v in (terms or {}).items():
            sign, k = exterior.sort_sign(key)
            if not sign:
                continue
            if any(not 0 <= i < chart.r for i in k):
                raise IndexError(f"index out of range in {key}")
            p = chart.poly(v)
            _accumulate(clean, k, p if sign > 0 else -p)
        self.terms = clean

    @classmethod
    def _raw(cls, chart: Chart, terms: Terms) -> "PolyVector":
        v = object.__new__(cls)
        v.chart = chart
        v.terms = terms
        return v

    # -- constructors -------------------------------------------------
    @classmethod
    def function(cls, chart: Chart, f: PolyLike) -> "PolyVector":
        return cls(chart, {(): f})

    @classmethod
    def basis(cls, chart: Chart, *indices: int, coeff: PolyLike = 1) -> "PolyVector":
        return cls(chart, {tuple(indices): coeff})

    # -- grading ------------------------------------------------------
    def degrees(self):
        """T-degrees present (wedge length minus one)."""
        return sorted({len(k) - 1 for k in self.terms})

    @property
    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) > 1:
            raise ValueError("inhomogeneous polyvector")
        return ds[0] if ds else -1

    def component(self, k: int) -> "PolyVector":
        return PolyVector._raw(self.chart, {key: p for key, p in self.terms.items() if len(key) == k + 1})

    def is_zero(self) -> bool:
        return not self.terms

    # -- linear structure ---------------------------------------------
    def _check(self, other):
        if not isinstance(other, PolyVector):
            raise TypeError("expected a PolyVector")
        if other.chart != self.chart:
            raise ValueError("chart mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, p in other.terms.items():
            _accumulate(out, k, p)
        return PolyVector._raw(self.chart, out)

    def __neg__(self):
        return PolyVector._raw(self.chart, {k: -p for k, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f: PolyLike) -> "PolyVector":
        f = self.chart.poly(f)
        out: Terms = {}
        for k, p in self.terms.items():
            _accumulate(out, k, f * p)
        return PolyVector._raw(self.chart, out)

    def __eq__(self, other):
        return isinstance(other, PolyVector) and self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return f"PolyVector({format_polyvector(self)})"

    def __str__(self):
        return format_polyvector(self)

    # -- products -----------------------------------------------------
    def wedge(self, other: "PolyVector") -> "PolyVector":
        self._check(other)
        return PolyVector._raw(self.chart, wedge_terms(self.terms, other.terms))

    def __xor__(self, other):
        return self.wedge(other)

    def bracket(self, other: "PolyVector") -> "PolyVector":
        return schouten_bracket(self, other)


def wedge_terms(a: Terms, b: Terms) -> Terms:
    out: Terms = {}
    for k1, p1 in a.items():
        for k2, p2 in b.items():
            sign, k = exterior.wedge(k1, k2)
            if sign:
                prod = p1 * p2
                _accumulate(out, k, prod if sign > 0 else -prod)
    return out


def wedge(u: PolyVector, v: PolyVector) -> PolyVector:
    return u.wedge(v)


# -- bracket building blocks (all on raw term dicts) ---------------------

def _ad_generator(ch: Chart, i: int, terms: Terms) -> Terms:
    """[e_i, v]: rho(e_i) on coefficients plus the bracket on each factor."""
    out: Terms = {}
    for key, g in terms.items():
        dg = ch.anchor(i, g)
        if dg:
            _accumulate(out, key, dg)
        for s, js in enumerate(key):
            for k, cik in ch.bracket(i, js).items():
                replaced = key[:s] + (k,) + key[s + 1:]
                sign, new = exterior.sort_sign(replaced)
                if sign:
                    prod = cik * g
                    _accumulate(out, new, prod if sign > 0 else -prod)
    return out


def _ad_function(ch: Chart, f: Poly, terms: Terms) -> Terms:
    """[f, v] = -sum_t (-1)^t rho(e_{j_t}) f  g e_{J minus j_t}."""
    out: Terms = {}
    for key, g in terms.items():
        for t, jt in enumerate(key):
            df = ch.anchor(jt, f)
            if not df:
                continue
            prod = df * g
            # t is 0-based, so (-1)^{t} here is (-1)^{s-1} for 1-based s
            _accumulate(out, key[:t] + key[t + 1:], -prod if t % 2 == 0 else prod)
    return out


def _neg(terms: Terms) -> Terms:
    return {k: -p for k, p in terms.items()}


def _bracket_monomials(ch: Chart, ukey: Key, f: Poly, wkey: Key, g: Poly) -> Terms:
    """[f e_I, g e_J] through the Leibniz rule in the second slot and antisymmetry."""
    k = len(ukey) - 1
    m = len(wkey) - 1
    w = {wkey: g}
    out: Terms = {}
    # [w, u] = [w, f] ^ e_I + f [w, e_I]
    if wkey:
        wf = _ad_function(ch, f, w)  # [f, w]
        # [w, f] = -(-1)^{m * (-1)} [f, w] = -(-1)^m [f, w]
        factor = -1 if m % 2 == 0 else 1
        for key, p in wedge_terms(wf, {ukey: Poly.constant(factor, f.nvars)}).items():
            _accumulate(out, key, p)
    if ukey:
        for s, i in enumerate(ukey):
            # [w, e_i] = -[e_i, w]
            we = _neg(_ad_generator(ch, i, w))
            if not we:
                continue
            left = {ukey[:s]: Poly.constant((-1) ** (m * s), f.nvars)}
            right = {ukey[s + 1:]: f}
            for key, p in wedge_terms(wedge_terms(left, we), right).items():
                _accumulate(out, key, p)
    # [u, w] = -(-1)^{k m} [w, u]
    if (k * m) % 2 == 0:
        return _neg(out)
    return out


def bracket_terms(ch: Chart, a: Terms, b: Terms) -> Terms:
    out: Terms = {}
    for ukey, f in a.items():
        for wkey, g in b.items():
            for key, p in _bracket_monomials(ch, ukey, f, wkey, g).items():
                _accumulate(out, key, p)
    return out


def schouten_bracket(u: PolyVector, v: PolyVector) -> PolyVector:
    """The extended bracket [u, v]_E (bilinear, applied termwise)."""
    u._check(v)
    return PolyVector._raw(u.chart, bracket_terms(u.chart, u.terms, v.terms))


# -- text ---------------------------------------------------------------

def format_polyvector(v: PolyVector) -> str:
    if not v.terms:
        return "0"
    parts = []
    for key in sorted(v.terms, key=lambda k: (len(k), k)):
        basis = "^".join(f"e{i + 1}" for i in key)
        coeff = str(v.terms[key])
        parts.append(f"({coeff}) * {basis}" if basis else f"({coeff})")
    return " + ".join(parts)


class _PolyVectorAlgebra(Algebra):
    def __init__(self, chart: Chart):
        self.chart = chart
        self.nvars = chart.d

    def scalar(self, p):
        return PolyVector._raw(self.chart, {(): p} if p else {})

    def generator(self, kind, index):
        if kind != "e":
            return super().generator(kind, index)
        return PolyVector.basis(self.chart, index)

    def mul(self, a, b):
        return a.wedge(b)

    wedge = mul


def parse_polyvector(text: str, chart: Chart) -> PolyVector:
    """Parse e.g. ``x1 * e1^e2 - 1/2 * e2^e3``."""
    return ExprParser(text, _PolyVectorAlgebra(chart), chart.d, chart.r).parse()
