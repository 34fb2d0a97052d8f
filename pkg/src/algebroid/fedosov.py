"""Fedosov-type resolutions: the Weyl bundle W, its polyvector (T) and
polydifferential (D) analogues, tensored with E-forms.

A MixedSection stores terms keyed by ``(xi, payload)`` where ``xi`` is a
strictly increasing tuple of form indices and the coefficient is a Poly in
``d + r`` variables, base coordinates x first, then fiber coordinates y.
Payloads:

* W: ``()``                          (a formal function; degree -1 when bracketed)
* T: strictly increasing tuple J     (the fiberwise polyvector d/dy^J)
* D: tuple of y-multi-indices        (d^{a_0}/dy (x) ... (x) d^{a_k}/dy)

Brackets carry the Koszul sign ``[a (x) u, b (x) v] = (-1)^{|u||b|} ab (x) [u, v]``
with |u| the payload degree and |b| the form degree.  Every coefficient is
truncated at fiber degree N.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from . import exterior
from .chart import Chart, _accumulate, d_E_terms
from .connection import Connection, canonical_torsion_free, curvature, torsion
from .enveloping import (UEElement, UETerms, _gen_times, coproduct, tensor_terms, ue_mul)
from .poly import Poly
from .polyvectors import PolyVector, format_polyvector, schouten_bracket
from .report import Ident

KINDS = ("W", "T", "D")
Key = Tuple[Tuple[int, ...], tuple]


class TruncationMismatch(ValueError):
    pass


class NotTorsionFree(ValueError):
    def __init__(self, components):
        self.components = components
        text = ", ".join(f"T_{i + 1}{j + 1}^{k + 1} = {p}" for (k, i, j), p in sorted(components.items()) if i < j)
        super().__init__(f"connection has torsion: {text}")


# -- coefficient helpers --------------------------------------------------

def _ydeg(exp, d: int) -> int:
    return sum(exp[d:])


def _truncate(p: Poly, d: int, N: int) -> Poly:
    if all(_ydeg(e, d) <= N for e, _ in p.items()):
        return p
    return Poly._raw(p.nvars, {e: c for e, c in p.items() if _ydeg(e, d) <= N})


def _mul_trunc(p: Poly, q: Poly, d: int, N: Optional[int], scale=1) -> Poly:
    """scale * p * q keeping only fiber degree <= N (everything when N is None)."""
    if N is None:
        val = p * q
        return val if scale == 1 else val.scale(scale)
    qs = [(e, _ydeg(e, d), c * scale) for e, c in q.items()]
    out: Dict[tuple, Fraction] = {}
    for e1, c1 in p.items():
        y1 = _ydeg(e1, d)
        for e2, y2, c2 in qs:
            if y1 + y2 > N:
                continue
            e = tuple(a + b for a, b in zip(e1, e2))
            v = out.get(e)
            out[e] = c1 * c2 if v is None else v + c1 * c2
    return Poly._raw(p.nvars, {e: c for e, c in out.items() if c})


def _d_multi(p: Poly, alpha: Sequence[int], d: int) -> Poly:
    """d^alpha / dy^alpha of p."""
    for j, a in enumerate(alpha):
        for _ in range(a):
            if not p:
                return p
            p = p.partial(d + j)
    return p


def _restrict_x(p: Poly, d: int) -> Poly:
    """The y = 0 part of p, as a Poly in the base variables only."""
    return Poly._raw(d, {e[:d]: c for e, c in p.items() if not any(e[d:])})


def _lift_x(p: Poly, n: int) -> Poly:
    return p.embed(n)


def payload_degree(kind: str, payload) -> int:
    return len(payload) - 1


def payload_order(kind: str, payload) -> int:
    """Number of fiber derivatives in a payload (0 for W)."""
    if kind == "D":
        return max((sum(a) for a in payload), default=0)
    return len(payload)


def unit_multi(r: int, i: int) -> Tuple[int, ...]:
    return tuple(1 if j == i else 0 for j in range(r))


# -- sections ---------------------------------------------------------------

class MixedSection:
    __slots__ = ("chart", "kind", "N", "terms")

    def __init__(self, chart: Chart, kind: str, N: int, terms: Optional[Mapping] = None):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        self.chart = chart
        self.kind = kind
        self.N = N
        n = chart.d + chart.r
        out: Dict[Key, Poly] = {}
        for (xi, payload), v in (terms or {}).items():
            sign, xi = exterior.sort_sign(xi)
            if not sign:
                continue
            if any(not 0 <= i < chart.r for i in xi):
                raise IndexError(f"form index out of range in {xi}")
            payload = tuple(payload)
            if kind == "W" and payload:
                raise ValueError("W sections carry an empty payload")
            if kind == "T":
                s2, payload = exterior.sort_sign(payload)
                if not s2:
                    continue
                sign *= s2
            if kind == "D":
                payload = tuple(tuple(a) for a in payload)
                if any(len(a) != chart.r for a in payload):
                    raise ValueError("D payload multi-indices need length r")
            p = v if isinstance(v, Poly) else Poly.constant(v, n)
            if p.nvars != n:
                raise ValueError(f"coefficients need {n} variables (x then y)")
            p = _truncate(p, chart.d, N)
            _accumulate(out, (xi, payload), p if sign > 0 else -p)
        self.terms = out

    @classmethod
    def _raw(cls, chart, kind, N, terms):
        s = object.__new__(cls)
        s.chart, s.kind, s.N, s.terms = chart, kind, N, terms
        return s

    @classmethod
    def zero(cls, chart, kind, N):
        return cls._raw(chart, kind, N, {})

    @property
    def nvars(self):
        return self.chart.d + self.chart.r

    def y(self, i: int) -> Poly:
        return Poly.var(self.chart.d + i, self.nvars)

    def _check(self, other):
        if not isinstance(other, MixedSection) or other.chart != self.chart:
            raise ValueError("section chart mismatch")
        if other.kind != self.kind:
            raise ValueError(f"kind mismatch: {self.kind} vs {other.kind}")
        if other.N != self.N:
            raise TruncationMismatch(f"truncation {self.N} vs {other.N}")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, p in other.terms.items():
            _accumulate(out, k, p)
        return MixedSection._raw(self.chart, self.kind, self.N, out)

    def __neg__(self):
        return MixedSection._raw(self.chart, self.kind, self.N, {k: -p for k, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "MixedSection":
        if isinstance(c, Poly):
            out = {}
            for k, p in self.terms.items():
                _accumulate(out, k, _truncate(c * p, self.chart.d, self.N))
            return MixedSection._raw(self.chart, self.kind, self.N, out)
        c = Fraction(c)
        if not c:
            return MixedSection.zero(self.chart, self.kind, self.N)
        return MixedSection._raw(self.chart, self.kind, self.N, {k: p.scale(c) for k, p in self.terms.items()})

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return (isinstance(other, MixedSection) and self.chart == other.chart and self.kind == other.kind
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.kind, frozenset(self.terms.items())))

    def __repr__(self):
        return f"MixedSection({self.kind}, N={self.N}: {format_section(self)})"

    def __str__(self):
        return format_section(self)

    def truncated(self, degree: int) -> "MixedSection":
        """Drop every monomial of fiber degree above ``degree`` (keeps N)."""
        out = {}
        for k, p in self.terms.items():
            _accumulate(out, k, _truncate(p, self.chart.d, degree))
        return MixedSection._raw(self.chart, self.kind, self.N, out)

    def degree_part(self, degree: int) -> "MixedSection":
        d = self.chart.d
        out = {}
        for k, p in self.terms.items():
            q = Poly._raw(p.nvars, {e: c for e, c in p.items() if _ydeg(e, d) == degree})
            _accumulate(out, k, q)
        return MixedSection._raw(self.chart, self.kind, self.N, out)

    def form_degrees(self):
        return sorted({len(xi) for xi, _ in self.terms})

    def fiber_degrees(self):
        d = self.chart.d
        return sorted({_ydeg(e, d) for p in self.terms.values() for e, _ in p.items()})

    def order(self) -> int:
        return max((payload_order(self.kind, pl) for _, pl in self.terms), default=0)

    def lowest_fiber_degree(self) -> Optional[int]:
        degs = self.fiber_degrees()
        return degs[0] if degs else None

    def with_N(self, N: int) -> "MixedSection":
        return MixedSection(self.chart, self.kind, N, self.terms)


def _xvar_name(i, d):
    return f"x{i + 1}" if i < d else f"y{i - d + 1}"


def format_coeff(p: Poly, d: int) -> str:
    if not p:
        return "0"
    parts = []
    for e, c in p.terms:
        mono = "*".join(
            _xvar_name(i, d) + (f"^{a}" if a > 1 else "") for i, a in enumerate(e) if a
        )
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{c}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


def _payload_str(kind, pl, r) -> str:
    if kind == "W":
        return ""
    if kind == "T":
        return "^".join(f"dy{j + 1}" for j in pl) if pl else "1"
    slots = []
    for a in pl:
        fac = "*".join(f"dy{j + 1}" + (f"^{k}" if k > 1 else "") for j, k in enumerate(a) if k)
        slots.append(fac or "1")
    return "|".join(slots)


def format_section(s: MixedSection) -> str:
    if not s.terms:
        return "0"
    out = []
    for (xi, pl) in sorted(s.terms, key=lambda k: (len(k[0]), k[0], len(k[1]), k[1])):
        form = "^".join(f"xi{i + 1}" for i in xi)
        body = f"({format_coeff(s.terms[(xi, pl)], s.chart.d)})"
        pls = _payload_str(s.kind, pl, s.chart.r)
        pieces = [p for p in (form, body, pls) if p]
        out.append(" * ".join(pieces))
    return " + ".join(out)


# -- delta, kappa, H ----------------------------------------------------------

def delta(s: MixedSection) -> MixedSection:
    """xi^i d/dy^i on coefficients (the payload is inert)."""
    ch = s.chart
    out: Dict[Key, Poly] = {}
    for (xi, pl), f in s.terms.items():
        for i in range(ch.r):
            sign, new = exterior.wedge((i,), xi)
            if not sign:
                continue
            df = f.partial(ch.d + i)
            if df:
                _accumulate(out, (new, pl), df if sign > 0 else -df)
    return MixedSection._raw(ch, s.kind, s.N, out)


def _shift(p: Poly, d: int, i: int, weights) -> Poly:
    """Multiply by y^i and rescale each monomial by weights(exp)."""
    terms = {}
    for e, c in p.items():
        w = weights(e)
        if w:
            e2 = list(e)
            e2[d + i] += 1
            terms[tuple(e2)] = c * w
    return Poly._raw(p.nvars, terms)


def delta_star(s: MixedSection) -> MixedSection:
    """y^i iota(e_i)."""
    return _contract(s, normalize=False)


def kappa(s: MixedSection) -> MixedSection:
    """delta_star / (k + l) on each (form degree k, fiber degree l) piece."""
    return _contract(s, normalize=True)


def _contract(s: MixedSection, normalize: bool) -> MixedSection:
    ch = s.chart
    d = ch.d
    out: Dict[Key, Poly] = {}
    for (xi, pl), f in s.terms.items():
        k = len(xi)
        if not k:
            continue
        if normalize:
            weights = lambda e, k=k: Fraction(1, k + _ydeg(e, d))
        else:
            weights = lambda e: 1
        for i in xi:
            sign, rest = exterior.interior(i, xi)
            g = _truncate(_shift(f, d, i, weights), d, s.N)
            _accumulate(out, (rest, pl), g if sign > 0 else -g)
    return MixedSection._raw(ch, s.kind, s.N, out)


def harmonic(s: MixedSection) -> MixedSection:
    """The xi = y = 0 part."""
    d = s.chart.d
    out = {}
    for (xi, pl), f in s.terms.items():
        if xi:
            continue
        q = Poly._raw(f.nvars, {e: c for e, c in f.items() if not _ydeg(e, d)})
        _accumulate(out, (xi, pl), q)
    return MixedSection._raw(s.chart, s.kind, s.N, out)


# -- fiberwise brackets on payloads ------------------------------------------

def _schouten_payload(J, f: Poly, K, g: Poly, d: int, N: Optional[int] = None) -> Dict[tuple, Poly]:
    """[f d_J, g d_K] for fiberwise polyvectors (right-derivative convention)."""
    out: Dict[tuple, Poly] = {}
    p, q = len(J), len(K)
    for s0, j in enumerate(J):
        dg = g.partial(d + j)
        if not dg:
            continue
        sign, key = exterior.wedge(J[:s0] + J[s0 + 1:], K)
        if not sign:
            continue
        if (p - 1 - s0) % 2:
            sign = -sign
        val = _mul_trunc(f, dg, d, N)
        _accumulate(out, key, val if sign > 0 else -val)
    outer = -1 if ((p - 1) * (q - 1)) % 2 == 0 else 1
    for t0, k in enumerate(K):
        df = f.partial(d + k)
        if not df:
            continue
        sign, key = exterior.wedge(K[:t0] + K[t0 + 1:], J)
        if not sign:
            continue
        if (q - 1 - t0) % 2:
            sign = -sign
        sign *= outer
        val = _mul_trunc(g, df, d, N)
        _accumulate(out, key, val if sign > 0 else -val)
    return out


_SPLITS: Dict[tuple, list] = {}


def _splits(alpha: Tuple[int, ...], parts: int):
    """All ways alpha = beta_0 + ... + beta_{parts-1} with multinomial weights."""
    key = (alpha, parts)
    got = _SPLITS.get(key)
    if got is not None:
        return got
    per_coord = []
    for a in alpha:
        opts = []
        for comp in _compositions(a, parts):
            w = math.factorial(a)
            for c in comp:
                w //= math.factorial(c)
            opts.append((comp, w))
        per_coord.append(opts)
    out = []
    for choice in itertools.product(*per_coord):
        w = 1
        for _, wc in choice:
            w *= wc
        betas = tuple(tuple(choice[j][0][b] for j in range(len(alpha))) for b in range(parts))
        out.append((betas, w))
    _SPLITS[key] = out
    return out


def _compositions(n: int, parts: int):
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def _add_multi(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _bullet_payload(A, c1: Poly, B, c2: Poly, d: int, N: Optional[int] = None) -> Dict[tuple, Poly]:
    """P1 . P2 = sum_i (-1)^{i k2} P1(f_0, .., P2(f_i, ..), ..) for fiberwise operators."""
    out: Dict[tuple, Poly] = {}
    n1, n2 = len(A), len(B)
    k2 = n2 - 1
    for i in range(n1):
        neg = (i * k2) % 2 == 1
        if n2 == 0:
            val = _mul_trunc(c1, _d_multi(c2, A[i], d), d, N)
            if val:
                _accumulate(out, A[:i] + A[i + 1:], -val if neg else val)
            continue
        for betas, w in _splits(A[i], n2 + 1):
            dc = _d_multi(c2, betas[0], d)
            if not dc:
                continue
            key = A[:i] + tuple(_add_multi(B[b], betas[b + 1]) for b in range(n2)) + A[i + 1:]
            val = _mul_trunc(c1, dc, d, N, -w if neg else w)
            _accumulate(out, key, val)
    return out


def _gerstenhaber_payload(A, c1, B, c2, d, N=None) -> Dict[tuple, Poly]:
    out = _bullet_payload(A, c1, B, c2, d, N)
    k1, k2 = len(A) - 1, len(B) - 1
    back = _bullet_payload(B, c2, A, c1, d, N)
    flip = (k1 * k2) % 2 == 0
    for key, p in back.items():
        _accumulate(out, key, -p if flip else p)
    return out


def _payload_bracket(kind, u, f, v, g, d, N=None):
    if kind == "D":
        return _gerstenhaber_payload(u, f, v, g, d, N)
    return _schouten_payload(u, f, v, g, d, N)


def bracket(s1: MixedSection, s2: MixedSection) -> MixedSection:
    """Fiberwise Schouten (W, T) or Gerstenhaber (D) bracket with Koszul signs."""
    s1._check(s2)
    ch, kind = s1.chart, s1.kind
    d = ch.d
    out: Dict[Key, Poly] = {}
    for (xa, u), f in s1.terms.items():
        ku = payload_degree(kind, u)
        for (xb, v), g in s2.terms.items():
            sign, x = exterior.wedge(xa, xb)
            if not sign:
                continue
            if (ku * len(xb)) % 2:
                sign = -sign
            for pl, val in _payload_bracket(kind, u, f, v, g, d, s1.N).items():
                val = _truncate(val, d, s1.N)
                _accumulate(out, (x, pl), val if sign > 0 else -val)
    return MixedSection._raw(ch, kind, s1.N, out)


def fiberwise_schouten(s1: MixedSection, s2: MixedSection) -> MixedSection:
    if s1.kind not in ("W", "T") or s2.kind not in ("W", "T"):
        raise ValueError("fiberwise_schouten needs W or T sections")
    if s1.kind != s2.kind:
        s1, s2 = as_kind(s1, "T"), as_kind(s2, "T")
    return bracket(s1, s2)


def fiberwise_gerstenhaber(s1: MixedSection, s2: MixedSection) -> MixedSection:
    if s1.kind != "D" or s2.kind != "D":
        raise ValueError("fiberwise_gerstenhaber needs D sections")
    return bracket(s1, s2)


def as_kind(s: MixedSection, kind: str) -> MixedSection:
    """View a W or T section of payload length <= 1 as a section of another kind.

    Functions are T^{-1} and zero-order operators; vector fields d/dy^k are
    first-order operators.
    """
    if s.kind == kind:
        return s
    r = s.chart.r
    out: Dict[Key, Poly] = {}
    for (xi, pl), f in s.terms.items():
        if s.kind == "D":
            if kind == "W" and len(pl) == 0:
                new = ()
            else:
                raise ValueError("D sections only convert to W when of degree -1")
        elif kind == "D":
            if len(pl) > 1:
                raise ValueError("only functions and vector fields convert to D")
            new = (unit_multi(r, pl[0]),) if pl else ()
        elif kind == "T":
            new = pl
        else:
            if pl:
                raise ValueError("only functions convert to W")
            new = ()
        _accumulate(out, (xi, new), f)
    return MixedSection._raw(s.chart, kind, s.N, out)


def lie(V: MixedSection, s: MixedSection) -> MixedSection:
    """[V, s] for a T-section V of vector fields acting on a section of any kind."""
    if V.kind != "T":
        raise ValueError("lie expects a T section")
    if V.N != s.N:
        raise TruncationMismatch(f"truncation {V.N} vs {s.N}")
    if s.kind == "W":
        return as_kind(bracket(V, as_kind(s, "T")), "W")
    return bracket(as_kind(V, s.kind), s)


def product(s1: MixedSection, s2: MixedSection) -> MixedSection:
    """Fiberwise product: multiplication on W, composition of operators on D."""
    s1._check(s2)
    ch = s1.chart
    d = ch.d
    out: Dict[Key, Poly] = {}
    for (xa, u), f in s1.terms.items():
        for (xb, v), g in s2.terms.items():
            sign, x = exterior.wedge(xa, xb)
            if not sign:
                continue
            if s1.kind == "W":
                val = _truncate(f * g, d, s1.N)
                _accumulate(out, (x, ()), val if sign > 0 else -val)
            elif s1.kind == "D":
                if len(u) != 1 or len(v) != 1:
                    raise ValueError("composition needs single-slot operators")
                for pl, val in _bullet_payload(u, f, v, g, d, s1.N).items():
                    val = _truncate(val, d, s1.N)
                    _accumulate(out, (x, pl), val if sign > 0 else -val)
            else:
                raise ValueError("T sections have a bracket, not a product")
    return MixedSection._raw(ch, s1.kind, s1.N, out)


def multiplication(ch: Chart, N: int) -> MixedSection:
    """The fiberwise multiplication m = 1 (x) 1 as a D section."""
    zero = tuple(0 for _ in range(ch.r))
    return MixedSection(ch, "D", N, {((), (zero, zero)): 1})


# -- connection operators ----------------------------------------------------

def gamma_operator(conn: Connection, N: int) -> MixedSection:
    """Gamma = -xi^i Gamma_ij^k y^j d/dy^k."""
    ch = conn.chart
    n = ch.d + ch.r
    out: Dict[Key, Poly] = {}
    for (i, j, k), g in conn.gamma.items():
        val = -(g.embed(n) * Poly.var(ch.d + j, n))
        _accumulate(out, ((i,), (k,)), val)
    return MixedSection._raw(ch, "T", N, out)


def curvature_operator(conn: Connection, N: int) -> MixedSection:
    """R = -1/2 xi^i xi^j R_ijk^l y^k d/dy^l."""
    ch = conn.chart
    n = ch.d + ch.r
    R = curvature(conn)
    out: Dict[Key, Poly] = {}
    for (l, i, j, k), p in R.terms.items():
        if i < j:
            _accumulate(out, ((i, j), (l,)), -(p.embed(n) * Poly.var(ch.d + k, n)))
    return MixedSection._raw(ch, "T", N, out)


def d_E_section(s: MixedSection) -> MixedSection:
    ch = s.chart
    by_payload: Dict[tuple, Dict] = {}
    for (xi, pl), f in s.terms.items():
        by_payload.setdefault(pl, {})[xi] = f
    out: Dict[Key, Poly] = {}
    for pl, forms in by_payload.items():
        for xi, f in d_E_terms(ch, forms).items():
            _accumulate(out, (xi, pl), f)
    return MixedSection._raw(ch, s.kind, s.N, out)


def nabla(s: MixedSection, conn: Connection) -> MixedSection:
    """nabla = d_E + [Gamma, .] acting on the fiber."""
    if conn.chart != s.chart:
        raise ValueError("connection chart mismatch")
    return d_E_section(s) + lie(gamma_operator(conn, s.N), s)


# -- flattening -----------------------------------------------------------------

@dataclass
class FlatStructure:
    chart: Chart
    connection: Connection
    N: int
    A: MixedSection
    R: MixedSection = field(repr=False)

    def D(self, s: MixedSection) -> MixedSection:
        return flat_D(self, s)


def solve_A(ch: Chart, conn: Optional[Connection] = None, N: int = 4) -> FlatStructure:
    """Solve A = kappa R + kappa(nabla A + 1/2 [A, A]) degree by degree up to fiber degree N."""
    if conn is None:
        conn = canonical_torsion_free(ch)
    if N < 2:
        raise ValueError("truncation N must be at least 2")
    T = torsion(conn)
    if not T.is_zero():
        raise NotTorsionFree(T.terms)
    R = curvature_operator(conn, N)
    parts: Dict[int, MixedSection] = {2: kappa(R)}
    for p in range(2, N):
        rhs = nabla(parts[p], conn)
        for a in range(2, p):
            b = p + 1 - a
            if b in parts and a <= b:
                term = bracket(parts[a], parts[b])
                rhs = rhs + (term if a < b else term.scale(Fraction(1, 2)))
        parts[p + 1] = kappa(rhs).degree_part(p + 1)
    A = MixedSection.zero(ch, "T", N)
    for p in sorted(parts):
        A = A + parts[p]
    return FlatStructure(ch, conn, N, A, R)


def flat_D(fs: FlatStructure, s: MixedSection) -> MixedSection:
    """D = nabla - delta + [A, .]."""
    if s.N != fs.N:
        raise TruncationMismatch(f"section truncated at {s.N}, structure at {fs.N}")
    return nabla(s, fs.connection) - delta(s) + lie(fs.A, s)


def flatness_residual(fs: FlatStructure) -> Tuple[MixedSection, int]:
    """delta A - R - nabla A - 1/2 [A, A], reliable through fiber degree N - 1."""
    A = fs.A
    res = delta(A) - fs.R - nabla(A, fs.connection) - bracket(A, A).scale(Fraction(1, 2))
    bound = fs.N - 1
    return res.truncated(bound), bound


def reliable_degree(fs: FlatStructure, s: MixedSection, applications: int) -> int:
    """Fiber degree through which ``applications`` uses of the truncated D are exact.

    Each application loses one degree to delta; a fiber operator of order k
    can also pull truncated terms of A down by k.
    """
    return fs.N - applications - max(0, s.order() - 1)


def d_squared_residual(fs: FlatStructure, s: MixedSection) -> Tuple[MixedSection, int]:
    bound = reliable_degree(fs, s, 2)
    return flat_D(fs, flat_D(fs, s)).truncated(bound), bound


# -- the lift --------------------------------------------------------------------

def constant_section(ch: Chart, kind: str, N: int, value) -> MixedSection:
    """A form-degree-0, fiber-constant section from a Poly (W), PolyVector (T) or
    a map payload -> Poly in the base variables (any kind)."""
    n = ch.d + ch.r
    if isinstance(value, Poly):
        value = {(): value}
    elif isinstance(value, PolyVector):
        value = dict(value.terms)
    terms = {}
    for pl, p in value.items():
        p = p if isinstance(p, Poly) else ch.poly(p)
        terms[((), pl)] = p.embed(n)
    return MixedSection(ch, kind, N, terms)


def theta_lift(u0, fs: FlatStructure, kind: Optional[str] = None) -> MixedSection:
    """The flat section u = u0 + kappa(nabla u + [A, u]) with H(u) = u0."""
    ch = fs.chart
    if not isinstance(u0, MixedSection):
        if kind is None:
            kind = "W" if isinstance(u0, Poly) else "T"
        u0 = constant_section(ch, kind, fs.N, u0)
    if u0.form_degrees() not in ([], [0]) or any(u0.fiber_degrees()):
        raise ValueError("theta_lift needs a fiber-constant section of form degree 0")
    u = u0
    # each pass fixes at least one more level of (fiber degree - operator order)
    for _ in range(fs.N + u0.order() + 3):
        new = u0 + kappa(nabla(u, fs.connection) + lie(fs.A, u))
        if new == u:
            return u
        u = new
    raise RuntimeError("theta lift did not stabilize")


def theta_first_order(u0: Union[Poly, PolyVector], fs: FlatStructure) -> MixedSection:
    """Closed form of theta(u0) mod |y|^2 for a function or a vector field.

    f -> f + y^i rho(e_i) f;  u^k d_k -> (u^k + y^i (rho(e_i) u^k + Gamma_ij^k u^j)) d_k.
    """
    ch = fs.chart
    n = ch.d + ch.r
    conn = fs.connection
    y = [Poly.var(ch.d + i, n) for i in range(ch.r)]
    if isinstance(u0, Poly):
        f = u0
        val = f.embed(n)
        for i in range(ch.r):
            val = val + y[i] * ch.anchor(i, f).embed(n)
        return MixedSection(ch, "W", fs.N, {((), ()): val})
    if any(len(key) != 1 for key in u0.terms):
        raise ValueError("closed form only for functions and vector fields")
    comp = {key[0]: p for key, p in u0.terms.items()}
    terms = {}
    for k in range(ch.r):
        val = comp.get(k, ch.zero()).embed(n)
        for i in range(ch.r):
            inner = ch.anchor(i, comp.get(k, ch.zero()))
            for j, uj in comp.items():
                inner = inner + conn(i, j, k) * uj
            val = val + y[i] * inner.embed(n)
        if val:
            terms[((), (k,))] = val
    return MixedSection(ch, "T", fs.N, terms)


def first_order_check(u0: Union[Poly, PolyVector], fs: FlatStructure) -> Ident:
    """theta(u0) agrees with its closed form through fiber degree 1."""
    kind = "W" if isinstance(u0, Poly) else "T"
    lifted = theta_lift(u0, fs, kind).truncated(1)
    diff = lifted - theta_first_order(u0, fs).truncated(1)
    name = f"theta-first-order[{u0}]" if kind == "W" else f"theta-first-order[{format_polyvector(u0)}]"
    return Ident(name, diff.is_zero(), 1, "" if diff.is_zero() else f"difference {format_section(diff)}")


def harmonic_polyvector(s: MixedSection) -> PolyVector:
    """H(s) for a T section, read back as an E-polyvector."""
    ch = s.chart
    out = {}
    for (xi, pl), f in harmonic(s).terms.items():
        out[pl] = _restrict_x(f, ch.d)
    return PolyVector(ch, out)


def harmonic_operator(s: MixedSection) -> Dict[tuple, Poly]:
    """H(s) for a D section: payload -> base coefficient."""
    ch = s.chart
    return {pl: _restrict_x(f, ch.d) for (xi, pl), f in harmonic(s).terms.items()}


def bracket_transfer_check(u0: PolyVector, v0: PolyVector, fs: FlatStructure) -> List[Ident]:
    """H([theta u0, theta v0]_S) = [u0, v0]_E."""
    lhs = harmonic_polyvector(bracket(theta_lift(u0, fs, "T"), theta_lift(v0, fs, "T")))
    rhs = schouten_bracket(u0, v0)
    diff = lhs - rhs
    detail = "" if diff.is_zero() else f"difference {diff}"
    return [Ident(f"bracket-transfer[{u0}|{v0}]", diff.is_zero(), None, detail)]


# -- PBW comparison ---------------------------------------------------------------

YExp = Tuple[int, ...]
TauSeries = Dict[YExp, UETerms]


def tau(k: int, conn: Connection, N: Optional[int] = None) -> TauSeries:
    """tau_0 = 1, tau_{m+1} = y^i e_i tau_m - y^i y^j Gamma_ij^l d tau_m / dy^l."""
    if N is not None and k > N:
        raise ValueError(f"tau_{k} exceeds the truncation N={N}")
    ch = conn.chart
    r = ch.r
    cache = ch.cache.setdefault("tau", {})
    key = (tuple(sorted(conn.gamma.items())), k)
    got = cache.get(key)
    if got is not None:
        return got
    if k == 0:
        out: TauSeries = {tuple([0] * r): {(): ch.one()}}
    else:
        prev = tau(k - 1, conn)
        out = {}
        for beta, terms in prev.items():
            for i in range(r):
                e = list(beta)
                e[i] += 1
                _merge_ue(out, tuple(e), _gen_times(ch, i, terms))
            for l in range(r):
                if not beta[l]:
                    continue
                for i in range(r):
                    for j in range(r):
                        g = conn(i, j, l)
                        if not g:
                            continue
                        e = list(beta)
                        e[l] -= 1
                        e[i] += 1
                        e[j] += 1
                        scaled = {m: -(g * p).scale(beta[l]) for m, p in terms.items()}
                        _merge_ue(out, tuple(e), scaled)
        out = {e: t for e, t in out.items() if t}
    cache[key] = out
    return out


def _merge_ue(out: TauSeries, e: YExp, terms: UETerms):
    acc = out.setdefault(e, {})
    for m, p in terms.items():
        _accumulate(acc, m, p)


def mu_monomial(alpha: Sequence[int], conn: Connection) -> UEElement:
    """mu(d^alpha/dy^alpha) = alpha!/|alpha|! tau_{|alpha|}[y^alpha]."""
    ch = conn.chart
    alpha = tuple(alpha)
    k = sum(alpha)
    w = Fraction(1, math.factorial(k))
    for a in alpha:
        w *= math.factorial(a)
    terms = tau(k, conn).get(alpha, {})
    return UEElement._raw(ch, {m: p.scale(w) for m, p in terms.items()})


def mu(u: Mapping[Sequence[int], Poly], conn: Connection) -> UEElement:
    """mu on a fiber-constant differential operator given as multi-index -> coefficient."""
    ch = conn.chart
    out = UEElement._raw(ch, {})
    for alpha, c in u.items():
        out = out + mu_monomial(alpha, conn).scale(c)
    return out


def mu_tensor(u: Mapping[tuple, Poly], conn: Connection):
    """mu applied slot by slot to a fiber-constant polydifferential operator."""
    from .enveloping import PolyDiffOp
    ch = conn.chart
    out: Dict = {}
    for slots, c in u.items():
        factors = [mu_monomial(a, conn).terms for a in slots]
        for key, p in tensor_terms(factors).items():
            _accumulate(out, key, c * p)
    return PolyDiffOp._raw(ch, out)


def _first_order(ch: Chart, N: int, vec: Mapping[int, Poly]) -> MixedSection:
    r = ch.r
    return constant_section(ch, "D", N, {(unit_multi(r, i),): p for i, p in vec.items()})


def _zero_order(ch: Chart, N: int, f: Poly) -> MixedSection:
    zero = tuple([0] * ch.r)
    return constant_section(ch, "D", N, {(zero,): f})


def pbw_side(P1: MixedSection, P2: MixedSection, fs: FlatStructure) -> UEElement:
    """mu(H(theta P1 . theta P2))."""
    prod = product(theta_lift(P1, fs), theta_lift(P2, fs))
    op = {pl[0]: c for pl, c in harmonic_operator(prod).items()}
    return mu(op, fs.connection)


def mu_transfer_check(fs: FlatStructure, functions: Optional[Sequence[Poly]] = None) -> List[Ident]:
    """The four product cases on generators and mu . Delta = Delta . mu through order 2."""
    ch = fs.chart
    conn = fs.connection
    if fs.N < 3:
        raise ValueError("mu_transfer_check needs N >= 3")
    if functions is None:
        functions = [ch.one()] + [Poly.var(a, ch.d) for a in range(ch.d)]
    out: List[Ident] = []

    def record(name, lhs: UEElement, rhs: UEElement):
        diff = lhs - rhs
        out.append(Ident(name, diff.is_zero(), None, "" if diff.is_zero() else f"difference {diff}"))

    gens = [UEElement.generator(ch, i) for i in range(ch.r)]
    vec = [_first_order(ch, fs.N, {i: ch.one()}) for i in range(ch.r)]
    for i in range(ch.r):
        for j in range(ch.r):
            record(f"pbw-vector-vector[e{i + 1},e{j + 1}]", ue_mul(gens[i], gens[j]), pbw_side(vec[i], vec[j], fs))
    for n, f in enumerate(functions):
        F = UEElement.function(ch, f)
        fo = _zero_order(ch, fs.N, f)
        for i in range(ch.r):
            record(f"pbw-vector-function[e{i + 1},f{n}]", ue_mul(gens[i], F), pbw_side(vec[i], fo, fs))
            record(f"pbw-function-vector[f{n},e{i + 1}]", ue_mul(F, gens[i]), pbw_side(fo, vec[i], fs))
        for m, g in enumerate(functions):
            G = UEElement.function(ch, g)
            record(f"pbw-function-function[f{n},f{m}]", ue_mul(F, G), pbw_side(fo, _zero_order(ch, fs.N, g), fs))
    # mu . Delta = Delta . mu on symmetric monomials of order <= 2
    r = ch.r
    for k in range(3):
        for combo in itertools.combinations_with_replacement(range(r), k):
            alpha = tuple(combo.count(i) for i in range(r))
            lhs = coproduct(mu_monomial(alpha, conn))
            split = {}
            for (g1, g2), w in _splits(alpha, 2):
                _accumulate(split, (g1, g2), Poly.constant(w, ch.d))
            rhs = mu_tensor(split, conn)
            diff = lhs - rhs
            name = "mu-coproduct[" + ("*".join(f"dy{i + 1}" for i in combo) or "1") + "]"
            out.append(Ident(name, diff.is_zero(), None, "" if diff.is_zero() else f"difference {diff}"))
    return out


def second_order_mu_formula(i: int, j: int, conn: Connection) -> UEElement:
    """1/2 (e_i e_j + e_j e_i - (Gamma_ij^k + Gamma_ji^k) e_k)."""
    ch = conn.chart
    ei, ej = UEElement.generator(ch, i), UEElement.generator(ch, j)
    out = ue_mul(ei, ej) + ue_mul(ej, ei)
    for k in range(ch.r):
        g = conn(i, j, k) + conn(j, i, k)
        if g:
            out = out - UEElement.generator(ch, k).scale(g)
    return out.scale(Fraction(1, 2))


def mu_second_order(i: int, j: int, conn: Connection) -> UEElement:
    """mu(d^2/dy^i dy^j) computed through tau_2."""
    alpha = [0] * conn.chart.r
    alpha[i] += 1
    alpha[j] += 1
    return mu_monomial(alpha, conn)
