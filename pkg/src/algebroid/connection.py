"""Linear E-connections through Christoffel symbols, torsion, curvature and Bianchi checks.

Conventions: ``nabla_{e_i} e_j = Gamma_ij^k e_k``;

    T_ij^k  = Gamma_ij^k - Gamma_ji^k - c_ij^k
    R_ijk^l = Gamma_im^l Gamma_jk^m - Gamma_ik^m Gamma_jm^l
              + rho(e_i) Gamma_jk^l - rho(e_j) Gamma_ik^l - c_ij^m Gamma_mk^l

so that ``R(e_i, e_j) e_k = R_ijk^l e_l``.  ETensor keys list the upper
(contravariant) indices first, then the lower ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .chart import Chart, PolyLike, _accumulate
from .poly import Poly

Index = Tuple[int, ...]


class ETensor:
    """A section of E^{(x)k} (x) (E*)^{(x)l} in the frame e_i, xi^j."""

    __slots__ = ("chart", "k", "l", "terms")

    def __init__(self, chart: Chart, k: int, l: int, terms: Optional[Mapping[Index, PolyLike]] = None):
        self.chart = chart
        self.k = k
        self.l = l
        out: Dict[Index, Poly] = {}
        for key, v in (terms or {}).items():
            key = tuple(key)
            if len(key) != k + l or any(not 0 <= t < chart.r for t in key):
                raise ValueError(f"index {key} does not fit a ({k},{l}) tensor of rank {chart.r}")
            _accumulate(out, key, chart.poly(v))
        self.terms = out

    @classmethod
    def _raw(cls, chart, k, l, terms):
        t = object.__new__(cls)
        t.chart, t.k, t.l, t.terms = chart, k, l, terms
        return t

    def __getitem__(self, key: Index) -> Poly:
        return self.terms.get(tuple(key), self.chart.zero())

    def _check(self, other):
        if not isinstance(other, ETensor) or other.chart != self.chart:
            raise ValueError("tensor chart mismatch")
        if (other.k, other.l) != (self.k, self.l):
            raise ValueError(f"shape mismatch: ({self.k},{self.l}) vs ({other.k},{other.l})")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for key, p in other.terms.items():
            _accumulate(out, key, p)
        return ETensor._raw(self.chart, self.k, self.l, out)

    def __neg__(self):
        return ETensor._raw(self.chart, self.k, self.l, {key: -p for key, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return (isinstance(other, ETensor) and self.chart == other.chart
                and (self.k, self.l) == (other.k, other.l) and self.terms == other.terms)

    def __repr__(self):
        body = ", ".join(f"{tuple(t + 1 for t in key)}: {p}" for key, p in sorted(self.terms.items()))
        return f"ETensor(({self.k},{self.l}) {{{body}}})"


def tensor_product(a: ETensor, b: ETensor) -> ETensor:
    out: Dict[Index, Poly] = {}
    for ka, pa in a.terms.items():
        for kb, pb in b.terms.items():
            key = ka[:a.k] + kb[:b.k] + ka[a.k:] + kb[b.k:]
            _accumulate(out, key, pa * pb)
    return ETensor._raw(a.chart, a.k + b.k, a.l + b.l, out)


def contract(t: ETensor, upper: int, lower: int) -> ETensor:
    """Contract the given upper slot against the given lower slot."""
    out: Dict[Index, Poly] = {}
    for key, p in t.terms.items():
        up, lo = key[:t.k], key[t.k:]
        if up[upper] != lo[lower]:
            continue
        new = up[:upper] + up[upper + 1:] + lo[:lower] + lo[lower + 1:]
        _accumulate(out, new, p)
    return ETensor._raw(t.chart, t.k - 1, t.l - 1, out)


@dataclass
class Connection:
    chart: Chart
    gamma: Dict[Tuple[int, int, int], Poly] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (i, j, k), v in self.gamma.items():
            if any(not 0 <= t < self.chart.r for t in (i, j, k)):
                raise IndexError(f"Christoffel index ({i}, {j}, {k}) out of range")
            p = self.chart.poly(v)
            if p:
                clean[(i, j, k)] = p
        self.gamma = clean

    def __call__(self, i: int, j: int, k: int) -> Poly:
        return self.gamma.get((i, j, k), self.chart.zero())

    def lines(self) -> str:
        return "".join(f"gamma {i + 1} {j + 1} {k + 1} = {p}\n" for (i, j, k), p in sorted(self.gamma.items()))


def canonical_torsion_free(ch: Chart) -> Connection:
    """Gamma = c/2, i.e. nabla_{e_i} e_j = [e_i, e_j]/2."""
    gamma = {}
    for i in range(ch.r):
        for j in range(ch.r):
            for k, p in ch.bracket(i, j).items():
                gamma[(i, j, k)] = p / 2
    return Connection(ch, gamma)


def torsion(conn: Connection) -> ETensor:
    ch = conn.chart
    out: Dict[Index, Poly] = {}
    for i, j, k in itertools.product(range(ch.r), repeat=3):
        _accumulate(out, (k, i, j), conn(i, j, k) - conn(j, i, k) - ch.struct(i, j, k))
    return ETensor._raw(ch, 1, 2, out)


def is_torsion_free(conn: Connection) -> bool:
    return torsion(conn).is_zero()


def curvature(conn: Connection) -> ETensor:
    ch = conn.chart
    r = ch.r
    out: Dict[Index, Poly] = {}
    for i, j, k, l in itertools.product(range(r), repeat=4):
        val = ch.anchor(i, conn(j, k, l)) - ch.anchor(j, conn(i, k, l))
        for m in range(r):
            val = val + conn(i, m, l) * conn(j, k, m) - conn(i, k, m) * conn(j, m, l)
            val = val - ch.struct(i, j, m) * conn(m, k, l)
        _accumulate(out, (l, i, j, k), val)
    return ETensor._raw(ch, 1, 3, out)


EVector = Union[int, Mapping[int, PolyLike]]


def _direction(ch: Chart, u: EVector) -> Dict[int, Poly]:
    if isinstance(u, int):
        return {u: ch.one()}
    return {i: ch.poly(v) for i, v in u.items()}


def covariant_derivative(u: EVector, t: ETensor, conn: Connection) -> ETensor:
    """nabla_u t: rho(u) on components, +Gamma on upper slots, -Gamma on lower slots."""
    ch = conn.chart
    if t.chart != ch:
        raise ValueError("tensor and connection live on different charts")
    out: Dict[Index, Poly] = {}
    for i, ui in _direction(ch, u).items():
        if not ui:
            continue
        for key, p in t.terms.items():
            _accumulate(out, key, ui * ch.anchor(i, p))
            for s in range(t.k + t.l):
                for m in range(ch.r):
                    if s < t.k:
                        # component key[s] picks up Gamma_{i key[s]}^m in slot m
                        g = conn(i, key[s], m)
                        if g:
                            _accumulate(out, key[:s] + (m,) + key[s + 1:], ui * g * p)
                    else:
                        g = conn(i, m, key[s])
                        if g:
                            _accumulate(out, key[:s] + (m,) + key[s + 1:], -(ui * g * p))
    return ETensor._raw(ch, t.k, t.l, out)


@dataclass
class BianchiFailure:
    identity: str
    indices: Tuple[int, ...]
    value: Poly

    def __str__(self):
        idx = " ".join(str(t + 1) for t in self.indices)
        return f"{self.identity} ({idx}): {self.value}"


def bianchi_check(conn: Connection) -> List[BianchiFailure]:
    """Both Bianchi identities on all generator triples; empty iff both hold.

    first:  sum_cyc (nabla_i R)(e_j, e_k) + R(T(e_i, e_j), e_k)              = 0
    second: sum_cyc R(e_i, e_j) e_k - T(T(e_i, e_j), e_k) - (nabla_i T)(e_j, e_k) = 0
    """
    ch = conn.chart
    r = ch.r
    T = torsion(conn)
    R = curvature(conn)
    dR = [covariant_derivative(i, R, conn) for i in range(r)]
    dT = [covariant_derivative(i, T, conn) for i in range(r)]
    report: List[BianchiFailure] = []
    for i, j, k in itertools.product(range(r), repeat=3):
        cyc = ((i, j, k), (j, k, i), (k, i, j))
        for m, l in itertools.product(range(r), repeat=2):
            val = ch.zero()
            for a, b, c in cyc:
                val = val + dR[a][(l, b, c, m)]
                for p in range(r):
                    val = val + T[(p, a, b)] * R[(l, p, c, m)]
            if val:
                report.append(BianchiFailure("first", (i, j, k, m, l), val))
        for l in range(r):
            val = ch.zero()
            for a, b, c in cyc:
                val = val + R[(l, a, b, c)] - dT[a][(l, b, c)]
                for p in range(r):
                    val = val - T[(p, a, b)] * T[(l, p, c)]
            if val:
                report.append(BianchiFailure("second", (i, j, k, l), val))
    return report
