"""Local Lie algebroid charts, the E-de Rham complex, and a builtin corpus.

A chart over base coordinates ``x_1..x_d`` with frame ``e_1..e_r`` is given
by its anchor matrix ``rho[i][a]`` (coefficient of d/dx_a in rho(e_i)) and
structure functions ``c_ij^k`` with ``[e_i, e_j] = c_ij^k e_k``.  Only
``i < j`` is stored; the rest follows from antisymmetry.

All indices are 0-based in the Python API; the chart file format and all
printed output are 1-based.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from . import exterior
from .poly import ParseError, Poly, parse_poly

PolyLike = Union[Poly, int, Fraction, str]


class ChartError(ValueError):
    """A chart failed validation; ``report`` lists the violated identities."""

    def __init__(self, message: str, report: Sequence["Violation"] = ()):
        super().__init__(message)
        self.report = list(report)


class ChartFileError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Chart:
    """A Lie algebroid presented on a single polynomial chart."""

    def __init__(
        self,
        d: int,
        r: int,
        rho: Optional[Mapping[Tuple[int, int], PolyLike]] = None,
        c: Optional[Mapping[Tuple[int, int, int], PolyLike]] = None,
        name: str = "",
    ):
        if d < 0 or r < 0:
            raise ValueError("dimensions must be non-negative")
        self.d = d
        self.r = r
        self.name = name
        anchor = [[Poly.zero(d) for _ in range(d)] for _ in range(r)]
        for (i, a), v in (rho or {}).items():
            if not (0 <= i < r and 0 <= a < d):
                raise IndexError(f"anchor entry ({i}, {a}) out of range")
            anchor[i][a] = self._poly(v)
        self.anchor_matrix: Tuple[Tuple[Poly, ...], ...] = tuple(tuple(row) for row in anchor)
        struct: Dict[Tuple[int, int, int], Poly] = {}
        for (i, j, k), v in (c or {}).items():
            if not (0 <= i < j < r and 0 <= k < r):
                raise IndexError(f"structure entry ({i}, {j}, {k}) must satisfy i < j within rank")
            p = self._poly(v)
            if p:
                struct[(i, j, k)] = p
        self.c = struct
        # brackets[i][j] = {k: c_ij^k}, antisymmetric, zero entries dropped
        self._brackets: List[List[Dict[int, Poly]]] = [[{} for _ in range(r)] for _ in range(r)]
        for (i, j, k), p in struct.items():
            self._brackets[i][j][k] = p
            self._brackets[j][i][k] = -p
        self._embedded: Dict[int, tuple] = {}
        self.cache: dict = {}

    def _poly(self, v: PolyLike) -> Poly:
        if isinstance(v, Poly):
            if v.nvars != self.d:
                raise ValueError(f"coefficient has {v.nvars} variables, chart has d={self.d}")
            return v
        if isinstance(v, str):
            return parse_poly(v, self.d)
        return Poly.constant(v, self.d)

    # -- structure ----------------------------------------------------
    def key(self):
        return (
            self.d,
            self.r,
            self.anchor_matrix,
            tuple(sorted(self.c.items())),
        )

    def __eq__(self, other):
        return isinstance(other, Chart) and (self is other or self.key() == other.key())

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<Chart{label} d={self.d} r={self.r}>"

    def zero(self, nvars: Optional[int] = None) -> Poly:
        return Poly.zero(self.d if nvars is None else nvars)

    def one(self, nvars: Optional[int] = None) -> Poly:
        return Poly.constant(1, self.d if nvars is None else nvars)

    def poly(self, v: PolyLike) -> Poly:
        return self._poly(v)

    def rho(self, i: int, a: int) -> Poly:
        return self.anchor_matrix[i][a]

    def struct(self, i: int, j: int, k: int) -> Poly:
        """c_ij^k with antisymmetry applied."""
        return self._brackets[i][j].get(k, Poly.zero(self.d))

    def bracket(self, i: int, j: int) -> Dict[int, Poly]:
        """Nonzero components of [e_i, e_j]."""
        return self._brackets[i][j]

    def _lifted(self, nvars: int):
        """Anchor rows and structure tables re-expressed in ``nvars`` variables."""
        got = self._embedded.get(nvars)
        if got is None:
            rows = tuple(
                tuple((a, p.embed(nvars)) for a, p in enumerate(row) if p)
                for row in self.anchor_matrix
            )
            brackets = [[{k: p.embed(nvars) for k, p in self._brackets[i][j].items()}
                         for j in range(self.r)] for i in range(self.r)]
            got = (rows, brackets)
            self._embedded[nvars] = got
        return got

    def anchor(self, i: int, f: Poly) -> Poly:
        """rho(e_i) . f, differentiating only the first ``d`` variables of ``f``."""
        rows, _ = self._lifted(f.nvars)
        out = Poly.zero(f.nvars)
        for a, p in rows[i]:
            df = f.partial(a)
            if df:
                out = out + p * df
        return out

    def struct_lifted(self, i: int, j: int, nvars: int) -> Dict[int, Poly]:
        return self._lifted(nvars)[1][i][j]

    def anchor_vector(self, u: Mapping[int, Poly], f: Poly) -> Poly:
        """rho(u^i e_i) . f."""
        out = Poly.zero(f.nvars)
        for i, ui in u.items():
            if ui:
                out = out + ui * self.anchor(i, f)
        return out


# -- validation --------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # "anchor" or "jacobi"
    indices: Tuple[int, ...]  # 0-based
    value: Poly

    def __str__(self):
        idx = " ".join(str(i + 1) for i in self.indices)
        return f"{self.kind} ({idx}): {self.value}"


def validate_chart(ch: Chart) -> List[Violation]:
    """Check the anchor-morphism and Jacobi identities on the frame.

    Returns the list of violated components (empty iff the chart is a Lie
    algebroid).  Jacobi on generators is enough: the Leibniz rule propagates
    it to arbitrary sections.
    """
    report: List[Violation] = []
    d, r = ch.d, ch.r
    for i in range(r):
        for j in range(i + 1, r):
            for a in range(d):
                lhs = ch.anchor(i, ch.rho(j, a)) - ch.anchor(j, ch.rho(i, a))
                for k, ck in ch.bracket(i, j).items():
                    lhs = lhs - ck * ch.rho(k, a)
                if lhs:
                    report.append(Violation("anchor", (i, j, a), lhs))
    for i in range(r):
        for j in range(i + 1, r):
            for k in range(j + 1, r):
                for l in range(r):
                    total = Poly.zero(d)
                    for a, b, cc in ((i, j, k), (j, k, i), (k, i, j)):
                        # [e_a, [e_b, e_c]] component l
                        total = total + ch.anchor(a, ch.struct(b, cc, l))
                        for m, cm in ch.bracket(b, cc).items():
                            total = total + cm * ch.struct(a, m, l)
                    if total:
                        report.append(Violation("jacobi", (i, j, k, l), total))
    return report


# -- E-forms -----------------------------------------------------------

class EForm:
    """An E-differential form ``sum w_I xi^I`` (I strictly increasing)."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: Optional[Mapping[Tuple[int, ...], PolyLike]] = None):
        self.chart = chart
        clean: Dict[Tuple[int, ...], Poly] = {}
        for key, v in (terms or {}).items():
            sign, k = exterior.sort_sign(key)
            if not sign:
                continue
            if any(not 0 <= i < chart.r for i in k):
                raise IndexError(f"form index out of range in {key}")
            p = chart.poly(v) if not isinstance(v, Poly) else v
            if sign < 0:
                p = -p
            _accumulate(clean, k, p)
        self.terms = clean

    @classmethod
    def _raw(cls, chart, terms):
        f = object.__new__(cls)
        f.chart = chart
        f.terms = terms
        return f

    def degrees(self):
        return sorted({len(k) for k in self.terms})

    @property
    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) > 1:
            raise ValueError("inhomogeneous form")
        return ds[0] if ds else 0

    def is_zero(self):
        return not self.terms

    def _check(self, other):
        if not isinstance(other, EForm) or other.chart != self.chart:
            raise ValueError("chart mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for k, p in other.terms.items():
            _accumulate(out, k, p)
        return EForm._raw(self.chart, out)

    def __neg__(self):
        return EForm._raw(self.chart, {k: -p for k, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f: PolyLike) -> "EForm":
        f = self.chart.poly(f)
        out = {}
        for k, p in self.terms.items():
            _accumulate(out, k, f * p)
        return EForm._raw(self.chart, out)

    def wedge(self, other: "EForm") -> "EForm":
        self._check(other)
        out: Dict[Tuple[int, ...], Poly] = {}
        for k1, p1 in self.terms.items():
            for k2, p2 in other.terms.items():
                sign, k = exterior.wedge(k1, k2)
                if sign:
                    _accumulate(out, k, p1 * p2 if sign > 0 else -(p1 * p2))
        return EForm._raw(self.chart, out)

    def __eq__(self, other):
        return isinstance(other, EForm) and self.chart == other.chart and self.terms == other.terms

    def __repr__(self):
        return f"EForm({format_form(self)})"


def _accumulate(out: dict, key, p: Poly):
    if not p:
        return
    q = out.get(key)
    if q is None:
        out[key] = p
    else:
        q = q + p
        if q:
            out[key] = q
        else:
            del out[key]


def d_E_terms(ch: Chart, terms: Mapping[Tuple[int, ...], Poly]) -> Dict[Tuple[int, ...], Poly]:
    """Apply ``xi^i rho(e_i) - 1/2 xi^i xi^j c_ij^k d/dxi^k`` to a form-valued dict.

    Coefficients may carry extra (fiber) variables after the first ``d``;
    the anchor only differentiates the base ones.
    """
    out: Dict[Tuple[int, ...], Poly] = {}
    for key, f in terms.items():
        nv = f.nvars
        for i in range(ch.r):
            df = ch.anchor(i, f)
            if df:
                sign, k = exterior.wedge((i,), key)
                if sign:
                    _accumulate(out, k, df if sign > 0 else -df)
        if not ch.c:
            continue
        for k_idx in key:
            s1, rest = exterior.interior(k_idx, key)
            for (i, j, kk), cij in ch.c.items():
                if kk != k_idx:
                    continue
                s2, new = exterior.wedge((i, j), rest)
                if not s2:
                    continue
                # the 1/2 cancels against the (i,j)/(j,i) pair
                coeff = cij.embed(nv) * f
                _accumulate(out, new, coeff if s1 * s2 < 0 else -coeff)
    return out


def d_E(form: EForm) -> EForm:
    """The E-de Rham differential."""
    return EForm._raw(form.chart, d_E_terms(form.chart, form.terms))


def format_form(form: EForm) -> str:
    if not form.terms:
        return "0"
    parts = []
    for key in sorted(form.terms, key=lambda k: (len(k), k)):
        basis = "^".join(f"xi{i + 1}" for i in key) or "1"
        parts.append(f"({form.terms[key]}) * {basis}")
    return " + ".join(parts)


class _FormAlgebra:
    """Callbacks for the shared expression parser: ``*`` and ``^`` both wedge."""

    def __init__(self, ch: Chart):
        self.chart = ch
        self.nvars = ch.d

    def scalar(self, p):
        return EForm._raw(self.chart, {(): p} if p else {})

    def generator(self, kind, index):
        if kind != "xi":
            raise ParseError(f"{kind}{index + 1} is not allowed in a form; use xi<i>")
        return EForm._raw(self.chart, {(index,): self.chart.one()})

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a.wedge(b)

    wedge = mul

    def tensor(self, a, b):
        raise ParseError("'|' not supported in a form")

    def power(self, a, n):
        out = self.scalar(Poly.constant(1, self.nvars))
        for _ in range(n):
            out = self.mul(out, a)
        return out


def parse_form(text: str, ch: Chart) -> EForm:
    """Parse ``<poly> * xi1^xi2 + ...``."""
    from .syntax import ExprParser
    return ExprParser(text, _FormAlgebra(ch), ch.d, ch.r).parse()


# -- builtin corpus ----------------------------------------------------

def tangent(d: int) -> Chart:
    """E = TX on R^d: identity anchor, zero structure functions."""
    return Chart(d, d, {(i, i): 1 for i in range(d)}, {}, name=f"tangent{d}")


def abelian(r: int) -> Chart:
    return Chart(0, r, {}, {}, name=f"abelian{r}")


def so3() -> Chart:
    return Chart(0, 3, {}, {(0, 1, 2): 1, (1, 2, 0): 1, (0, 2, 1): -1}, name="so3")


def sl2() -> Chart:
    # e1 = h, e2 = e, e3 = f
    return Chart(0, 3, {}, {(0, 1, 1): 2, (0, 2, 2): -2, (1, 2, 0): 1}, name="sl2")


def heisenberg() -> Chart:
    return Chart(0, 3, {}, {(0, 1, 2): 1}, name="heisenberg")


def foliation2in3() -> Chart:
    """Rank-2 integrable distribution on R^3 with injective, non-constant anchor.

    e1 = d1 + x2 d3,  e2 = x1 d1 + d2 + (x1 x2 + x1) d3,  [e1, e2] = e1.
    Leaves are the level sets of x3 - x1 x2.
    """
    rho = {(0, 0): 1, (0, 2): "x2", (1, 0): "x1", (1, 1): 1, (1, 2): "x1*x2 + x1"}
    return Chart(3, 2, rho, {(0, 1, 0): 1}, name="foliation2in3")


def poisson_cotangent(pi: Mapping[Tuple[int, int], PolyLike], d: int, name: str = "") -> Chart:
    """Cotangent Lie algebroid of a bivector ``pi`` on R^d.

    Frame e_a = dx_a, anchor rho(dx_a) = pi^{ab} d/dx_b, Koszul bracket
    [dx_a, dx_b] = d(pi^{ab}).  Raises :class:`ChartError` unless
    [pi, pi] = 0.
    """
    comps: Dict[Tuple[int, int], Poly] = {}
    for (a, b), v in pi.items():
        p = v if isinstance(v, Poly) else (parse_poly(v, d) if isinstance(v, str) else Poly.constant(v, d))
        if a == b:
            raise ValueError("bivector has a diagonal entry")
        if a > b:
            a, b, p = b, a, -p
        comps[(a, b)] = comps.get((a, b), Poly.zero(d)) + p

    def pi_ab(a, b):
        if a < b:
            return comps.get((a, b), Poly.zero(d))
        if a > b:
            return -comps.get((b, a), Poly.zero(d))
        return Poly.zero(d)

    rho = {(a, b): pi_ab(a, b) for a in range(d) for b in range(d) if pi_ab(a, b)}
    c = {}
    for a in range(d):
        for b in range(a + 1, d):
            for k in range(d):
                v = pi_ab(a, b).partial(k)
                if v:
                    c[(a, b, k)] = v
    ch = Chart(d, d, rho, c, name=name or "poisson_cotangent")
    report = validate_chart(ch)
    if report:
        raise ChartError("bivector is not Poisson: [pi, pi] != 0", report)
    return ch


BUILTIN_NAMES = ("tangent", "abelian", "so3", "sl2", "heisenberg", "foliation2in3", "poisson_cotangent")


def builtin_chart(name: str, *args) -> Chart:
    """Look up a builtin chart.

    Accepts ``tangent``/``abelian`` with a size argument or suffix
    (``"abelian2"``), and ``poisson_cotangent`` with an optional
    ``(pi, d)``; its default is ``pi = x1 d1^d2`` on R^2.
    """
    m = re.fullmatch(r"(tangent|abelian)(\d+)", name)
    if m:
        name, args = m.group(1), (int(m.group(2)),)
    if name == "tangent":
        return tangent(*args)
    if name == "abelian":
        return abelian(*args)
    if name == "so3":
        return so3()
    if name == "sl2":
        return sl2()
    if name == "heisenberg":
        return heisenberg()
    if name == "foliation2in3":
        return foliation2in3()
    if name == "poisson_cotangent":
        if args:
            return poisson_cotangent(*args)
        return poisson_cotangent({(0, 1): "x1"}, 2)
    raise KeyError(f"unknown builtin chart {name!r}")


def builtin_corpus() -> List[Chart]:
    """One instance of every builtin family, used by the property suites."""
    return [
        tangent(2),
        abelian(2),
        so3(),
        sl2(),
        heisenberg(),
        foliation2in3(),
        builtin_chart("poisson_cotangent"),
    ]


# -- chart file format --------------------------------------------------

_HEADER = re.compile(r"^chart\s+d\s*=\s*(\d+)\s+r\s*=\s*(\d+)\s*$")
_ENTRY = re.compile(r"^(rho|c|gamma|lambda)\s+((?:\d+\s+)*\d+)\s*=\s*(.+)$")


@dataclass
class ChartFile:
    chart: Chart
    gamma: Dict[Tuple[int, int, int], Poly]
    bivector: Dict[Tuple[int, int], Poly]


def _parse_entry(line: str, lineno: int, d: int, r: int):
    m = _ENTRY.match(line)
    if not m:
        raise ChartFileError(f"cannot parse {line!r}", lineno)
    kind, idx_txt, expr = m.group(1), m.group(2), m.group(3)
    idx = tuple(int(t) - 1 for t in idx_txt.split())
    try:
        p = parse_poly(expr, d)
    except ParseError as exc:
        raise ChartFileError(str(exc), lineno) from None
    arity = {"rho": 2, "c": 3, "gamma": 3, "lambda": 2}[kind]
    if len(idx) != arity:
        raise ChartFileError(f"'{kind}' takes {arity} indices", lineno)
    if kind == "rho":
        i, a = idx
        if not (0 <= i < r and 0 <= a < d):
            raise ChartFileError("rho index out of range", lineno)
    elif kind == "c":
        i, j, k = idx
        if not (0 <= i < j < r and 0 <= k < r):
            raise ChartFileError("c entries need 1 <= i < j <= r and 1 <= k <= r", lineno)
    elif kind == "gamma":
        if any(not 0 <= t < r for t in idx):
            raise ChartFileError("gamma index out of range", lineno)
    else:
        i, j = idx
        if not (0 <= i < j < r):
            raise ChartFileError("lambda entries need 1 <= i < j <= r", lineno)
    return kind, idx, p


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_chart_text(text: str, name: str = "") -> ChartFile:
    """Parse the line-oriented chart format (optionally carrying gamma/lambda lines)."""
    header = None
    tables: Dict[str, dict] = {"rho": {}, "c": {}, "gamma": {}, "lambda": {}}
    for lineno, line in _content_lines(text):
        if header is None:
            m = _HEADER.match(line)
            if not m:
                raise ChartFileError("expected header 'chart d=<int> r=<int>'", lineno)
            header = (int(m.group(1)), int(m.group(2)))
            continue
        kind, idx, p = _parse_entry(line, lineno, *header)
        tables[kind][idx] = p
    if header is None:
        raise ChartFileError("missing header", 1)
    d, r = header
    chart = Chart(d, r, tables["rho"], tables["c"], name=name)
    return ChartFile(chart, tables["gamma"], tables["lambda"])


def parse_entries(text: str, ch: Chart, kind: str) -> Dict[tuple, Poly]:
    """Read the ``kind`` lines (gamma or lambda) of a file against a known chart.

    A header line, if present, must match the chart; other entry kinds are ignored.
    """
    out: Dict[tuple, Poly] = {}
    for lineno, line in _content_lines(text):
        m = _HEADER.match(line)
        if m:
            if (int(m.group(1)), int(m.group(2))) != (ch.d, ch.r):
                raise ChartFileError(f"header does not match chart d={ch.d} r={ch.r}", lineno)
            continue
        k, idx, p = _parse_entry(line, lineno, ch.d, ch.r)
        if k == kind:
            out[idx] = p
    return out


def format_chart(ch: Chart) -> str:
    lines = [f"chart d={ch.d} r={ch.r}"]
    for i in range(ch.r):
        for a in range(ch.d):
            p = ch.rho(i, a)
            if p:
                lines.append(f"rho {i + 1} {a + 1} = {p}")
    for (i, j, k), p in sorted(ch.c.items()):
        lines.append(f"c {i + 1} {j + 1} {k + 1} = {p}")
    return "\n".join(lines) + "\n"
