"""Command-line driver.

Every check is printed as ``IDENT <name> [degree<=N] OK|FAIL [detail]``; the
exit status is 0 iff every reported identity is OK.  Parse errors exit with 2.
"""
from __future__ import annotations

import argparse
import itertools
import os
import random
import sys
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .chart import (BUILTIN_NAMES, Chart, ChartFileError, builtin_chart, d_E, format_chart,
                    format_form, parse_chart_text, parse_entries, parse_form, validate_chart)
from .connection import (Connection, bianchi_check, canonical_torsion_free, curvature, torsion)
from .enveloping import (WindowTooLarge, gerstenhaber_bracket, hochschild_d, parse_polydiff,
                         truncated_cohomology)
from .poly import ParseError, parse_poly
from .polyvectors import PolyVector, format_polyvector, parse_polyvector, schouten_bracket
from .report import Ident, all_ok
from . import fedosov as fed
from . import quantization as qz
from . import sampling


@dataclass
class RunConfig:
    command: str
    inputs: List[str] = field(default_factory=list)
    N: int = 4
    order: int = 2
    bound: int = 4
    fmt: str = "text"
    seed: int = 0
    samples: int = 5

    def __post_init__(self):
        if self.command == "fedosov" and self.N < 2:
            raise ValueError("--degree must be at least 2")
        if self.command == "quantize" and self.order < 1:
            raise ValueError("--order must be at least 1")


class Output:
    """Collects report lines; human-only lines are dropped in ``lines`` format."""

    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout
        self.idents: List[Ident] = []

    def text(self, line: str = ""):
        if self.fmt == "text":
            print(line, file=self.stream)

    def ident(self, item: Ident):
        self.idents.append(item)
        print(item.line(), file=self.stream)

    def idents_from(self, items):
        for item in items:
            self.ident(item)

    def status(self) -> int:
        return 0 if all_ok(self.idents) else 1


# -- input loading ------------------------------------------------------------

def load_chart(spec: str) -> Tuple[Chart, dict, dict]:
    """A builtin name or a chart file; returns (chart, gamma entries, lambda entries)."""
    if os.path.exists(spec):
        with open(spec) as fh:
            cf = parse_chart_text(fh.read(), name=os.path.basename(spec))
        return cf.chart, cf.gamma, cf.bivector
    try:
        return builtin_chart(spec), {}, {}
    except (KeyError, ValueError):
        raise SystemExit(f"error: {spec!r} is neither a file nor a builtin chart ({', '.join(BUILTIN_NAMES)})")


def load_connection(spec: Optional[str], ch: Chart, gamma_in_chart: dict) -> Connection:
    if spec is None:
        return Connection(ch, gamma_in_chart) if gamma_in_chart else canonical_torsion_free(ch)
    if spec == "canonical":
        return canonical_torsion_free(ch)
    with open(spec) as fh:
        return Connection(ch, parse_entries(fh.read(), ch, "gamma"))


def load_bivector(spec: Optional[str], ch: Chart, lambda_in_chart: dict) -> qz.Bivector:
    if spec is None:
        return qz.Bivector(ch, lambda_in_chart)
    if os.path.exists(spec):
        with open(spec) as fh:
            return qz.Bivector(ch, parse_entries(fh.read(), ch, "lambda"))
    return qz.Bivector.from_polyvector(parse_polyvector(spec, ch))


# -- commands -----------------------------------------------------------------

def cmd_validate(args, out: Output) -> int:
    ch, gamma, lam = load_chart(args.chart)
    rng = random.Random(args.seed)
    violations = validate_chart(ch)
    out.ident(Ident("chart-axioms", not violations, None, "; ".join(str(v) for v in violations)))
    for n in range(args.samples):
        w = sampling.random_form(rng, ch)
        dd = d_E(d_E(w))
        out.ident(Ident(f"d_E-squared[sample {n}]", dd.is_zero(), None, format_form(dd)))
    conn = load_connection(None, ch, gamma)
    T = torsion(conn)
    out.ident(Ident("torsion-free", T.is_zero(), None, repr(T)))
    failures = bianchi_check(conn)
    out.ident(Ident("bianchi", not failures, None, "; ".join(str(f) for f in failures[:5])))
    if lam:
        report = qz.maurer_cartan_check(qz.Bivector(ch, lam))
        out.ident(Ident("maurer-cartan", not report, None, "; ".join(str(v) for v in report)))
    return out.status()


def cmd_form_d(args, out: Output) -> int:
    ch, _, _ = load_chart(args.chart)
    w = parse_form(args.form, ch)
    dw = d_E(w)
    out.text(f"form: {format_form(w)}")
    out.text(f"d_E form: {format_form(dw)}")
    dd = d_E(dw)
    out.ident(Ident("d_E-squared", dd.is_zero(), None, format_form(dd)))
    return out.status()


def cmd_bracket(args, out: Output) -> int:
    ch, _, _ = load_chart(args.chart)
    if args.kind == "schouten":
        u, v = parse_polyvector(args.left, ch), parse_polyvector(args.right, ch)
        b = schouten_bracket(u, v)
        out.text(f"[u, v]_E = {format_polyvector(b)}")
        sym = b + _graded_swap(schouten_bracket(v, u), u, v)
        out.ident(Ident("graded-antisymmetry", sym.is_zero(), None, format_polyvector(sym)))
    else:
        P, Q = parse_polydiff(args.left, ch), parse_polydiff(args.right, ch)
        b = gerstenhaber_bracket(P, Q)
        out.text(f"[P, Q] = {b}")
        dd = hochschild_d(hochschild_d(b))
        out.ident(Ident("hochschild-d-squared", dd.is_zero(), None, str(dd)))
    return out.status()


def _graded_swap(vu: PolyVector, u: PolyVector, v: PolyVector) -> PolyVector:
    """(-1)^{(|u|-1)(|v|-1)} [v, u] for homogeneous u, v; adding it to [u, v] gives zero."""
    du = {len(k) for k in u.terms}
    dv = {len(k) for k in v.terms}
    if len(du) != 1 or len(dv) != 1:
        raise SystemExit("error: the antisymmetry check needs homogeneous inputs")
    (a,), (b,) = du, dv
    return -vu if ((a - 1) * (b - 1)) % 2 else vu


def cmd_curvature(args, out: Output) -> int:
    ch, gamma, _ = load_chart(args.chart)
    conn = load_connection(args.connection, ch, gamma)
    out.text(conn.lines().rstrip() or "connection: zero")
    T = torsion(conn)
    for (k, i, j), p in sorted(T.terms.items()):
        if i < j:
            out.text(f"T {i + 1} {j + 1} {k + 1} = {p}")
    R = curvature(conn)
    for (l, i, j, k), p in sorted(R.terms.items()):
        if i < j:
            out.text(f"R {i + 1} {j + 1} {k + 1} {l + 1} = {p}")
    out.ident(Ident("torsion-free", T.is_zero(), None, ""))
    failures = bianchi_check(conn)
    for name in ("first", "second"):
        bad = [f for f in failures if f.identity == name]
        out.ident(Ident(f"bianchi-{name}", not bad, None, "; ".join(str(f) for f in bad[:5])))
    return out.status()


def fedosov_report(fs: fed.FlatStructure, rng: random.Random, samples: int, out: Output):
    ch = fs.chart
    N = fs.N
    kA = fed.kappa(fs.A)
    out.ident(Ident("kappa-A", kA.is_zero(), N, fed.format_section(kA)))
    res, bound = fed.flatness_residual(fs)
    out.ident(Ident("flatness-equation", res.is_zero(), bound, fed.format_section(res)))
    for kind in fed.KINDS:
        for n in range(samples):
            s = sampling.random_section(rng, ch, kind, N, fiber_degree=rng.randint(0, N - 1))
            dd, b = fed.d_squared_residual(fs, s)
            out.ident(Ident(f"D-squared[{kind} {n}]", dd.is_zero(), b, fed.format_section(dd)))
    for kind in fed.KINDS:
        for n in range(samples):
            s = sampling.random_section(rng, ch, kind, N, fiber_degree=rng.randint(0, N - 1))
            lhs = fed.delta(fed.kappa(s)) + fed.kappa(fed.delta(s)) + fed.harmonic(s)
            diff = (lhs - s).truncated(N - 1)
            out.ident(Ident(f"hodge[{kind} {n}]", diff.is_zero(), N - 1, fed.format_section(diff)))
    for kind in fed.KINDS:
        for n in range(samples):
            u0 = sampling.random_section(rng, ch, kind, N, form_degree=0, fiber_degree=0)
            u = fed.theta_lift(u0, fs)
            h = fed.harmonic(u) - u0
            out.ident(Ident(f"lift-harmonic[{kind} {n}]", h.is_zero(), N, fed.format_section(h)))
            Du = fs.D(u).truncated(fed.reliable_degree(fs, u, 1))
            out.ident(Ident(f"lift-flat[{kind} {n}]", Du.is_zero(), fed.reliable_degree(fs, u, 1),
                            fed.format_section(Du)))
    f = sampling.random_poly(rng, ch.d)
    out.ident(fed.first_order_check(f, fs))
    out.ident(fed.first_order_check(sampling.random_polyvector(rng, ch, degree=1), fs))
    gens = [PolyVector.basis(ch, i) for i in range(ch.r)]
    for i, j in itertools.combinations(range(ch.r), 2):
        out.idents_from(fed.bracket_transfer_check(gens[i], gens[j], fs))
    if N >= 3:
        out.idents_from(fed.mu_transfer_check(fs))
        for i, j in itertools.combinations_with_replacement(range(ch.r), 2):
            diff = fed.mu_second_order(i, j, fs.connection) - fed.second_order_mu_formula(i, j, fs.connection)
            out.ident(Ident(f"mu-second-order[e{i + 1},e{j + 1}]", diff.is_zero(), None, str(diff)))


def cmd_fedosov(args, out: Output) -> int:
    ch, gamma, _ = load_chart(args.chart)
    conn = load_connection(args.connection, ch, gamma)
    try:
        fs = fed.solve_A(ch, conn, args.degree)
    except fed.NotTorsionFree as exc:
        print(f"refused: {exc}", file=out.stream)
        out.ident(Ident("torsion-free", False, None, str(exc)))
        return 1
    if fs.A.is_zero():
        out.text("A = 0")
    else:
        for p in range(2, args.degree + 1):
            part = fs.A.degree_part(p)
            if not part.is_zero():
                out.text(f"A[{p}] = {fed.format_section(part)}")
    fedosov_report(fs, random.Random(args.seed), args.samples, out)
    return out.status()


def cmd_cohomology(args, out: Output) -> int:
    ch, _, _ = load_chart(args.chart)
    try:
        rows = truncated_cohomology(ch, args.arity, args.order)
    except WindowTooLarge as exc:
        print(f"error: {exc}", file=out.stream)
        return 1
    out.text("degree  dim  kernel  image  H  wedge  hkr")
    for row in rows:
        out.text(f"{row['degree']:>6} {row['dim']:>4} {row['kernel']:>7} {row['image_in']:>6} "
                 f"{row['cohomology']:>2} {row['wedge_dim']:>6} {row['hkr_classes']:>4}")
    for row in rows:
        ok = (row["cohomology"] == row["wedge_dim"] == row["hkr_classes"]) and row["hkr_closed"]
        detail = f"H={row['cohomology']} wedge={row['wedge_dim']} hkr={row['hkr_classes']}"
        out.ident(Ident(f"hkr-quasi-isomorphism[{row['degree']}]", ok, args.order, detail))
    return out.status()


def cmd_quantize(args, out: Output) -> int:
    ch, _, lam_in_chart = load_chart(args.chart)
    lam = load_bivector(args.bivector, ch, lam_in_chart)
    report = qz.maurer_cartan_check(lam)
    out.ident(Ident("maurer-cartan", not report, None, "; ".join(str(v) for v in report)))
    if report:
        print("refused: the bivector is not a Maurer-Cartan element", file=out.stream)
        return 1
    J = qz.twistor_order1(lam)
    while J.order < args.order:
        try:
            J = qz.extend_with_retry(J, 1, args.bound)
        except qz.InconsistentAtBound as exc:
            print(f"inconsistent-at-bound: order {exc.order}, L={args.bound}", file=out.stream)
            out.ident(Ident(f"twistor-extend[order {exc.order}]", False, None, f"L={args.bound}"))
            return 1
    for line in J.series().lines():
        out.text(line)
    out.idents_from(qz.cocycle_report(J))
    out.idents_from(qz.semiclassical_check(J, lam))
    H, axioms = qz.twisted_hopf(J)
    out.idents_from(axioms)
    rng = random.Random(args.seed)
    pairs = [(parse_poly(a, ch.d), parse_poly(b, ch.d)) for a, b in _pairs(args.sample)]
    if not pairs:
        pairs = [(sampling.random_poly(rng, ch.d), sampling.random_poly(rng, ch.d)) for _ in range(2)]
    for a, b in pairs:
        out.text(f"{a} * {b}:")
        for line in qz.twisted_product(a, b, J).lines():
            out.text("  " + line)
    for n in range(args.samples):
        a, b, c = (sampling.random_poly(rng, ch.d) for _ in range(3))
        assoc = qz.star_associator(a, b, c, J)
        bad = [m for m, p in enumerate(assoc) if p]
        out.ident(Ident(f"star-associativity[sample {n}]", not bad, J.order,
                        f"orders {bad}" if bad else ""))
    return out.status()


def _pairs(values: Optional[Sequence[str]]):
    values = values or []
    if len(values) % 2:
        raise SystemExit("error: --sample takes polynomials in pairs")
    return list(zip(values[::2], values[1::2]))


def cmd_export(args, out: Output) -> int:
    ch, gamma, lam = load_chart(args.chart)
    text = format_chart(ch)
    conn = load_connection(args.connection, ch, gamma) if args.connection else None
    if conn is not None:
        text += conn.lines()
    for (i, j), p in sorted(lam.items()):
        text += f"lambda {i + 1} {j + 1} = {p}\n"
    sys.stdout.write(text)
    return 0


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="algebroid", description="Lie algebroid formality and quantization checks.")
    p.add_argument("--format", choices=("text", "lines"), default="text",
                   help="'lines' prints only the IDENT protocol")
    sub = p.add_subparsers(dest="command", required=True)

    def chart_cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("chart", help="chart file or builtin name")
        return sp

    sp = chart_cmd("validate", "check the chart axioms, d_E^2 and the canonical connection")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=5)
    sp.set_defaults(fn=cmd_validate)

    sp = chart_cmd("form-d", "apply d_E to a form")
    sp.add_argument("form")
    sp.set_defaults(fn=cmd_form_d)

    sp = chart_cmd("bracket", "Schouten or Gerstenhaber bracket of two parsed inputs")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--kind", choices=("schouten", "gerstenhaber"), default="schouten")
    sp.set_defaults(fn=cmd_bracket)

    sp = chart_cmd("curvature", "torsion, curvature and Bianchi identities of a connection")
    sp.add_argument("--connection", default=None, help="'canonical' or a file with gamma lines")
    sp.set_defaults(fn=cmd_curvature)

    sp = chart_cmd("fedosov", "flatten the Weyl-type resolution and check its identities")
    sp.add_argument("--degree", type=int, default=4)
    sp.add_argument("--connection", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=3)
    sp.set_defaults(fn=cmd_fedosov)

    sp = chart_cmd("cohomology", "truncated Hochschild cohomology window over a point")
    sp.add_argument("--arity", type=int, default=1)
    sp.add_argument("--order", type=int, default=3)
    sp.set_defaults(fn=cmd_cohomology)

    sp = chart_cmd("quantize", "twistor, star product and twisted Hopf checks")
    sp.add_argument("bivector", nargs="?", default=None,
                    help="file with lambda lines or an expression such as 'x1*e1^e2'")
    sp.add_argument("--order", type=int, default=2)
    sp.add_argument("--bound", type=int, default=4)
    sp.add_argument("--sample", nargs="*", default=None, help="polynomial pairs a b for a*b")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=3)
    sp.set_defaults(fn=cmd_quantize)

    sp = chart_cmd("export", "print a chart in the file format")
    sp.add_argument("--connection", default=None)
    sp.set_defaults(fn=cmd_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        RunConfig(args.command, N=getattr(args, "degree", 4), order=getattr(args, "order", 2))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Output(args.format)
    try:
        return args.fn(args, out)
    except (ChartFileError, ParseError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
