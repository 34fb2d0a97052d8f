"""Exact symbolic engine for Lie algebroid formality computations."""
from .poly import ParseError, Poly, parse_poly
from .chart import Chart, EForm, builtin_chart, builtin_corpus, d_E, validate_chart
from .polyvectors import PolyVector, schouten_bracket
from .enveloping import PolyDiffOp, UEElement, hkr, hochschild_d, truncated_cohomology
from .connection import Connection, bianchi_check, canonical_torsion_free, curvature, torsion
from .fedosov import MixedSection, solve_A, theta_lift
from .quantization import Bivector, FormalTwistor, twisted_hopf, twisted_product, twistor_extend, twistor_order1
from .report import Ident

__all__ = [
    "ParseError", "Poly", "parse_poly",
    "Chart", "EForm", "builtin_chart", "builtin_corpus", "d_E", "validate_chart",
    "PolyVector", "schouten_bracket",
    "PolyDiffOp", "UEElement", "hkr", "hochschild_d", "truncated_cohomology",
    "Connection", "bianchi_check", "canonical_torsion_free", "curvature", "torsion",
    "MixedSection", "solve_A", "theta_lift",
    "Bivector", "FormalTwistor", "twisted_hopf", "twisted_product", "twistor_extend", "twistor_order1",
    "Ident",
]
