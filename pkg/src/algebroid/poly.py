"""Exact multivariate polynomials over the rationals.

Polynomials are the coefficient ring for every other module: a chart's
anchor, structure functions, Christoffel symbols and all section
coefficients are :class:`Poly` values.  Variables are indexed from 0 in the
Python API and printed/parsed as ``x1 .. xd`` (1-based) in text.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple, Union

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]


class ParseError(ValueError):
    """Raised for malformed polynomial text; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class VariableRangeError(ParseError):
    pass


class Poly:
    """Immutable sparse polynomial ``sum c_e x^e`` with Fraction coefficients."""

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Scalar] | None = None):
        clean: Dict[Exponent, Fraction] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != nvars:
                    raise ValueError(f"exponent {exp} has length {len(exp)}, expected {nvars}")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent in {exp}")
                c = Fraction(c)
                if c:
                    c = clean.get(exp, 0) + c
                    if c:
                        clean[exp] = c
                    else:
                        clean.pop(exp, None)
        self.nvars = nvars
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: Dict[Exponent, Fraction]) -> "Poly":
        # caller guarantees: no zero coefficients, correct lengths
        p = object.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, c: Scalar, nvars: int) -> "Poly":
        c = Fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, i: int, nvars: int) -> "Poly":
        if not 0 <= i < nvars:
            raise IndexError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls._raw(nvars, {tuple(exp): Fraction(1)})

    @classmethod
    def monomial(cls, exp: Exponent, c: Scalar = 1) -> "Poly":
        return cls(len(exp), {tuple(exp): c})

    # -- inspection ---------------------------------------------------
    @property
    def terms(self) -> Tuple[Tuple[Exponent, Fraction], ...]:
        """Terms in canonical order (graded, then reverse-lexicographic on exponents)."""
        return tuple(sorted(self._terms.items(), key=_term_key))

    def items(self):
        return self._terms.items()

    def coefficient(self, exp: Exponent) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and not any(next(iter(self._terms))))

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.constant(other, self.nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v += c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return Poly._raw(self.nvars, {})
        out: Dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return Poly._raw(self.nvars, {e: c for e, c in out.items() if c})

    def __rmul__(self, other):
        return self.__mul__(other)

    def scale(self, c: Scalar) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly._raw(self.nvars, {})
        return Poly._raw(self.nvars, {e: v * c for e, v in self._terms.items()})

    def __truediv__(self, c):
        if isinstance(c, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(c))
        return NotImplemented

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power")
        result = Poly.constant(1, self.nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def partial(self, i: int) -> "Poly":
        """Partial derivative with respect to variable ``i`` (0-based)."""
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        out = {}
        for e, c in self._terms.items():
            k = e[i]
            if k:
                out[e[:i] + (k - 1,) + e[i + 1:]] = c * k
        return Poly._raw(self.nvars, out)

    def embed(self, nvars: int, offset: int = 0) -> "Poly":
        """Re-express in ``nvars`` variables, placing ours at ``offset``."""
        pre = (0,) * offset
        post = (0,) * (nvars - offset - self.nvars)
        return Poly._raw(nvars, {pre + e + post: c for e, c in self._terms.items()})

    def truncate(self, variables: Iterable[int], max_degree: int) -> "Poly":
        """Drop terms whose degree in ``variables`` exceeds ``max_degree``."""
        variables = tuple(variables)
        return Poly._raw(
            self.nvars,
            {e: c for e, c in self._terms.items() if sum(e[v] for v in variables) <= max_degree},
        )

    # -- comparison ---------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Poly.constant(other, self.nvars)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    # -- text ---------------------------------------------------------
    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"Poly({self.nvars}, {format_poly(self)!r})"


def _term_key(item):
    e, _ = item
    return (-sum(e), tuple(-k for k in e))


def _format_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_poly(p: Poly, var: str = "x") -> str:
    """Render ``p`` in the expression grammar accepted by :func:`parse_poly`."""
    if not p._terms:
        return "0"
    parts = []
    for e, c in p.terms:
        factors = []
        for i, k in enumerate(e):
            if k == 1:
                factors.append(f"{var}{i + 1}")
            elif k > 1:
                factors.append(f"{var}{i + 1}^{k}")
        mag = abs(c)
        if not factors:
            body = _format_rational(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _format_rational(mag) + "*" + "*".join(factors)
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


# -- parser ---------------------------------------------------------------

class _Parser:
    """Recursive-descent parser for

        expr   := term (('+'|'-') term)*
        term   := factor ('*' factor)*
        factor := atom ('^' natural)?
        atom   := rational | var | '(' expr ')'

    A leading unary minus on a term is accepted so printed output re-parses.
    """

    def __init__(self, text: str, nvars: int, var: str = "x"):
        self.text = text
        self.nvars = nvars
        self.var = var
        self.pos = 0

    def error(self, msg):
        raise ParseError(msg, self.pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def natural(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected a natural number")
        return int(self.text[start:self.pos])

    def parse(self) -> Poly:
        if not self.text.strip():
            self.error("empty expression")
        p = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return p

    def expr(self) -> Poly:
        p = self.signed_term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def signed_term(self) -> Poly:
        if self.peek() == "-":
            self.pos += 1
            return -self.term()
        return self.term()

    def term(self) -> Poly:
        p = self.factor()
        while self.peek() == "*":
            self.pos += 1
            p = p * self.factor()
        return p

    def factor(self) -> Poly:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            base = base ** self.natural()
        return base

    def atom(self) -> Poly:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            p = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return p
        if ch.isdigit():
            num = self.natural()
            if self.peek() == "/":
                self.pos += 1
                if not self.peek().isdigit():
                    self.error("division is only allowed between integer literals")
                den = self.natural()
                if den == 0:
                    self.error("zero denominator")
                return Poly.constant(Fraction(num, den), self.nvars)
            return Poly.constant(num, self.nvars)
        if ch == self.var:
            start = self.pos
            self.pos += 1
            idx = self.natural()
            if not 1 <= idx <= self.nvars:
                raise VariableRangeError(
                    f"variable {self.var}{idx} out of range (nvars={self.nvars})", start
                )
            return Poly.var(idx - 1, self.nvars)
        if not ch:
            self.error("unexpected end of input")
        self.error(f"unexpected character {ch!r}")


def parse_poly(text: str, nvars: int) -> Poly:
    """Parse a polynomial in ``x1..x{nvars}``.

    >>> str(parse_poly("x1^2 + 2*x2 - 1/3", 2))
    'x1^2 + 2*x2 - 1/3'
    """
    return _Parser(text, nvars).parse()
