"""Parser for the textual syntax of forms, polyvectors, UE elements and tensors.

    expr    := ['-'] tensor (('+'|'-') tensor)*
    tensor  := product ('|' product)*
    product := factor (('*'|'^') factor)*
    factor  := atom ('^' natural)?
    atom    := rational | 'x'n | 'e'n | 'xi'n | '(' expr ')'

``^`` followed by a number is a power, otherwise it is a wedge.  The target
algebra supplies the meaning of each operation.
"""
from __future__ import annotations

from fractions import Fraction

from .poly import ParseError, Poly, VariableRangeError


class Algebra:
    """Callbacks used by :class:`ExprParser`; subclasses override what they support."""

    def scalar(self, p: Poly):
        raise NotImplementedError

    def generator(self, kind: str, index: int):
        raise ParseError(f"generator {kind}{index + 1} not allowed here")

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        raise ParseError("'*' not supported here")

    def wedge(self, a, b):
        raise ParseError("'^' (wedge) not supported here")

    def tensor(self, a, b):
        raise ParseError("'|' not supported here")

    def power(self, a, n: int):
        out = self.scalar(Poly.constant(1, self.nvars))
        for _ in range(n):
            out = self.mul(out, a)
        return out


class ExprParser:
    def __init__(self, text: str, algebra: Algebra, nvars: int, rank: int):
        self.text = text
        self.alg = algebra
        self.nvars = nvars
        self.rank = rank
        self.pos = 0

    def error(self, msg):
        raise ParseError(msg, self.pos)

    def peek(self, n=1):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos:self.pos + n]

    def natural(self) -> int:
        self.peek()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected a natural number")
        return int(self.text[start:self.pos])

    def parse(self):
        if not self.text.strip():
            self.error("empty expression")
        v = self.expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return v

    def expr(self):
        if self.peek() == "-":
            self.pos += 1
            v = self.alg.neg(self.tensor())
        else:
            v = self.tensor()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            w = self.tensor()
            v = self.alg.add(v, w if op == "+" else self.alg.neg(w))
        return v

    def tensor(self):
        v = self.product()
        while self.peek() == "|":
            self.pos += 1
            v = self.alg.tensor(v, self.product())
        return v

    def product(self):
        v = self.factor()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                v = self.alg.mul(v, self.factor())
            elif ch == "^":
                # a power binds tighter and is handled in factor(); here it is a wedge
                self.pos += 1
                v = self.alg.wedge(v, self.factor())
            else:
                return v

    def factor(self):
        v = self.atom()
        if self.peek() == "^":
            save = self.pos
            self.pos += 1
            if self.peek().isdigit():
                return self.alg.power(v, self.natural())
            self.pos = save
        return v

    def atom(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            v = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return v
        if ch.isdigit():
            num = self.natural()
            val = Fraction(num)
            if self.peek() == "/":
                self.pos += 1
                if not self.peek().isdigit():
                    self.error("division is only allowed between integer literals")
                den = self.natural()
                if den == 0:
                    self.error("zero denominator")
                val = Fraction(num, den)
            return self.alg.scalar(Poly.constant(val, self.nvars))
        start = self.pos
        if self.peek(2) == "xi":
            self.pos += 2
            idx = self.natural()
            if not 1 <= idx <= self.rank:
                raise VariableRangeError(f"xi{idx} out of range (r={self.rank})", start)
            return self.alg.generator("xi", idx - 1)
        if ch == "x":
            self.pos += 1
            idx = self.natural()
            if not 1 <= idx <= self.nvars:
                raise VariableRangeError(f"variable x{idx} out of range (nvars={self.nvars})", start)
            return self.alg.scalar(Poly.var(idx - 1, self.nvars))
        if ch == "e":
            self.pos += 1
            idx = self.natural()
            if not 1 <= idx <= self.rank:
                raise VariableRangeError(f"generator e{idx} out of range (r={self.rank})", start)
            return self.alg.generator("e", idx - 1)
        if not ch:
            self.error("unexpected end of input")
        self.error(f"unexpected character {ch!r}")
