"""Map expressions in z: parsing, printing and conversion to exact lifts.

Grammar (``^`` binds tightest and associates to the right, then unary
minus, then ``* /``, then ``+ -``)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | IMAG | "z" | "(" expr ")"

``IMAG`` is a decimal followed by ``i`` (``3i``, ``0.5i``) or ``i`` alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import InvalidInput
from .qi import QI
from .ratmap import HomLift, lift_from_affine

MAX_DEGREE = 24


class ParseError(InvalidInput):
    def __init__(self, message: str, pos: int):
        super().__init__(f"syntax error at column {pos + 1}: {message}")
        self.pos = pos


# ---------------------------------------------------------------------------
# syntax tree

@dataclass(frozen=True)
class Num:
    value: QI


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: "Node"


Node = Union[Num, Var, Neg, BinOp, Pow]


def _fmt_fraction(x: Fraction) -> str:
    """Decimal text for a fraction with a terminating expansion."""
    if x.denominator == 1:
        return str(x.numerator)
    k = next((k for k in range(1, 400) if 10 ** k % x.denominator == 0), None)
    if k is None:
        raise ValueError(f"{x} has no short decimal expansion")
    n = abs(x.numerator) * (10 ** k // x.denominator)
    s = str(n).rjust(k + 1, "0")
    out = f"{s[:-k]}.{s[-k:]}"
    return "-" + out if x < 0 else out


def pretty(node: Node) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(node, Num):
        v = node.value
        if v.im == 0:
            return _fmt_fraction(v.re)
        if v.re == 0 and v.im > 0:
            return "i" if v.im == 1 else f"{_fmt_fraction(v.im)}i"
        raise ValueError("only real or positive imaginary literals print as atoms")
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Neg):
        return f"(-{pretty(node.arg)})"
    if isinstance(node, BinOp):
        return f"({pretty(node.left)}{node.op}{pretty(node.right)})"
    if isinstance(node, Pow):
        return f"({pretty(node.base)}^{pretty(node.exponent)})"
    raise TypeError(node)


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(?P<imag>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?i)"
                    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
                    r"|(?P<i>i)|(?P<z>z)|(?P<op>[-+*/^()]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, ch):
        kind, val, pos = self.take()
        if kind != "op" or val != ch:
            raise ParseError(f"expected {ch!r}", pos)

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(QI(Fraction(val)))
        if kind == "imag":
            return Num(QI(0, Fraction(val[:-1])))
        if kind == "i":
            return Num(QI(0, 1))
        if kind == "z":
            return Var()
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {val!r}", pos)


def parse(text: str) -> Node:
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text)
    node = p.expr()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {val!r}", pos)
    return node


# ---------------------------------------------------------------------------
# exact rational functions over Q(i); polynomials are ascending coefficient lists

def _trim(a: list) -> list:
    while len(a) > 1 and not a[-1]:
        a = a[:-1]
    return a


def _pmul(a, b):
    out = [QI(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = out[i + j] + x * y
    return _trim(out)


def _padd(a, b, sign=1):
    n = max(len(a), len(b))
    a = a + [QI(0)] * (n - len(a))
    b = b + [QI(0)] * (n - len(b))
    return _trim([x + y * sign for x, y in zip(a, b)])


def _is_zero(a) -> bool:
    return len(a) == 1 and not a[0]


def _divmod(a, b):
    a = list(a)
    q = [QI(0)] * max(1, len(a) - len(b) + 1)
    lead = b[-1]
    while len(a) >= len(b) and not _is_zero(a):
        c = a[-1] / lead
        s = len(a) - len(b)
        q[s] = c
        for i, y in enumerate(b):
            a[s + i] = a[s + i] - c * y
        a = _trim(a[:-1]) if len(a) > 1 else a
    return _trim(q), _trim(a)


def _gcd(a, b):
    while not _is_zero(b):
        a, b = b, _divmod(a, b)[1]
    lead = a[-1]
    return [x / lead for x in a]


@dataclass(frozen=True)
class RatFunc:
    num: list
    den: list

    @classmethod
    def make(cls, num, den) -> "RatFunc":
        if _is_zero(den):
            raise InvalidInput("division by zero in map expression")
        g = _gcd(num, den)
        if len(g) > 1:
            num = _divmod(num, g)[0]
            den = _divmod(den, g)[0]
        if _is_zero(num):
            den = [QI(1)]
        r = cls(_trim(num), _trim(den))
        if r.degree > MAX_DEGREE:
            raise InvalidInput(f"degree {r.degree} exceeds the limit {MAX_DEGREE}")
        return r

    @property
    def degree(self) -> int:
        return max(len(self.num), len(self.den)) - 1

    def __add__(self, o):
        return RatFunc.make(_padd(_pmul(self.num, o.den), _pmul(o.num, self.den)), _pmul(self.den, o.den))

    def __sub__(self, o):
        return RatFunc.make(_padd(_pmul(self.num, o.den), _pmul(o.num, self.den), -1), _pmul(self.den, o.den))

    def __mul__(self, o):
        return RatFunc.make(_pmul(self.num, o.num), _pmul(self.den, o.den))

    def __truediv__(self, o):
        if _is_zero(o.num):
            raise InvalidInput("division by zero in map expression")
        return RatFunc.make(_pmul(self.num, o.den), _pmul(self.den, o.num))

    def __neg__(self):
        return RatFunc([-x for x in self.num], self.den)

    def __pow__(self, n: int):
        if n < 0:
            return RatFunc.make([QI(1)], [QI(1)]) / (self ** -n)
        out = RatFunc([QI(1)], [QI(1)])
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def constant(self):
        if len(self.num) == 1 and len(self.den) == 1:
            return self.num[0] / self.den[0]
        return None


def to_ratfunc(node: Node) -> RatFunc:
    if isinstance(node, Num):
        return RatFunc([node.value], [QI(1)])
    if isinstance(node, Var):
        return RatFunc([QI(0), QI(1)], [QI(1)])
    if isinstance(node, Neg):
        return -to_ratfunc(node.arg)
    if isinstance(node, BinOp):
        a, b = to_ratfunc(node.left), to_ratfunc(node.right)
        return {"+": a.__add__, "-": a.__sub__, "*": a.__mul__, "/": a.__truediv__}[node.op](b)
    if isinstance(node, Pow):
        e = to_ratfunc(node.exponent).constant()
        if e is None or e.im != 0 or e.re.denominator != 1:
            raise InvalidInput("exponents must be integer constants")
        n = int(e.re)
        base = to_ratfunc(node.base)
        if base.degree * abs(n) > MAX_DEGREE:
            raise InvalidInput(f"degree exceeds the limit {MAX_DEGREE}")
        return base ** n
    raise TypeError(node)


def lift_of(node: Node) -> HomLift:
    r = to_ratfunc(node)
    if r.degree < 2:
        raise InvalidInput(f"map has degree {r.degree}; degree at least 2 is required")
    return lift_from_affine(r.num, r.den)


def parse_map(text: str) -> HomLift:
    return lift_of(parse(text))
