"""Expression trees for one-variable function specifications.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # exponent must be constant
    atom   := NUMBER | 'x' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := exp | log | sqrt | cos | acos

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``, and it is
right-associative.  Exponents are folded to a float at parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from ..errors import ExprSyntaxError

FUNCTIONS = ("exp", "log", "sqrt", "cos", "acos")
BINARY_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ValueError(f"numeric literals are finite and nonnegative, got {self.value!r}")


@dataclass(frozen=True)
class Var:
    name: str = "x"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float

    def __post_init__(self):
        if not math.isfinite(self.exponent):
            raise ValueError("exponent must be finite")


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(
                f"unexpected character {text[start]!r}", start,
                ("number", "x", "function", "operator"), text,
            )
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, expected):
        _, _, pos = self.peek()
        raise ExprSyntaxError(message, pos, expected, self.text)

    def expect_op(self, op):
        kind, val, _ = self.peek()
        if kind == "op" and val == op:
            return self.advance()
        found = "end of input" if kind == "end" else repr(val)
        self.fail(f"found {found}", (repr(op),))

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}", ("operator", "end of input"))
        return e

    def expr(self):
        left = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                left = BinOp(val, left, self.term())
            else:
                return left

    def term(self):
        left = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                left = BinOp(val, left, self.unary())
            else:
                return left

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            start = self.peek()[2]
            exponent = self.unary()
            if _has_var(exponent):
                raise ExprSyntaxError("exponent must be numeric", start, ("number",), self.text)
            try:
                folded = _const_value(exponent)
            except (ValueError, ZeroDivisionError, OverflowError):
                raise ExprSyntaxError("exponent does not evaluate to a finite number",
                                      start, ("number",), self.text) from None
            if not math.isfinite(folded):
                raise ExprSyntaxError("exponent does not evaluate to a finite number",
                                      start, ("number",), self.text)
            return Pow(base, folded)
        return base

    def atom(self):
        kind, val, _ = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(val))
        if kind == "name":
            if val == "x":
                self.advance()
                return Var()
            if val in FUNCTIONS:
                self.advance()
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            self.fail(f"unknown name {val!r}", ("x",) + FUNCTIONS)
        if kind == "op" and val == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        self.fail(f"found {found}", ("number", "x", "function", "'('", "'-'"))


def _has_var(e):
    if isinstance(e, Var):
        return True
    if isinstance(e, Num):
        return False
    if isinstance(e, (Neg, Call)):
        return _has_var(e.arg)
    if isinstance(e, Pow):
        return _has_var(e.base)
    return _has_var(e.left) or _has_var(e.right)


def _const_value(e):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        return -_const_value(e.arg)
    if isinstance(e, Pow):
        v = _const_value(e.base) ** e.exponent
        if isinstance(v, complex):
            raise ValueError("complex power")
        return v
    if isinstance(e, Call):
        return getattr(math, e.func)(_const_value(e.arg))
    a, b = _const_value(e.left), _const_value(e.right)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return a / b


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`~hmae.errors.ExprSyntaxError` carrying the failing
    position and the set of expected tokens.
    """
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Render ``e`` so that ``parse_expr(to_text(e)) == e``.

    Every compound node is parenthesized; the output favours exactness of
    the round trip over readability.
    """
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Neg):
        return f"(-{to_text(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)}^({float(e.exponent)!r}))"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")
