"""Second-order forward-mode differentiation.

A :class:`Jet2` carries ``(f, f', f'')`` at a point.  Components may be
floats or numpy arrays of equal shape, so a whole sample grid is
differentiated in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EvalDomainError
from .expr import BinOp, Call, Expr, Neg, Num, Pow, Var


@dataclass(frozen=True)
class Jet2:
    value: object
    d1: object
    d2: object

    @classmethod
    def const(cls, c, like=0.0):
        z = np.zeros_like(np.asarray(like, dtype=float))
        return cls(z + c, z.copy(), z.copy())

    @classmethod
    def variable(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x, np.ones_like(x), np.zeros_like(x))

    def _coerce(self, other):
        if isinstance(other, Jet2):
            return other
        return Jet2.const(other, self.value)

    def __add__(self, other):
        o = self._coerce(other)
        return Jet2(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Jet2(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet2(-self.value, -self.d1, -self.d2)

    def __mul__(self, other):
        o = self._coerce(other)
        return Jet2(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if np.any(o.value == 0):
            raise EvalDomainError("division by zero")
        return self * o._reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def _reciprocal(self):
        v = self.value
        return self._chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def _chain(self, f, df, d2f):
        # (f o g)'' = f''(g) g'^2 + f'(g) g''
        return Jet2(f, df * self.d1, d2f * self.d1**2 + df * self.d2)

    def __pow__(self, n):
        n = float(n)
        v = np.asarray(self.value, dtype=float)
        if n == 0.0:
            return Jet2.const(1.0, v)
        integral = n.is_integer()
        if not integral and np.any(v < 0):
            raise EvalDomainError(f"negative base raised to non-integer power {n}")
        if np.any(v == 0) and (n < 2 and n != 1):
            raise EvalDomainError(f"0 raised to power {n} has no second-order jet")
        with np.errstate(divide="ignore", invalid="ignore"):
            f = v**n
            df = n * v ** (n - 1) if n != 1 else np.ones_like(v)
            d2f = n * (n - 1) * v ** (n - 2) if n not in (1.0, 2.0) else np.full_like(v, n * (n - 1))
        return self._chain(f, df, d2f)


def jexp(a: Jet2) -> Jet2:
    with np.errstate(over="ignore"):
        e = np.exp(a.value)
    return a._chain(e, e, e)


def jlog(a: Jet2) -> Jet2:
    v = np.asarray(a.value)
    if np.any(v <= 0):
        raise EvalDomainError("log of a nonpositive argument")
    return a._chain(np.log(v), 1.0 / v, -1.0 / v**2)


def jsqrt(a: Jet2) -> Jet2:
    v = np.asarray(a.value)
    if np.any(v <= 0):
        # sqrt(0) exists but its derivative does not
        raise EvalDomainError("sqrt needs a positive argument for derivatives")
    s = np.sqrt(v)
    return a._chain(s, 0.5 / s, -0.25 / (s * v))


def jcos(a: Jet2) -> Jet2:
    c = np.cos(a.value)
    return a._chain(c, -np.sin(a.value), -c)


def jacos(a: Jet2) -> Jet2:
    v = np.asarray(a.value)
    if np.any(np.abs(v) >= 1):
        raise EvalDomainError("acos needs an argument in (-1, 1) for derivatives")
    w = 1.0 - v**2
    return a._chain(np.arccos(v), -1.0 / np.sqrt(w), -v / w**1.5)


_FUNCS = {"exp": jexp, "log": jlog, "sqrt": jsqrt, "cos": jcos, "acos": jacos}


def _walk(e, x):
    if isinstance(e, Var):
        return x
    if isinstance(e, Num):
        return Jet2.const(e.value, x.value)
    if isinstance(e, Neg):
        return -_walk(e.arg, x)
    if isinstance(e, Pow):
        return _walk(e.base, x) ** e.exponent
    if isinstance(e, Call):
        return _FUNCS[e.func](_walk(e.arg, x))
    if isinstance(e, BinOp):
        a, b = _walk(e.left, x), _walk(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    raise TypeError(f"not an expression node: {e!r}")


def eval_jet(e: Expr, x) -> Jet2:
    """Evaluate ``e`` and its first two derivatives at ``x``.

    ``x`` may be a scalar or an array; the result components have the same
    shape.  Raises :class:`EvalDomainError` instead of returning non-finite
    values.
    """
    scalar = np.ndim(x) == 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        j = _walk(e, Jet2.variable(x))
    parts = [np.asarray(p, dtype=float) for p in (j.value, j.d1, j.d2)]
    for p in parts:
        if not np.all(np.isfinite(p)):
            raise EvalDomainError("expression is not finite (with two derivatives) at the query point")
    if scalar:
        return Jet2(*(float(p) for p in parts))
    return Jet2(*parts)
