"""Convex function oracles: construction from expressions, a built-in
catalog of n-dimensional families, and JSON function-spec files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import BadParams, EvalDomainError, NotConvexError, UnsupportedFamily
from .expr import Expr, parse_expr, to_text
from .jet import eval_jet

STRICTNESS = (None, "interior", "closure")


@dataclass(frozen=True)
class ConvexOracle:
    """A convex function on a box, with exact gradient and Hessian.

    ``lower``/``upper`` give the per-axis bounds of the box (``±inf``
    allowed).  The point API (:meth:`value`, :meth:`grad`, :meth:`hess`)
    takes a vector of length ``dim``; one-dimensional oracles additionally
    expose :meth:`jet1d`, vectorized over an array of abscissae.
    """

    dim: int
    lower: tuple
    upper: tuple
    _value: Callable = field(repr=False)
    _grad: Callable = field(repr=False)
    _hess: Callable = field(repr=False)
    strictness: Optional[str] = None
    label: str = ""
    _jet1d: Optional[Callable] = field(default=None, repr=False)
    expr: Optional[Expr] = field(default=None, repr=False, compare=False)

    def value(self, x) -> float:
        return float(self._value(self._point(x)))

    def grad(self, x) -> np.ndarray:
        return np.asarray(self._grad(self._point(x)), dtype=float).reshape(self.dim)

    def hess(self, x) -> np.ndarray:
        return np.asarray(self._hess(self._point(x)), dtype=float).reshape(self.dim, self.dim)

    def jet1d(self, xs):
        """Return ``(u, u', u'')`` at every abscissa of ``xs`` (1-D only)."""
        if self.dim != 1:
            raise ValueError("jet1d is only defined for one-dimensional oracles")
        xs = np.asarray(xs, dtype=float)
        if self._jet1d is not None:
            return self._jet1d(xs)
        flat = xs.ravel()
        u = np.array([self.value([v]) for v in flat]).reshape(xs.shape)
        du = np.array([self.grad([v])[0] for v in flat]).reshape(xs.shape)
        d2u = np.array([self.hess([v])[0, 0] for v in flat]).reshape(xs.shape)
        return u, du, d2u

    def _point(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}, got shape {x.shape}")
        return x

    @property
    def bounds(self):
        return np.array(self.lower, dtype=float), np.array(self.upper, dtype=float)

    @property
    def bounded(self) -> bool:
        lo, hi = self.bounds
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def contains(self, x, closed=False) -> bool:
        lo, hi = self.bounds
        x = self._point(x)
        if closed:
            return bool(np.all(x >= lo) and np.all(x <= hi))
        return bool(np.all(x > lo) and np.all(x < hi))

    def center(self) -> np.ndarray:
        """A canonical interior point (box midpoint; one unit inside a
        half-infinite side; the origin on a doubly infinite axis)."""
        lo, hi = self.bounds
        c = np.zeros(self.dim)
        for i in range(self.dim):
            a, b = lo[i], hi[i]
            if np.isfinite(a) and np.isfinite(b):
                c[i] = 0.5 * (a + b)
            elif np.isfinite(a):
                c[i] = a + 1.0
            elif np.isfinite(b):
                c[i] = b - 1.0
        return c


def _sample_axis(lo, hi, samples, window):
    if not np.isfinite(lo) and not np.isfinite(hi):
        lo, hi = -window, window
    elif not np.isfinite(lo):
        lo = hi - window
    elif not np.isfinite(hi):
        hi = lo + window
    return np.linspace(lo, hi, samples)


def _normalize_domain(domain):
    lo, hi = (float(v) for v in domain)
    if not lo < hi:
        raise BadParams(f"domain must satisfy lower < upper, got [{lo}, {hi}]")
    return lo, hi


def oracle_from_expr(
    e,
    domain=(-math.inf, math.inf),
    strictness: Optional[str] = None,
    samples: int = 10001,
    tol: float = 1e-12,
    window: float = 50.0,
    label: str = "",
) -> ConvexOracle:
    """Build a one-dimensional oracle from an expression.

    Convexity is certified by sampling ``u''`` at ``samples`` points of the
    open interval (a ``window``-long stretch of an infinite side); values
    below ``-tol`` reject.  With ``strictness="interior"`` the samples must
    also satisfy ``u'' > 0``;
    ``"closure"`` extends that requirement to the finite endpoints.
    """
    if isinstance(e, str):
        e = parse_expr(e)
    if strictness not in STRICTNESS:
        raise BadParams(f"strictness must be one of {STRICTNESS}")
    lo, hi = _normalize_domain(domain)

    xs = _sample_axis(lo, hi, samples, window)
    probe = xs[1:-1] if np.isfinite(lo) or np.isfinite(hi) else xs
    probe = probe[(probe > lo) & (probe < hi)]
    try:
        d2 = eval_jet(e, probe).d2
    except EvalDomainError as exc:
        raise BadParams(f"expression is not twice differentiable on ({lo}, {hi}): {exc}") from exc
    bad = np.flatnonzero(d2 < -tol)
    if bad.size:
        w = float(probe[bad[0]])
        raise NotConvexError(f"u''({w:.6g}) = {d2[bad[0]]:.3g} < 0", witness=w)
    if strictness is not None:
        flat = np.flatnonzero(d2 <= 0)
        if flat.size:
            w = float(probe[flat[0]])
            raise NotConvexError(f"not strictly convex: u''({w:.6g}) = {d2[flat[0]]:.3g}", witness=w)
        if strictness == "closure":
            ends = [v for v in (lo, hi) if np.isfinite(v)]
            try:
                d2_ends = eval_jet(e, np.array(ends)).d2 if ends else np.array([])
            except EvalDomainError as exc:
                raise BadParams(f"expression undefined at a domain endpoint: {exc}") from exc
            for v, d in zip(ends, d2_ends):
                if d <= 0:
                    raise NotConvexError(f"not strictly convex up to the boundary: u''({v}) = {d:.3g}", witness=v)

    def jet1d(xs):
        j = eval_jet(e, xs)
        return j.value, j.d1, j.d2

    return ConvexOracle(
        dim=1,
        lower=(lo,),
        upper=(hi,),
        _value=lambda x: eval_jet(e, float(x[0])).value,
        _grad=lambda x: [eval_jet(e, float(x[0])).d1],
        _hess=lambda x: [[eval_jet(e, float(x[0])).d2]],
        strictness=strictness,
        label=label or to_text(e),
        _jet1d=jet1d,
        expr=e,
    )


def _box(domain, dim):
    if domain is None:
        return (-math.inf,) * dim, (math.inf,) * dim
    arr = np.asarray(domain, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (dim, 1))
    if arr.shape != (dim, 2):
        raise BadParams(f"domain must be [lo, hi] or a list of {dim} such pairs")
    if np.any(arr[:, 0] >= arr[:, 1]):
        raise BadParams("every domain axis needs lower < upper")
    return tuple(arr[:, 0].tolist()), tuple(arr[:, 1].tolist())


def _quadratic_form(params, domain, strictness, label):
    try:
        A = np.atleast_2d(np.asarray(params["A"], dtype=float))
    except KeyError:
        raise BadParams("quadratic-form needs parameter 'A'") from None
    n = A.shape[0]
    if A.shape != (n, n):
        raise BadParams("A must be square")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise BadParams("A must be symmetric")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise BadParams("A must be positive definite")
    c = np.asarray(params.get("center", np.zeros(n)), dtype=float).reshape(n)
    off = float(params.get("offset", 0.0))
    A = 0.5 * (A + A.T)
    lo, hi = _box(domain, n)

    def jet1d(xs):
        d = xs - c[0]
        a = A[0, 0]
        return 0.5 * a * d**2 + off, a * d, np.full_like(xs, a)

    return ConvexOracle(
        dim=n, lower=lo, upper=hi,
        _value=lambda x: 0.5 * (x - c) @ A @ (x - c) + off,
        _grad=lambda x: A @ (x - c),
        _hess=lambda x: A,
        strictness=strictness, label=label or "quadratic-form",
        _jet1d=jet1d if n == 1 else None,
    )


def _exp_affine(params, domain, strictness, label):
    terms = params.get("terms")
    if not terms:
        raise BadParams("exp-affine needs a nonempty 'terms' list")
    cs, ks = [], []
    for t in terms:
        if isinstance(t, dict):
            c, k = t.get("c"), t.get("k")
        else:
            c, k = t
        cs.append(float(c))
        ks.append(np.atleast_1d(np.asarray(k, dtype=float)))
    n = ks[0].size
    if any(k.size != n for k in ks):
        raise BadParams("all exponent vectors k must have the same length")
    cs = np.array(cs)
    if np.any(cs <= 0):
        raise BadParams("exp-affine coefficients must be positive")
    K = np.vstack(ks)
    a = np.asarray(params.get("linear", np.zeros(n)), dtype=float).reshape(n)
    b = float(params.get("constant", 0.0))
    lo, hi = _box(domain, n)

    def value(x):
        return cs @ np.exp(K @ x) + a @ x + b

    def grad(x):
        return (cs * np.exp(K @ x)) @ K + a

    def hess(x):
        w = cs * np.exp(K @ x)
        return (K.T * w) @ K

    def jet1d(xs):
        e = cs[:, None] * np.exp(np.outer(K[:, 0], xs.ravel()))
        k = K[:, 0][:, None]
        shape = xs.shape
        return (
            (e.sum(0) + a[0] * xs.ravel() + b).reshape(shape),
            ((e * k).sum(0) + a[0]).reshape(shape),
            (e * k**2).sum(0).reshape(shape),
        )

    return ConvexOracle(
        dim=n, lower=lo, upper=hi, _value=value, _grad=grad, _hess=hess,
        strictness=strictness, label=label or "exp-affine",
        _jet1d=jet1d if n == 1 else None,
    )


def _separable_sum(params, domain, strictness, label):
    parts = params.get("parts") if isinstance(params, dict) else params
    if not parts:
        raise BadParams("separable-sum needs a nonempty 'parts' list")
    oracles = []
    for p in parts:
        if isinstance(p, ConvexOracle):
            o = p
        elif isinstance(p, dict):
            o = oracle_from_spec(p)
        else:
            o = oracle_from_expr(p, domain=(-math.inf, math.inf) if domain is None else domain)
        if o.dim != 1:
            raise BadParams("separable-sum parts must be one-dimensional")
        oracles.append(o)
    n = len(oracles)
    lo = tuple(o.lower[0] for o in oracles)
    hi = tuple(o.upper[0] for o in oracles)
    if domain is not None:
        lo, hi = _box(domain, n)

    def value(x):
        return sum(o.value([x[i]]) for i, o in enumerate(oracles))

    def grad(x):
        return np.array([o.grad([x[i]])[0] for i, o in enumerate(oracles)])

    def hess(x):
        return np.diag([o.hess([x[i]])[0, 0] for i, o in enumerate(oracles)])

    return ConvexOracle(
        dim=n, lower=lo, upper=hi, _value=value, _grad=grad, _hess=hess,
        strictness=strictness, label=label or "separable-sum",
        _jet1d=oracles[0]._jet1d if n == 1 else None,
    )


_FAMILIES = {
    "quadratic-form": _quadratic_form,
    "exp-affine": _exp_affine,
    "separable-sum": _separable_sum,
}


def builtin_oracle(family: str, params, domain=None, strictness=None, label="") -> ConvexOracle:
    """Construct an oracle from the built-in catalog.

    Families
    --------
    ``quadratic-form``
        ``0.5 (x-center)^T A (x-center) + offset`` with ``A`` SPD.
    ``exp-affine``
        ``sum_i c_i exp(k_i . x) + linear . x + constant`` with ``c_i > 0``;
        ``params["terms"]`` is a list of ``{"c": c_i, "k": k_i}``.
    ``separable-sum``
        ``sum_i f_i(x_i)`` for one-dimensional parts given as expressions,
        spec dicts or oracles in ``params["parts"]``.
    """
    try:
        make = _FAMILIES[family]
    except KeyError:
        raise UnsupportedFamily(f"unknown family {family!r}; known: {sorted(_FAMILIES)}") from None
    if strictness not in STRICTNESS:
        raise BadParams(f"strictness must be one of {STRICTNESS}")
    return make(params, domain, strictness, label)


def _domain_value(v):
    if v is None:
        return None
    if isinstance(v, str):
        return float(v.replace("Infinity", "inf"))
    return float(v)


def _parse_domain(raw, default_infinite_sign=None):
    if raw is None:
        return None
    if isinstance(raw, (list, tuple)) and len(raw) == 2 and not isinstance(raw[0], (list, tuple)):
        lo, hi = _domain_value(raw[0]), _domain_value(raw[1])
        return (-math.inf if lo is None else lo, math.inf if hi is None else hi)
    return [_parse_domain(r) for r in raw]


def oracle_from_spec(spec) -> ConvexOracle:
    """Build an oracle from a function-spec mapping.

    ``{"kind": "expr", "formula": "...", "domain": [lo, hi]}`` or
    ``{"kind": "builtin", "family": "...", "params": {...}, "domain": ...}``.
    Infinite bounds may be written as ``null``, ``"inf"``/``"-inf"`` or the
    JSON extensions ``Infinity``/``-Infinity``.
    """
    if not isinstance(spec, dict):
        raise BadParams("function spec must be a JSON object")
    kind = spec.get("kind")
    strictness = spec.get("strictness")
    label = spec.get("label", "")
    domain = _parse_domain(spec.get("domain"))
    if kind == "expr":
        if "formula" not in spec:
            raise BadParams("expr spec needs 'formula'")
        kwargs = {}
        if "samples" in spec:
            kwargs["samples"] = int(spec["samples"])
        return oracle_from_expr(
            spec["formula"], domain if domain is not None else (-math.inf, math.inf),
            strictness=strictness, label=label, **kwargs,
        )
    if kind == "builtin":
        if "family" not in spec:
            raise BadParams("builtin spec needs 'family'")
        return builtin_oracle(spec["family"], spec.get("params", {}), domain, strictness, label)
    raise BadParams(f"spec kind must be 'expr' or 'builtin', got {kind!r}")


def load_spec(path) -> ConvexOracle:
    """Read a function-spec JSON file and build its oracle."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadParams(f"{path}: invalid JSON: {exc}") from exc
    return oracle_from_spec(spec)


def sample_points(oracle: ConvexOracle, rng: np.random.Generator, count: int, window: float = 10.0):
    """Uniform random interior points of the oracle's box (infinite sides
    truncated to ``window``)."""
    lo, hi = oracle.bounds
    a = np.empty(oracle.dim)
    b = np.empty(oracle.dim)
    for i in range(oracle.dim):
        a[i], b[i] = _sample_axis(lo[i], hi[i], 2, window)
    return rng.uniform(a, b, size=(count, oracle.dim))


def check_monotone_gradient(oracle: ConvexOracle, points: Sequence) -> float:
    """Smallest value of ``(grad a - grad b).(a - b)`` over consecutive pairs
    of ``points``; nonnegative for convex oracles."""
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    worst = math.inf
    for a, b in zip(pts[:-1], pts[1:]):
        worst = min(worst, float((oracle.grad(a) - oracle.grad(b)) @ (a - b)))
    return worst
