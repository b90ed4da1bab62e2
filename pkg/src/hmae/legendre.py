"""Legendre transforms: analytic (damped Newton on the gradient map) and
discrete (lower-hull sweep over sampled data)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import EvalDomainError, GridMismatch, InputError, NoConvergence
from .funcspec import ConvexOracle


@dataclass(frozen=True)
class SampledFunction1D:
    """Piecewise-linear function through ``(xs[i], vals[i])``.

    Without tail slopes the function is ``+inf`` outside
    ``[xs[0], xs[-1]]``; with ``left_slope``/``right_slope`` it is extended
    affinely to the whole line (the shape of a discrete conjugate).
    """

    xs: np.ndarray
    vals: np.ndarray
    left_slope: Optional[float] = None
    right_slope: Optional[float] = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        vals = np.asarray(self.vals, dtype=float).reshape(-1)
        if xs.size == 0:
            raise InputError("a sampled function needs at least one point")
        if xs.shape != vals.shape:
            raise InputError(f"xs and vals differ in length ({xs.size} vs {vals.size})")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(vals))):
            raise InputError("sampled values must be finite")
        if np.any(np.diff(xs) <= 0):
            raise InputError("abscissae must be strictly increasing")
        if (self.left_slope is None) != (self.right_slope is None):
            raise InputError("give both tail slopes or neither")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "vals", vals)

    def __len__(self):
        return self.xs.size

    @property
    def has_tails(self) -> bool:
        return self.left_slope is not None

    @property
    def step(self) -> float:
        return float(np.diff(self.xs).max()) if self.xs.size > 1 else 0.0

    def slopes(self) -> np.ndarray:
        return np.diff(self.vals) / np.diff(self.xs)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.interp(y, self.xs, self.vals)
        below, above = y < self.xs[0], y > self.xs[-1]
        if self.has_tails:
            out = np.where(below, self.vals[0] + self.left_slope * (y - self.xs[0]), out)
            out = np.where(above, self.vals[-1] + self.right_slope * (y - self.xs[-1]), out)
        else:
            out = np.where(below | above, np.inf, out)
        return out if out.ndim else float(out)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(self.xs, self.vals):
            w.writerow([repr(float(x)), repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "SampledFunction1D":
        """Read ``x,value`` CSV from a path or from CSV text."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text(encoding="utf-8")
        rows = list(csv.reader(io.StringIO(source)))
        if not rows or [c.strip() for c in rows[0]] != ["x", "value"]:
            raise InputError("CSV header must be 'x,value'")
        try:
            data = np.array([[float(a), float(b)] for a, b in (r for r in rows[1:] if r)])
        except ValueError as exc:
            raise InputError(f"bad CSV row: {exc}") from exc
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class ConjugatePoint:
    y: np.ndarray
    value: float
    argmax: np.ndarray
    interior: bool
    iterations: int = 0


def lower_hull(xs, vals):
    """Indices of the lower convex hull vertices of points sorted by x.

    Andrew's monotone chain restricted to the lower chain: one pass, O(n).
    Collinear points are dropped.
    """
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    hull = []
    for i in range(xs.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (vals[i] - vals[a]) - (vals[b] - vals[a]) * (xs[i] - xs[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def convexify(f: SampledFunction1D) -> SampledFunction1D:
    """Convex envelope of ``f`` evaluated back on ``f.xs``."""
    idx = lower_hull(f.xs, f.vals)
    return SampledFunction1D(f.xs, np.interp(f.xs, f.xs[idx], f.vals[idx]))


def _strictly_increasing(xs, vals, rel: float = 1e-12):
    # abscissae closer than rel * scale are rounding duplicates
    gap = rel * max(1.0, float(np.abs(xs).max())) if xs.size else 0.0
    keep = [0]
    for i in range(1, xs.size):
        if xs[i] - xs[keep[-1]] > gap:
            keep.append(i)
    return xs[keep], vals[keep]


def conjugate_discrete(f: SampledFunction1D) -> SampledFunction1D:
    """Exact Legendre transform of the piecewise-linear function ``f``.

    For compact data the result is indexed by the hull edge slopes (its
    breakpoints) and carries tail slopes equal to the end abscissae.  For
    data with tails (itself a conjugate) the result is compact, supported
    on ``[left_slope, right_slope]``.  Work is linear in ``len(f)``.
    """
    if f.has_tails:
        return _conjugate_tailed(f)
    idx = lower_hull(f.xs, f.vals)
    hx, hv = f.xs[idx], f.vals[idx]
    if hx.size == 1:
        return SampledFunction1D([0.0], [-hv[0]], float(hx[0]), float(hx[0]))
    sigma = np.diff(hv) / np.diff(hx)
    star = sigma * hx[:-1] - hv[:-1]
    sigma, star = _strictly_increasing(sigma, star)
    return SampledFunction1D(sigma, star, float(hx[0]), float(hx[-1]))


def _conjugate_tailed(g: SampledFunction1D) -> SampledFunction1D:
    idx = lower_hull(g.xs, g.vals)
    ys, gv = g.xs[idx], g.vals[idx]
    a, b = float(g.left_slope), float(g.right_slope)
    inner = np.diff(gv) / np.diff(ys)
    scale = max(1.0, abs(a), abs(b))
    if inner.size and (a > inner[0] + 1e-9 * scale or b < inner[-1] - 1e-9 * scale):
        raise InputError("tail slopes are incompatible with a convex function")
    slopes = np.concatenate([[a], inner, [b]])
    anchors = np.concatenate([[0], np.arange(inner.size), [ys.size - 1]])
    vals = slopes * ys[anchors] - gv[anchors]
    xs, vals = _strictly_increasing(slopes, vals)
    return SampledFunction1D(xs, vals)


def biconjugate(f: SampledFunction1D) -> SampledFunction1D:
    """``f**`` resampled on ``f.xs``; equals the convex envelope of ``f``."""
    return resample(conjugate_discrete(conjugate_discrete(f)), f.xs)


def resample(f: SampledFunction1D, xs) -> SampledFunction1D:
    xs = np.asarray(xs, dtype=float)
    return SampledFunction1D(xs, f(xs))


def resample_uniform(f: SampledFunction1D, n: int) -> SampledFunction1D:
    """Evaluate ``f`` on ``n`` equispaced points spanning its breakpoints."""
    return resample(f, np.linspace(f.xs[0], f.xs[-1], n))


def sample_oracle(u: ConvexOracle, xs) -> SampledFunction1D:
    if u.dim != 1:
        raise InputError("only one-dimensional oracles can be sampled")
    xs = np.asarray(xs, dtype=float)
    return SampledFunction1D(xs, u.jet1d(xs)[0])


def _boundary_value(u, x, y):
    try:
        return float(x @ y - u.value(x))
    except EvalDomainError:
        return math.nan


def conjugate_analytic(
    u: ConvexOracle,
    y,
    x0=None,
    tol: float = 1e-12,
    max_iter: int = 100,
    boundary_eps: float = 1e-9,
) -> ConjugatePoint:
    """``u*(y) = sup_x {x.y - u(x)}`` for a smooth convex oracle.

    Solves ``grad u(x) = y`` by Newton's method with the oracle Hessian,
    halving the step until the residual norm decreases and the iterate stays
    in the open box.  When ``y`` lies outside the open gradient image the
    supremum sits on the boundary; it is returned with ``interior=False``.
    Raises :class:`NoConvergence` after ``max_iter`` steps.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (u.dim,):
        raise InputError(f"slope must have dimension {u.dim}")
    lo, hi = u.bounds

    if u.dim == 1:
        for end, outward in ((hi[0], 1.0), (lo[0], -1.0)):
            if not np.isfinite(end):
                continue
            try:
                g_end = u.grad([end])[0]
            except EvalDomainError:
                continue
            if outward * (y[0] - g_end) >= 0:
                xb = np.array([end])
                return ConjugatePoint(y, _boundary_value(u, xb, y), xb, False, 0)

    x = u.center() if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if not u.contains(x):
        raise InputError("starting point must be interior to the domain")
    r = u.grad(x) - y
    rn = np.linalg.norm(r)
    scale = max(1.0, float(np.linalg.norm(y)))
    for it in range(1, max_iter + 1):
        if rn <= tol * scale:
            return ConjugatePoint(y, float(x @ y - u.value(x)), x, True, it - 1)
        step = -np.linalg.solve(u.hess(x), r)
        alpha = _max_step(x, step, lo, hi)
        accepted = False
        for _ in range(60):
            xn = x + alpha * step
            if u.contains(xn):
                rn_new = np.linalg.norm(u.grad(xn) - y)
                if rn_new < rn:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
        x = xn
        r = u.grad(x) - y
        rn = rn_new
        if _near_boundary(x, lo, hi, boundary_eps):
            return _boundary_sup(u, y, x)
    if rn <= 1e-10 * scale:
        return ConjugatePoint(y, float(x @ y - u.value(x)), x, True, max_iter)
    if _near_boundary(x, lo, hi, 1e-6):
        return _boundary_sup(u, y, x)
    raise NoConvergence(
        f"Newton for grad u(x) = y stalled with residual {rn:.3g}", iterations=max_iter, residual=float(rn)
    )


def _max_step(x, step, lo, hi, fraction=0.99):
    alpha = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(step > 0, (hi - x) / step, np.inf)
        down = np.where(step < 0, (lo - x) / step, np.inf)
    limit = float(np.min(np.concatenate([up, down])))
    if np.isfinite(limit) and limit <= 1.0:
        alpha = fraction * limit
    return alpha


def _near_boundary(x, lo, hi, eps):
    return bool(np.any(x - lo < eps) or np.any(hi - x < eps))


def _boundary_sup(u, y, x_start):
    # the supremum is attained on the closed box boundary; solve the
    # box-constrained concave maximization from the stalled iterate
    lo, hi = u.bounds
    bounds = [(a if np.isfinite(a) else None, b if np.isfinite(b) else None) for a, b in zip(lo, hi)]

    def neg(x):
        return u.value(x) - x @ y, u.grad(x) - y

    res = optimize.minimize(neg, x_start, jac=True, method="L-BFGS-B", bounds=bounds,
                            options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 1000})
    x = np.asarray(res.x, dtype=float)
    return ConjugatePoint(y, float(-res.fun), x, False, int(res.nit))


def conjugate_hessian_check(u: ConvexOracle, y, h: float = 1e-3) -> float:
    """``max |FD Hessian of u* at y - (hess u(x(y)))^{-1}|``.

    The finite-difference Hessian uses central second differences of
    :func:`conjugate_analytic` values with step ``h``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    base = conjugate_analytic(u, y)
    n = u.dim

    def f(p):
        return conjugate_analytic(u, p, x0=base.argmax).value

    H = np.empty((n, n))
    f0 = base.value
    E = np.eye(n) * h
    for i in range(n):
        H[i, i] = (f(y + E[i]) - 2 * f0 + f(y - E[i])) / h**2
        for j in range(i):
            H[i, j] = H[j, i] = (
                f(y + E[i] + E[j]) - f(y + E[i] - E[j]) - f(y - E[i] + E[j]) + f(y - E[i] - E[j])
            ) / (4 * h**2)
    exact = np.linalg.inv(u.hess(base.argmax))
    return float(np.abs(H - exact).max())


def young_gap(u: ConvexOracle, x, y, ustar: float) -> float:
    """``u(x) + u*(y) - x.y``; nonnegative for every pair."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(u.value(x) + ustar - x @ y)


def require_common_grid(f0: SampledFunction1D, f1: SampledFunction1D):
    if f0.xs.shape != f1.xs.shape or not np.array_equal(f0.xs, f1.xs):
        raise GridMismatch("sampled functions must share their abscissae")
