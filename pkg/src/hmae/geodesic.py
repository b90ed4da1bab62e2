"""Weak geodesics between convex functions.

A point ``(x, t)`` of ``U x (0, 1)`` lies on a segment from ``(xi, 0)`` to
``(eta, 1)`` along which the geodesic is affine, with
``(1-t) xi + t eta = x`` and ``Du0(xi) = Du1(eta) = s``.  Writing
``xi = x - t d`` and ``eta = x + (1-t) d``, the segment direction ``d``
minimizes the convex function ``(1-t) u0(xi) + t u1(eta)``, whose gradient
in ``d`` is ``t (1-t) (Du1(eta) - Du0(xi))``.  The solvers below work in
``d``; the Jacobian ``(1-t) D2u1(eta) + t D2u0(xi)`` is SPD and stays well
conditioned near both lids.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DimensionUnsupported,
    EvalDomainError,
    InputError,
    NewtonDivergence,
)
from .funcspec import ConvexOracle
from .legendre import (
    SampledFunction1D,
    _conjugate_tailed,
    conjugate_discrete,
    require_common_grid,
)

T_MIN = 1e-9
T_MAX = 1.0 - 1e-9

INTERIOR = "interior"
BOUNDARY = "boundary-contact"
FAILED = "failed"
_STATUS = (INTERIOR, BOUNDARY, FAILED)


def clamp_t(t):
    return np.clip(t, T_MIN, T_MAX)


@dataclass(frozen=True)
class GeodesicProblem:
    """Lid data ``u0`` (at ``t = 0``) and ``u1`` (at ``t = 1``) on a common box.

    With ``dirichlet=True`` both functions must vanish on the finite part of
    the box boundary (checked at sampled points to ``1e-8``) and the lateral
    value of the geodesic is 0.  With ``dirichlet=False`` the lateral data is
    the affine interpolation of the lid values, which is what the segment
    formulas produce.
    """

    u0: ConvexOracle
    u1: ConvexOracle
    dirichlet: bool = True
    labels: tuple = ("u0", "u1")
    boundary_tol: float = 1e-8

    def __post_init__(self):
        if self.u0.dim != self.u1.dim:
            raise InputError("u0 and u1 must have the same dimension")
        if self.u0.lower != self.u1.lower or self.u0.upper != self.u1.upper:
            raise InputError("u0 and u1 must share their domain")
        if self.dirichlet:
            for u, name in zip((self.u0, self.u1), self.labels):
                for p in boundary_samples(u):
                    try:
                        v = u.value(p)
                    except EvalDomainError:
                        continue
                    if abs(v) > self.boundary_tol:
                        raise InputError(f"{name} does not vanish on the boundary: {name}({p.tolist()}) = {v:.3g}")

    @property
    def dim(self) -> int:
        return self.u0.dim

    @property
    def bounds(self):
        return self.u0.bounds


def boundary_samples(u: ConvexOracle, per_face: int = 5, window: float = 10.0):
    """Points on the finite faces of the oracle's box."""
    lo, hi = u.bounds
    if u.dim == 1:
        return [np.array([v]) for v in (lo[0], hi[0]) if np.isfinite(v)]
    rng = np.random.default_rng(0)
    a = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi - window, -window))
    b = np.where(np.isfinite(hi), hi, a + window)
    pts = []
    for i in range(u.dim):
        for face in (lo[i], hi[i]):
            if not np.isfinite(face):
                continue
            for _ in range(per_face):
                p = rng.uniform(a, b)
                p[i] = face
                pts.append(p)
    return pts


@dataclass(frozen=True)
class EndpointSolution:
    x: np.ndarray
    t: float
    xi: np.ndarray
    eta: np.ndarray
    s: np.ndarray
    status: str
    residual: float = 0.0
    iterations: int = 0
    # per-coordinate flags: which endpoint sits on the lateral boundary
    xi_on_boundary: bool = False
    eta_on_boundary: bool = False


def _safe_jet(u: ConvexOracle, xs):
    """``u.jet1d`` that tolerates points where the expression has no
    second-order jet (e.g. the boundary of a log): such points are nudged
    inside the domain by a relative ``1e-12``."""
    try:
        return u.jet1d(xs)
    except EvalDomainError:
        pass
    lo, hi = u.lower[0], u.upper[0]
    width = (hi - lo) if np.isfinite(hi - lo) else 1.0
    out = [np.empty_like(xs, dtype=float) for _ in range(3)]
    for k, x in np.ndenumerate(xs):
        try:
            vals = u.jet1d(np.array([x]))
        except EvalDomainError:
            xn = min(max(x, lo + 1e-12 * width), hi - 1e-12 * width)
            vals = u.jet1d(np.array([xn]))
        for o, v in zip(out, vals):
            o[k] = v[0]
    return tuple(out)


@dataclass
class Batch1D:
    """Vectorized endpoint data for many ``(x, t)`` pairs of a 1-D problem."""

    x: np.ndarray
    t: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    s: np.ndarray
    status: np.ndarray  # 0 interior, 1 boundary-contact, 2 failed
    residual: np.ndarray
    xi_on_boundary: np.ndarray
    eta_on_boundary: np.ndarray
    iterations: int = 0

    def status_names(self):
        return np.array(_STATUS, dtype=object)[self.status]


def solve_endpoints_1d(p: GeodesicProblem, x, t, tol: float = 1e-13, max_iter: int = 200) -> Batch1D:
    """Endpoint solve for arrays of points of a one-dimensional problem.

    Inside the feasible interval of ``d`` (both endpoints in the closed
    domain) the residual ``F(d) = u1'(eta) - u0'(xi)`` is nondecreasing.
    If it does not change sign there, the minimizer sits at an end of the
    interval: one endpoint lies on the lateral boundary and the status is
    boundary-contact.  Otherwise a bracketed Newton iteration (bisection
    fallback) finds the root.
    """
    if p.dim != 1:
        raise InputError("solve_endpoints_1d needs a one-dimensional problem")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    shape = x.shape
    x, t = x.ravel().copy(), t.ravel().copy()
    if np.any((t <= 0) | (t >= 1)):
        raise InputError("t must lie strictly between 0 and 1; clamp with clamp_t")
    lo, hi = p.u0.lower[0], p.u0.upper[0]
    if np.any((x <= lo) | (x >= hi)):
        raise InputError("x must be interior to the domain")
    u0, u1 = p.u0, p.u1

    with np.errstate(invalid="ignore"):
        dl = np.maximum((x - hi) / t, (lo - x) / (1 - t))
        dh = np.minimum((x - lo) / t, (hi - x) / (1 - t))
    xi_at_hi = (x - hi) / t >= (lo - x) / (1 - t)
    xi_at_lo = (x - lo) / t <= (hi - x) / (1 - t)

    m = x.size
    status = np.zeros(m, dtype=int)
    d = np.zeros(m)
    xi_b = np.zeros(m, dtype=bool)
    eta_b = np.zeros(m, dtype=bool)

    def residual(dd, idx):
        xi = x[idx] - t[idx] * dd
        eta = x[idx] + (1 - t[idx]) * dd
        _, g0, h0 = _safe_jet(u0, xi)
        _, g1, h1 = _safe_jet(u1, eta)
        return g1 - g0, (1 - t[idx]) * h1 + t[idx] * h0, g0

    low_contact = np.zeros(m, dtype=bool)
    high_contact = np.zeros(m, dtype=bool)
    fin = np.isfinite(dl)
    if fin.any():
        idx = np.flatnonzero(fin)
        F, _, _ = residual(dl[idx], idx)
        low_contact[idx] = F >= 0
    fin = np.isfinite(dh) & ~low_contact
    if fin.any():
        idx = np.flatnonzero(fin)
        F, _, _ = residual(dh[idx], idx)
        high_contact[idx] = F <= 0
    d[low_contact] = dl[low_contact]
    d[high_contact] = dh[high_contact]
    status[low_contact | high_contact] = 1
    xi_b[low_contact] = xi_at_hi[low_contact]
    eta_b[low_contact] = ~xi_at_hi[low_contact]
    xi_b[high_contact] = xi_at_lo[high_contact]
    eta_b[high_contact] = ~xi_at_lo[high_contact]

    active = np.flatnonzero(status == 0)
    a, b = dl.copy(), dh.copy()
    res = np.zeros(m)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if active.size == 0:
            break
        F, J, g0 = residual(d[active], active)
        g1 = F + g0
        res[active] = np.abs(F)
        neg, pos = F < 0, F > 0
        a[active[neg]] = d[active[neg]]
        b[active[pos]] = d[active[pos]]
        # relative test: gradients can be tiny on unbounded domains
        done = np.abs(F) <= tol * np.maximum(np.abs(g0), np.abs(g1))
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = d[active] - F / J
        aa, bb = a[active], b[active]
        inside = (cand > aa) & (cand < bb) & np.isfinite(cand)
        both = np.isfinite(aa) & np.isfinite(bb)
        mid = 0.5 * (aa + bb)
        # outside the bracket: bisect a finite bracket, otherwise take a
        # bounded move in the Newton direction
        far = d[active] + np.sign(-F) * np.maximum(1.0, 2.0 * np.abs(d[active]))
        new = np.where(inside, cand, np.where(both, mid, far))
        stalled = np.abs(new - d[active]) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(d[active]))
        d[active] = np.where(done, d[active], new)
        active = active[~(done | stalled)]
    if active.size:
        status[active] = 2

    xi = x - t * d
    eta = x + (1 - t) * d
    xi = np.where(xi_b, np.where(xi_at_hi & low_contact, hi, lo), xi)
    eta = np.where(eta_b, np.where(high_contact & ~xi_at_lo, hi, lo), eta)
    _, g0, _ = _safe_jet(u0, xi)
    _, g1, _ = _safe_jet(u1, eta)
    s = np.where(xi_b, g1, g0)
    interior = status == 0
    s = np.where(interior, 0.5 * (g0 + g1), s)
    res = np.where(interior, np.abs(g1 - g0), res)
    return Batch1D(
        x.reshape(shape), t.reshape(shape), xi.reshape(shape), eta.reshape(shape), s.reshape(shape),
        status.reshape(shape), res.reshape(shape), xi_b.reshape(shape), eta_b.reshape(shape), iterations,
    )


def _solve_nd(p: GeodesicProblem, x, t, tol=1e-13, max_iter=100, boundary_eps=1e-9):
    u0, u1 = p.u0, p.u1
    lo, hi = p.bounds
    d = np.zeros_like(x)
    trace = []

    def F(dd):
        xi, eta = x - t * dd, x + (1 - t) * dd
        return u1.grad(eta) - u0.grad(xi), xi, eta

    r, xi, eta = F(d)
    rn = np.linalg.norm(r)
    trace.append(rn)
    for it in range(1, max_iter + 1):
        scale = max(float(np.linalg.norm(u0.grad(xi))), float(np.linalg.norm(u1.grad(eta))))
        if rn <= tol * scale:
            return EndpointSolution(x, t, xi, eta, 0.5 * (u0.grad(xi) + u1.grad(eta)), INTERIOR, rn, it - 1)
        J = (1 - t) * u1.hess(eta) + t * u0.hess(xi)
        try:
            step = -np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise DimensionUnsupported(
                "singular endpoint system; boundary-contact segments are only handled for n = 1"
            ) from None
        alpha = 1.0
        for _ in range(60):
            dn = d + alpha * step
            xin, etan = x - t * dn, x + (1 - t) * dn
            if np.all((xin > lo) & (xin < hi) & (etan > lo) & (etan < hi)):
                rn_new_vec, _, _ = F(dn)
                rn_new = np.linalg.norm(rn_new_vec)
                if rn_new < rn:
                    break
            alpha *= 0.5
        else:
            if rn <= 1e-9 * max(1.0, scale):
                # residual is at rounding level
                return EndpointSolution(x, t, xi, eta, 0.5 * (u0.grad(xi) + u1.grad(eta)), INTERIOR, rn, it - 1)
            raise NewtonDivergence("endpoint Newton could not reduce the residual", it, rn, trace)
        d = dn
        r, xi, eta = F(d)
        rn = rn_new
        trace.append(rn)
        near = min(np.min(xi - lo), np.min(hi - xi), np.min(eta - lo), np.min(hi - eta))
        if near < boundary_eps:
            raise DimensionUnsupported(
                f"segment reaches the lateral boundary (distance {near:.2g}); "
                "boundary-contact is only handled for n = 1"
            )
    raise NewtonDivergence(f"endpoint Newton did not converge in {max_iter} steps", max_iter, rn, trace)


def solve_endpoints(p: GeodesicProblem, x, t: float) -> EndpointSolution:
    """Endpoints ``xi``, ``eta`` and shared gradient ``s`` of the segment
    through ``(x, t)``.

    Newton starts from ``xi = eta = x``.  In one dimension a segment that
    would leave ``U`` is replaced by one ending on the lateral boundary
    (status ``boundary-contact``); in higher dimensions that case raises
    :class:`DimensionUnsupported`.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (p.dim,):
        raise InputError(f"x must have dimension {p.dim}")
    t = float(t)
    if not 0.0 < t < 1.0:
        raise InputError("t must lie strictly between 0 and 1; clamp with clamp_t")
    if p.dim > 1:
        lo, hi = p.bounds
        if not (np.all(x > lo) and np.all(x < hi)):
            raise InputError("x must be interior to the domain")
        return _solve_nd(p, x, t)
    b = solve_endpoints_1d(p, x, np.array([t]))
    if b.status[0] == 2:
        raise NewtonDivergence("endpoint iteration failed", b.iterations, float(b.residual[0]))
    return EndpointSolution(
        x, t, b.xi.reshape(1), b.eta.reshape(1), b.s.reshape(1), _STATUS[b.status[0]],
        float(b.residual[0]), b.iterations, bool(b.xi_on_boundary[0]), bool(b.eta_on_boundary[0]),
    )


def _lid_values(p: GeodesicProblem, sol: EndpointSolution):
    v0 = 0.0 if (sol.xi_on_boundary and p.dirichlet) else p.u0.value(sol.xi)
    v1 = 0.0 if (sol.eta_on_boundary and p.dirichlet) else p.u1.value(sol.eta)
    return v0, v1


def eval_geodesic(p: GeodesicProblem, x, t: float, sol: Optional[EndpointSolution] = None) -> float:
    """``u(x, t) = (1-t) u0(xi) + t u1(eta)``; a lateral endpoint contributes
    the lateral value 0."""
    sol = sol or solve_endpoints(p, x, t)
    v0, v1 = _lid_values(p, sol)
    return (1 - sol.t) * v0 + sol.t * v1


def spatial_gradient(p: GeodesicProblem, x, t: float, sol: Optional[EndpointSolution] = None) -> np.ndarray:
    """``D_x u(x, t)``: the gradient shared by both lids at the endpoints."""
    sol = sol or solve_endpoints(p, x, t)
    return sol.s.copy()


def time_derivative(p: GeodesicProblem, x, t: float, sol: Optional[EndpointSolution] = None) -> float:
    """``D_t u = u1(eta) - u0(xi) - s.(eta - xi)``, from the affinity of
    ``u`` along the segment and the constancy of ``D_x u`` on it."""
    sol = sol or solve_endpoints(p, x, t)
    v0, v1 = _lid_values(p, sol)
    return float(v1 - v0 - sol.s @ (sol.eta - sol.xi))


def _batch_values(p: GeodesicProblem, b: Batch1D):
    u0v = _safe_jet(p.u0, b.xi)[0]
    u1v = _safe_jet(p.u1, b.eta)[0]
    if p.dirichlet:
        u0v = np.where(b.xi_on_boundary, 0.0, u0v)
        u1v = np.where(b.eta_on_boundary, 0.0, u1v)
    u = (1 - b.t) * u0v + b.t * u1v
    ut = u1v - u0v - b.s * (b.eta - b.xi)
    return u, ut


def eval_geodesic_1d(p: GeodesicProblem, x, t):
    """Vectorized ``(u, u_x, u_t, batch)`` for a one-dimensional problem."""
    b = solve_endpoints_1d(p, x, t)
    u, ut = _batch_values(p, b)
    return u, b.s, ut, b


@dataclass
class GeodesicGrid:
    """Geodesic values on a tensor grid; arrays are indexed ``[t, x]``."""

    xs: np.ndarray
    ts: np.ndarray
    u: np.ndarray
    ux: Optional[np.ndarray] = None
    ut: Optional[np.ndarray] = None
    status: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    @property
    def dx(self) -> float:
        return float(np.diff(self.xs).max())

    @property
    def dt(self) -> float:
        return float(np.diff(self.ts).max())

    @property
    def step(self) -> float:
        return max(self.dx, self.dt)

    def row(self, t) -> np.ndarray:
        return self.u[int(np.argmin(np.abs(self.ts - t)))]

    def to_csv(self, path=None) -> str:
        """``x,t,u,ux,ut,status`` rows, t-major, plus any extra columns."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        extra_names = list(self.extra)
        w.writerow(["x", "t", "u", "ux", "ut", "status"] + extra_names)
        nan = np.full_like(self.u, np.nan)
        ux = self.ux if self.ux is not None else nan
        ut = self.ut if self.ut is not None else nan
        st = self.status if self.status is not None else np.full(self.u.shape, "", dtype=object)
        for i, t in enumerate(self.ts):
            for j, x in enumerate(self.xs):
                row = [_fmt(x), _fmt(t), _fmt(self.u[i, j]), _fmt(ux[i, j]), _fmt(ut[i, j]), st[i, j]]
                row += [_fmt(self.extra[k][i, j]) for k in extra_names]
                w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "GeodesicGrid":
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text(encoding="utf-8")
        rows = list(csv.reader(io.StringIO(source)))
        header = rows[0]
        if header[:6] != ["x", "t", "u", "ux", "ut", "status"]:
            raise InputError("grid CSV header must start with x,t,u,ux,ut,status")
        body = [r for r in rows[1:] if r]
        xs_all = np.array([float(r[0]) for r in body])
        ts_all = np.array([float(r[1]) for r in body])
        xs = np.unique(xs_all)
        ts = np.unique(ts_all)
        shape = (ts.size, xs.size)
        if len(body) != xs.size * ts.size:
            raise InputError("grid CSV is not a full tensor grid")

        def col(k):
            return np.array([float(r[k]) if r[k] else np.nan for r in body]).reshape(shape)

        status = np.array([r[5] for r in body], dtype=object).reshape(shape)
        extra = {name: col(6 + k) for k, name in enumerate(header[6:])}
        return cls(xs, ts, col(2), col(3), col(4), status, extra)


def _fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return ""
    return repr(v)


def _mix(a, b, t):
    # exact when a == b, so the back-transform keeps the grid ends in its support
    return a if a == b else (1 - t) * a + t * b


def _discrete_row(c0, c1, t, xs):
    ys = np.union1d(c0.xs, c1.xs)
    vals = (1 - t) * c0(ys) + t * c1(ys)
    blend = SampledFunction1D(
        ys, vals, _mix(c0.left_slope, c1.left_slope, t), _mix(c0.right_slope, c1.right_slope, t)
    )
    back = _conjugate_tailed(blend)
    u = back(xs)
    if back.xs.size == 1:
        return u, np.full_like(xs, np.nan)
    slopes = back.slopes()
    last = slopes.size - 1
    v = np.searchsorted(back.xs, xs, side="right") - 1
    k = np.clip(v, 0, last)
    # interior vertices take the mean of the adjacent piece slopes
    inner_vertex = np.isin(xs, back.xs) & (v > 0) & (v <= last)
    left = slopes[np.clip(v - 1, 0, last)]
    s = np.where(inner_vertex, 0.5 * (left + slopes[k]), slopes[k])
    return u, s


def geodesic_grid_1d(f0: SampledFunction1D, f1: SampledFunction1D, ts) -> GeodesicGrid:
    """Discrete geodesic through the partial Legendre transform.

    For each ``t`` the conjugates of the lid data are blended as
    ``(1-t) f0* + t f1*`` on the union of their breakpoint slopes,
    transformed back and read off at the input abscissae.  Slopes ``ux``
    come from the piecewise-linear result; ``ut = f0*(ux) - f1*(ux)`` is the
    envelope-theorem derivative of the blend; the status is interior when
    ``ux`` lies inside both discrete gradient images.
    """
    require_common_grid(f0, f1)
    ts = np.asarray(ts, dtype=float)
    if np.any((ts < 0) | (ts > 1)):
        raise InputError("times must lie in [0, 1]")
    xs = f0.xs
    c0, c1 = conjugate_discrete(f0), conjugate_discrete(f1)
    u = np.empty((ts.size, xs.size))
    ux = np.empty_like(u)
    for i, t in enumerate(ts):
        u[i], ux[i] = _discrete_row(c0, c1, t, xs)
    ut = c0(ux) - c1(ux)
    img_lo = max(c0.xs[0], c1.xs[0])
    img_hi = min(c0.xs[-1], c1.xs[-1])
    status = np.where((ux > img_lo) & (ux < img_hi), INTERIOR, BOUNDARY).astype(object)
    return GeodesicGrid(xs.copy(), ts, u, ux, ut, status)


def grid_from_solver(p: GeodesicProblem, xs, ts) -> GeodesicGrid:
    """Evaluate the segment solver on a tensor grid (1-D problems).

    Lid rows (``t = 0`` or ``1``) and lateral columns take the boundary data
    directly; derivatives there come from the solver at the clamped time or
    nudged abscissa.
    """
    if p.dim != 1:
        raise InputError("grid_from_solver needs a one-dimensional problem")
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    lo, hi = p.u0.lower[0], p.u0.upper[0]
    width = (hi - lo) if np.isfinite(hi - lo) else 1.0
    xq = np.clip(xs, lo + 1e-12 * width, hi - 1e-12 * width)
    T, X = np.meshgrid(clamp_t(ts), xq, indexing="ij")
    u, ux, ut, b = eval_geodesic_1d(p, X, T)
    for i, t in enumerate(ts):
        if t <= 0:
            u[i] = _safe_jet(p.u0, xs)[0]
        elif t >= 1:
            u[i] = _safe_jet(p.u1, xs)[0]
    for j, x in enumerate(xs):
        if x <= lo or x >= hi:
            u0v = _safe_jet(p.u0, np.array([x]))[0][0]
            u1v = _safe_jet(p.u1, np.array([x]))[0][0]
            u[:, j] = (1 - ts) * u0v + ts * u1v
    return GeodesicGrid(xs, ts, u, ux, ut, b.status_names())
