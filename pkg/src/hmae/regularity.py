"""Regularity diagnostics for geodesic grids.

Gradient images, Lipschitz estimates, the support-plane ``C^{1,alpha}``
certificate with its growth toward the corner set, and an independent
convex-envelope computation of the geodesic from its boundary data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import BadParams, HullDegenerate, InputError, InsufficientResolution
from .funcspec import ConvexOracle
from .geodesic import GeodesicGrid, _safe_jet
from .legendre import SampledFunction1D, require_common_grid


@dataclass(frozen=True)
class GradientImage1D:
    lo: float
    hi: float

    def as_list(self):
        return [_json_float(self.lo), _json_float(self.hi)]


def _richardson(g, hs):
    """Extrapolate ``g(h) -> g(0)`` from values at ``h, h/2, h/4, ...``."""
    table = [np.asarray(g, dtype=float)]
    for k in range(1, len(hs)):
        prev = table[-1]
        table.append((2**k * prev[1:] - prev[:-1]) / (2**k - 1))
    return float(table[-1][0])


def _one_sided_limit(u: ConvexOracle, end: float, inward: float, width: float) -> float:
    hs = width * 1e-3 / 2.0 ** np.arange(4)
    xs = end + inward * hs
    return _richardson(_safe_jet(u, xs)[1], hs)


def _far_limit(u: ConvexOracle, anchor: float, direction: float) -> float:
    xs = anchor + direction * 10.0 * 2.0 ** np.arange(12)
    with np.errstate(over="ignore"):
        try:
            g = _safe_jet(u, xs)[1]
        except Exception:
            g = np.array([np.nan])
    g = g[np.isfinite(g)]
    if g.size >= 2 and abs(g[-1] - g[-2]) <= 1e-9 * (1 + abs(g[-1])):
        return float(g[-1])
    return direction * math.inf


def gradient_image_1d(u: ConvexOracle) -> GradientImage1D:
    """Limits of ``u'`` at both ends of the domain."""
    if u.dim != 1:
        raise InputError("gradient_image_1d needs a one-dimensional oracle")
    lo, hi = u.lower[0], u.upper[0]
    width = hi - lo if np.isfinite(hi - lo) else 1.0
    if np.isfinite(lo):
        g_lo = _one_sided_limit(u, lo, 1.0, width)
    else:
        g_lo = _far_limit(u, hi if np.isfinite(hi) else 0.0, -1.0)
    if np.isfinite(hi):
        g_hi = _one_sided_limit(u, hi, -1.0, width)
    else:
        g_hi = _far_limit(u, lo if np.isfinite(lo) else 0.0, 1.0)
    return GradientImage1D(g_lo, g_hi)


def images_agree(g0: GradientImage1D, g1: GradientImage1D, tol: float = 1e-3) -> bool:
    def close(a, b):
        if math.isinf(a) or math.isinf(b):
            return a == b
        return abs(a - b) <= tol

    return close(g0.lo, g1.lo) and close(g0.hi, g1.hi)


@dataclass(frozen=True)
class RegularityRegion:
    delta: float
    alpha: float = 1.0
    rho: float = 0.02

    def __post_init__(self):
        if not self.delta > 0 or not self.rho > 0:
            raise BadParams("delta and rho must be positive")
        if not 0 < self.alpha <= 1:
            raise BadParams("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class C1AlphaResult:
    C_estimate: float
    worst_pair: tuple  # ((x, t), (x', t'))


class _CertificateScan:
    """Per-node maxima of ``[u - plane] / |Delta|^{1+alpha}`` over probes
    within ``rho``; computed once and reused across corner margins."""

    def __init__(self, grid: GeodesicGrid, alpha: float, rho: float, corners=None):
        xs, ts, u = grid.xs, grid.ts, grid.u
        hx, ht = np.diff(xs).max(), np.diff(ts).max()
        if rho < 4 * max(hx, ht) * (1 - 1e-9):
            raise InsufficientResolution(f"rho={rho} is below four grid steps ({4 * max(hx, ht):.3g})")
        if xs.size < 3 or ts.size < 3:
            raise InsufficientResolution("grid needs at least 3 nodes per axis")
        nt, nx = u.shape
        # central-difference gradient at interior nodes
        ux = (u[1:-1, 2:] - u[1:-1, :-2]) / (xs[2:] - xs[:-2])[None, :]
        ut = (u[2:, 1:-1] - u[:-2, 1:-1]) / (ts[2:] - ts[:-2])[:, None]
        base = u[1:-1, 1:-1]
        best = np.full(base.shape, -np.inf)
        arg = np.zeros(base.shape, dtype=int)
        offsets = []
        mi, mj = int(rho // np.diff(ts).min()) + 1, int(rho // np.diff(xs).min()) + 1
        for di in range(-mi, mi + 1):
            for dj in range(-mj, mj + 1):
                if di == 0 and dj == 0:
                    continue
                offsets.append((di, dj))
        I, J = np.meshgrid(np.arange(1, nt - 1), np.arange(1, nx - 1), indexing="ij")
        kept = []
        for di, dj in offsets:
            pi, pj = I + di, J + dj
            ok = (pi >= 0) & (pi < nt) & (pj >= 0) & (pj < nx)
            pic, pjc = np.clip(pi, 0, nt - 1), np.clip(pj, 0, nx - 1)
            dx = xs[pjc] - xs[J]
            dt = ts[pic] - ts[I]
            dist = np.hypot(dx, dt)
            ok &= dist <= rho * (1 + 1e-12)
            if not ok.any():
                continue
            gap = u[pic, pjc] - base - ux * dx - ut * dt
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(ok, gap / dist ** (1 + alpha), -np.inf)
            better = ratio > best
            best = np.where(better, ratio, best)
            arg = np.where(better, len(kept), arg)
            kept.append((di, dj))
        self.best = np.maximum(best, 0.0)
        self.arg = arg
        self.offsets = kept
        self.I, self.J = I, J
        self.xs, self.ts = xs, ts
        if corners is None:
            corners = [(x, t) for x in (xs[0], xs[-1]) for t in (ts[0], ts[-1])]
        X, T = xs[J], ts[I]
        self.corner_dist = np.min([np.hypot(X - cx, T - ct) for cx, ct in corners], axis=0)

    def result(self, delta: float) -> C1AlphaResult:
        mask = self.corner_dist >= delta
        if not mask.any():
            raise InsufficientResolution(f"no base node lies at distance >= {delta} from the corners")
        vals = np.where(mask, self.best, -np.inf)
        k = int(np.argmax(vals))  # first maximum in (t, x) order
        i, j = np.unravel_index(k, vals.shape)
        di, dj = self.offsets[self.arg[i, j]] if self.offsets else (0, 0)
        bi, bj = self.I[i, j], self.J[i, j]
        pair = ((float(self.xs[bj]), float(self.ts[bi])), (float(self.xs[bj + dj]), float(self.ts[bi + di])))
        return C1AlphaResult(float(vals[i, j]), pair)


def c1alpha_certificate(grid: GeodesicGrid, region: RegularityRegion, corners=None) -> C1AlphaResult:
    """Largest ``[u(p) - u(b) - Du(b).(p-b)] / |p-b|^{1+alpha}`` over base
    nodes ``b`` at distance ``>= delta`` from the corners and grid nodes
    ``p`` within ``rho`` of ``b``.  ``Du`` is the central-difference
    gradient.  ``corners`` defaults to the four corners of the grid."""
    return _CertificateScan(grid, region.alpha, region.rho, corners).result(region.delta)


def c1alpha_profile(grid: GeodesicGrid, deltas, alpha: float = 1.0, rho: float = 0.02, corners=None):
    """``[(delta, C)]`` for several corner margins from a single scan."""
    RegularityRegion(min(deltas), alpha, rho)
    scan = _CertificateScan(grid, alpha, rho, corners)
    return [(float(d), scan.result(d).C_estimate) for d in deltas]


def blowup_factor(profile) -> float:
    """Geometric-mean growth of ``C`` per halving of ``delta``."""
    (d0, c0), (d1, c1) = profile[0], profile[-1]
    halvings = math.log2(d0 / d1)
    if halvings <= 0:
        raise BadParams("profile deltas must decrease")
    if c0 <= 0:
        return 1.0 if c1 <= 0 else math.inf
    return (c1 / c0) ** (1.0 / halvings)


def halving_deltas(start: float, count: int):
    return [start / 2**k for k in range(count)]


def lipschitz_components(grid: GeodesicGrid) -> dict:
    """Largest absolute divided differences between adjacent nodes along
    ``x``, ``t`` and both diagonals."""
    u, xs, ts = grid.u, grid.xs, grid.ts
    dx = np.diff(xs)[None, :]
    dt = np.diff(ts)[:, None]
    out = {
        "x": float(np.abs(np.diff(u, axis=1) / dx).max()) if xs.size > 1 else 0.0,
        "t": float(np.abs(np.diff(u, axis=0) / dt).max()) if ts.size > 1 else 0.0,
    }
    if xs.size > 1 and ts.size > 1:
        diag = np.hypot(dx, dt)
        out["diag"] = float(np.abs((u[1:, 1:] - u[:-1, :-1]) / diag).max())
        out["anti"] = float(np.abs((u[1:, :-1] - u[:-1, 1:]) / diag).max())
    return out


def lipschitz_norm(grid: GeodesicGrid) -> float:
    return max(lipschitz_components(grid).values())


def envelope_oracle_1d(f0: SampledFunction1D, f1: SampledFunction1D, nt: int) -> GeodesicGrid:
    """Convex envelope of the boundary data of ``[a, b] x [0, 1]``.

    The lower hull of the lid samples ``(x, 0, f0)``, ``(x, 1, f1)`` and the
    lateral samples ``(a or b, t, (1-t) f(end) ...)`` at ``nt`` times is
    computed with Qhull; the value at a grid node is the maximum over the
    downward-facing facets of their planes.  The lateral values interpolate
    the lid values at the ends, which is 0 for Dirichlet data.
    """
    require_common_grid(f0, f1)
    if nt < 2:
        raise InputError("nt must be at least 2")
    xs = f0.xs
    ts = np.linspace(0.0, 1.0, nt)
    a, b = xs[0], xs[-1]
    lat = []
    for end, v0, v1 in ((a, f0.vals[0], f1.vals[0]), (b, f0.vals[-1], f1.vals[-1])):
        lat.append(np.column_stack([np.full(nt, end), ts, (1 - ts) * v0 + ts * v1]))
    pts = np.vstack(
        [np.column_stack([xs, np.zeros_like(xs), f0.vals]), np.column_stack([xs, np.ones_like(xs), f1.vals])] + lat
    )
    X, T = np.meshgrid(xs, ts)
    try:
        hull = ConvexHull(pts)
    except QhullError:
        warnings.warn("boundary data is coplanar; returning the affine interpolant", HullDegenerate, stacklevel=2)
        coef, *_ = np.linalg.lstsq(np.column_stack([pts[:, :2], np.ones(len(pts))]), pts[:, 2], rcond=None)
        return GeodesicGrid(xs.copy(), ts, coef[0] * X + coef[1] * T + coef[2])
    eq = hull.equations
    lower = eq[eq[:, 2] < -1e-12]
    # plane n.(x,t,z) + c = 0  ->  z = -(nx x + nt t + c) / nz
    slope_x = -lower[:, 0] / lower[:, 2]
    slope_t = -lower[:, 1] / lower[:, 2]
    const = -lower[:, 3] / lower[:, 2]
    flat_x, flat_t = X.ravel(), T.ravel()
    u = np.full(flat_x.size, -np.inf)
    for k in range(0, lower.shape[0], 512):
        sl = slice(k, k + 512)
        planes = flat_x[:, None] * slope_x[None, sl] + flat_t[:, None] * slope_t[None, sl] + const[None, sl]
        u = np.maximum(u, planes.max(axis=1))
    return GeodesicGrid(xs.copy(), ts, u.reshape(X.shape))


def _json_float(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def regularity_report(u0: ConvexOracle, u1: ConvexOracle, grid: GeodesicGrid, deltas, alpha=1.0, rho=0.02,
                      tol=1e-3) -> dict:
    g0, g1 = gradient_image_1d(u0), gradient_image_1d(u1)
    profile = c1alpha_profile(grid, deltas, alpha, rho)
    return {
        "gradient_images": {"u0": g0.as_list(), "u1": g1.as_list()},
        "agree": images_agree(g0, g1, tol),
        "lipschitz": lipschitz_norm(grid),
        "c1alpha": [{"delta": d, "C": c} for d, c in profile],
        "blowup_factor": _json_float(blowup_factor(profile)),
    }
