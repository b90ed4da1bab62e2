"""Second derivatives of the geodesic at interior segment points.

With ``A0 = D2u0(xi)``, ``A1 = D2u1(eta)`` and the harmonic mean
``M = ((1-t) A0^{-1} + t A1^{-1})^{-1}``, the full Hessian in ``(x, t)`` is

    [[M,            M (xi - eta)],
     [(xi - eta)^T M, (xi - eta)^T M (xi - eta)]]

which has rank ``n`` and kernel spanned by ``(eta - xi, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SingularHessian, StencilOutOfDomain
from .geodesic import INTERIOR, EndpointSolution, GeodesicProblem, eval_geodesic, solve_endpoints
from .matmeans import harmonic_mean

COND_LIMIT = 1e12


@dataclass(frozen=True)
class HessianBlocks:
    Hxx: np.ndarray
    Hxt: np.ndarray
    Htt: float
    M: np.ndarray
    null_dir: np.ndarray
    ceiling: np.ndarray  # (1-t) D2u0(xi) + t D2u1(eta)

    @property
    def n(self) -> int:
        return self.Hxx.shape[0]

    def full(self) -> np.ndarray:
        n = self.n
        H = np.empty((n + 1, n + 1))
        H[:n, :n] = self.Hxx
        H[:n, n] = H[n, :n] = self.Hxt
        H[n, n] = self.Htt
        return H

    def ceiling_gap(self) -> float:
        """``lambda_max(Hxx - ceiling)``; nonpositive by the AM-HM inequality."""
        return float(np.linalg.eigvalsh(self.Hxx - self.ceiling)[-1])


def _checked_hessian(H, where: str) -> np.ndarray:
    H = np.atleast_2d(np.asarray(H, dtype=float))
    lam = np.linalg.eigvalsh(0.5 * (H + H.T))
    if lam[0] <= 0 or lam[-1] / lam[0] > COND_LIMIT:
        raise SingularHessian(f"Hessian at {where} is singular or ill conditioned", eigenvalue=float(lam[0]))
    return H


def hessian_blocks(p: GeodesicProblem, sol: EndpointSolution, t: float | None = None) -> HessianBlocks:
    if sol.status != INTERIOR:
        raise InputError("closed-form Hessian blocks need an interior segment")
    t = sol.t if t is None else float(t)
    A0 = _checked_hessian(p.u0.hess(sol.xi), f"xi={sol.xi.tolist()}")
    A1 = _checked_hessian(p.u1.hess(sol.eta), f"eta={sol.eta.tolist()}")
    M = harmonic_mean(A0, A1, t)
    d = sol.xi - sol.eta
    Md = M @ d
    return HessianBlocks(
        Hxx=M,
        Hxt=Md,
        Htt=float(d @ Md),
        M=M,
        null_dir=np.append(-d, 1.0),
        ceiling=(1 - t) * A0 + t * A1,
    )


def blocks_at(p: GeodesicProblem, x, t: float) -> HessianBlocks:
    return hessian_blocks(p, solve_endpoints(p, x, t))


def default_step(p: GeodesicProblem) -> float:
    lo, hi = p.bounds
    diam = float(np.linalg.norm(hi - lo))
    return 1e-3 * diam if np.isfinite(diam) else 1e-3


def fd_hessian(p: GeodesicProblem, x, t: float, h: float | None = None) -> np.ndarray:
    """Central second differences of ``eval_geodesic`` in ``(x, t)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = default_step(p) if h is None else float(h)
    if h <= 0:
        raise InputError("h must be positive")
    lo, hi = p.bounds
    if np.any(x - h <= lo) or np.any(x + h >= hi) or t - h <= 0 or t + h >= 1:
        raise StencilOutOfDomain(f"stencil of width {h} leaves U x (0,1) at x={x.tolist()}, t={t}")
    n = x.size
    z0 = np.append(x, t)

    def f(z):
        return eval_geodesic(p, z[:n], z[n])

    E = np.eye(n + 1) * h
    f0 = f(z0)
    H = np.empty((n + 1, n + 1))
    for i in range(n + 1):
        H[i, i] = (f(z0 + E[i]) - 2 * f0 + f(z0 - E[i])) / h**2
        for j in range(i):
            H[i, j] = H[j, i] = (
                f(z0 + E[i] + E[j]) - f(z0 + E[i] - E[j]) - f(z0 - E[i] + E[j]) + f(z0 - E[i] - E[j])
            ) / (4 * h**2)
    return H


@dataclass(frozen=True)
class FdComparison:
    error_h: float
    error_half: float
    order: float
    rounding_floor: float

    @property
    def exact(self) -> bool:
        return self.error_h <= self.rounding_floor

    def second_order(self, threshold: float = 1.8) -> bool:
        return self.exact or self.order >= threshold


def fd_order(p: GeodesicProblem, x, t: float, h: float = 1e-3, blocks: HessianBlocks | None = None) -> FdComparison:
    """Compare the closed form against FD at ``h`` and ``h/2``.

    The observed order is ``log2(e(h) / e(h/2))``.  When ``e(h)`` is already
    at the rounding level of the stencil (``1e3 * eps * scale / h^2``) the
    truncation term is invisible and the ratio carries no information;
    ``exact`` flags that case.
    """
    blocks = blocks or blocks_at(p, x, t)
    H = blocks.full()
    e1 = float(np.abs(fd_hessian(p, x, t, h) - H).max())
    e2 = float(np.abs(fd_hessian(p, x, t, h / 2) - H).max())
    scale = max(1.0, abs(eval_geodesic(p, x, t)))
    floor = 1e3 * np.finfo(float).eps * scale / h**2
    order = float(np.log2(e1 / e2)) if e2 > 0 else np.inf
    return FdComparison(e1, e2, order, floor)


@dataclass(frozen=True)
class DegeneracyReport:
    null_residual: float
    det_estimate: float
    min_eig_spatial: float
    norm: float
    size: int

    @property
    def ok(self) -> bool:
        return (
            self.null_residual <= 1e-8 * self.norm
            and abs(self.det_estimate) <= 1e-10 * self.norm**self.size
            and self.min_eig_spatial > 0
        )


def degeneracy_certificate(b: HessianBlocks) -> DegeneracyReport:
    H = b.full()
    norm = float(np.linalg.norm(H, 2))
    return DegeneracyReport(
        null_residual=float(np.linalg.norm(H @ b.null_dir)),
        det_estimate=float(np.linalg.det(H)),
        min_eig_spatial=float(np.linalg.eigvalsh(b.Hxx)[0]),
        norm=norm,
        size=b.n + 1,
    )


def hessian_columns_1d(p: GeodesicProblem, xi, eta, t, status):
    """Vectorized ``hxx, hxt, htt, null_residual`` for a 1-D batch; NaN off
    interior segments."""
    from .geodesic import _safe_jet

    xi, eta, t = (np.asarray(v, dtype=float) for v in (xi, eta, t))
    a0 = _safe_jet(p.u0, xi)[2]
    a1 = _safe_jet(p.u1, eta)[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        m = a0 * a1 / (t * a0 + (1 - t) * a1)
    d = xi - eta
    hxx, hxt, htt = m, m * d, m * d * d
    # H (eta - xi, 1) = (-m d + m d, -m d^2 + m d^2)
    res = np.hypot(hxx * (-d) + hxt, hxt * (-d) + htt)
    bad = (np.asarray(status) != INTERIOR) | ~(a0 > 0) | ~(a1 > 0)
    return tuple(np.where(bad, np.nan, v) for v in (hxx, hxt, htt, res))
