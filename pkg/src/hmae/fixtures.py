"""Reference problems with closed-form geodesics.

``quadratic_pair``: ``u0 = 2(x^2-1)``, ``u1 = x^2-1`` on ``(-1, 1)``.  The
gradient images differ, so segments through the outer regions end on the
lateral boundary.

``log_quartic_pair``: ``u0 = log(x^2+1) - log 2``, ``u1 = -x^4/8 + 3x^2/4 - 5/8``
on ``(-1, 1)``.  Both images are ``(-1, 1)`` and both second derivatives
vanish at the ends.

``exp_pair``: log-images of ``2(|z|^2-1)`` and ``|z|^4-1`` on the unit disc,
``u0 = 2(e^{2x}-1)``, ``u1 = e^{4x}-1`` on ``(-inf, 0)``.  Segments satisfy
``xi = 2 eta`` with ``eta = x/(2-t)``.
"""

from __future__ import annotations

import numpy as np

from .funcspec import ConvexOracle, oracle_from_expr, parse_expr
from .geodesic import GeodesicProblem

QUADRATIC = ("2*(x^2-1)", "x^2-1")
LOG_QUARTIC = ("log(x^2+1)-log(2)", "-(1/8)*x^4+(3/4)*x^2-5/8")
EXP = ("2*exp(2*x)-2", "exp(4*x)-1")


def _pair(formulas, domain, strictness) -> tuple[ConvexOracle, ConvexOracle]:
    return tuple(
        oracle_from_expr(parse_expr(f), domain, strictness=strictness, label=f) for f in formulas
    )


def quadratic_pair():
    return _pair(QUADRATIC, (-1.0, 1.0), "closure")


def log_quartic_pair():
    return _pair(LOG_QUARTIC, (-1.0, 1.0), "interior")


def exp_pair():
    return _pair(EXP, (-np.inf, 0.0), "interior")


def quadratic_problem() -> GeodesicProblem:
    return GeodesicProblem(*quadratic_pair())


def log_quartic_problem() -> GeodesicProblem:
    return GeodesicProblem(*log_quartic_pair())


def exp_problem() -> GeodesicProblem:
    return GeodesicProblem(*exp_pair())


def quadratic_exact(x, t):
    """Piecewise closed form of the quadratic-pair geodesic."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        left = (x + t) / (1 - t)
        right = (x - t) / (1 - t)
        mid = 2 * x**2 / (1 + t) + t - 2
        out = np.where(left < -0.5, 2 * (1 - t) * (left**2 - 1), mid)
        out = np.where(right >= 0.5, 2 * (1 - t) * (right**2 - 1), out)
    return out


def quadratic_interfaces(t):
    """Abscissae of the two branch interfaces at time ``t``."""
    t = np.asarray(t, dtype=float)
    return -(1 + t) / 2, (1 + t) / 2


def quadratic_exact_derivatives(x, t):
    """``(u_x, u_t, u_xx, u_xt, u_tt)`` of the closed form."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    a, b = quadratic_interfaces(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _quadratic_derivatives(x, t, a, b)


def _quadratic_derivatives(x, t, a, b):
    mid = (4 * x / (1 + t), 1 - 2 * x**2 / (1 + t) ** 2, 4 / (1 + t), -4 * x / (1 + t) ** 2, 4 * x**2 / (1 + t) ** 3)
    for sign, region in ((1.0, x < a), (-1.0, x > b)):
        y = (x + sign * t) / (1 - t)
        # u = 2(1-t)(y^2-1); y_x = 1/(1-t); y_t = (sign + y)/(1-t)
        ux = 4 * y
        ut = -2 * (y**2 - 1) + 4 * y * (sign + y)
        uxx = 4 / (1 - t)
        uxt = 4 * (sign + y) / (1 - t)
        utt = 4 * (sign + y) ** 2 / (1 - t)
        branch = (ux, ut, uxx, uxt, utt)
        mid = tuple(np.where(region, bv, mv) for bv, mv in zip(branch, mid))
    return mid


def log_quartic_conjugates(s):
    """Closed-form conjugates ``(u0*(s), u1*(s))`` for ``|s| < 1``, ``s != 0``
    for the first."""
    s = np.asarray(s, dtype=float)
    r = np.sqrt(1 - s**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        c0 = 1 - r - np.log(1 - r) + np.log(s**2)
    c0 = np.where(s == 0, np.log(2.0), c0)
    c = np.cos(np.arccos(-s) / 3 - 2 * np.pi / 3)
    c1 = 2 * s * c + 2 * c**4 - 3 * c**2 + 5 / 8
    return c0, c1


def log_quartic_argmax(s):
    """Points ``x0(s)``, ``x1(s)`` where the conjugate suprema are attained."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x0 = np.where(s == 0, 0.0, (1 - np.sqrt(1 - s**2)) / s)
    x1 = 2 * np.cos(np.arccos(-s) / 3 - 2 * np.pi / 3)
    return x0, x1


def exp_endpoints(x, t):
    """``(xi, eta)`` for the exponential pair."""
    eta = np.asarray(x, dtype=float) / (2 - np.asarray(t, dtype=float))
    return 2 * eta, eta


def exp_exact(x, t):
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    return (2 - t) * (np.exp(4 * x / (2 - t)) - 1)


def exp_exact_derivatives(x, t):
    """``(u_x, u_t)`` of ``(2-t)(e^{4x/(2-t)} - 1)``."""
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    e = np.exp(4 * x / (2 - t))
    return 4 * e, -(e - 1) + 4 * x * e / (2 - t)


def toric_exact(r, tau):
    """``(2 - tau)(r^{4/(2-tau)} - 1)`` for ``|z| = r``, ``log|zeta| = tau``."""
    r, tau = np.asarray(r, dtype=float), np.asarray(tau, dtype=float)
    return (2 - tau) * (r ** (4 / (2 - tau)) - 1)
