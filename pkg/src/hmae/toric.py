"""Toric plurisubharmonic functions on Reinhardt domains.

A toric function ``phi(z) = f(|z_1|, ..., |z_n|)`` is plurisubharmonic
exactly when ``u(x) = phi(e^x)`` is convex on the log-image.  At real
positive points the complex Hessian of ``phi`` is ``D2u(x)_ij / (4 z_i z_j)``,
so everything reduces to the real geodesic of the pulled-back profiles.
Only real positive points are evaluated: a diagonal unitary conjugation
relates the complex Hessian at any other point of the same torus orbit.

The catalog consists of finite sums ``sum_k c_k prod_l |z_l|^{2 m_kl} + const``
with ``c_k > 0`` and nonnegative integer exponents, which extend smoothly
across ``{z_1 ... z_n = 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, InputError, UnsupportedFamily, WindowViolation, ZeroCoordinate
from .funcspec import ConvexOracle, builtin_oracle
from .geodesic import (
    GeodesicProblem,
    eval_geodesic,
    eval_geodesic_1d,
    solve_endpoints,
    solve_endpoints_1d,
)
from .hessian import hessian_blocks
from .matmeans import weight_harmonic


@dataclass(frozen=True)
class ToricFamily:
    terms: tuple  # ((c, (m_1, ..., m_n)), ...)
    constant: float = 0.0
    n: int = 1

    def __post_init__(self):
        for c, m in self.terms:
            if not c > 0:
                raise UnsupportedFamily("toric coefficients must be positive")
            if len(m) != self.n:
                raise UnsupportedFamily(f"exponent {m} does not have length {self.n}")
            if any(int(v) != v or v < 0 for v in m) or not any(m):
                raise UnsupportedFamily("exponents must be nonnegative integers, not all zero")

    @classmethod
    def from_params(cls, params) -> "ToricFamily":
        """``{"terms": [{"c": 2, "m": [1]}], "constant": -2}``."""
        try:
            raw = params.get("terms", [])
            terms = tuple((float(t["c"]), tuple(float(v) for v in np.atleast_1d(t["m"]))) for t in raw)
        except (KeyError, TypeError, AttributeError) as exc:
            raise UnsupportedFamily(f"malformed toric terms: {exc}") from None
        n = int(params.get("n", len(terms[0][1]) if terms else 1))
        return cls(terms, float(params.get("constant", 0.0)), n)

    def _monomials(self, r):
        r = np.asarray(r, dtype=float)
        return [c * np.prod(r ** (2 * np.asarray(m))) for c, m in self.terms]

    def value(self, r) -> float:
        return float(sum(self._monomials(r)) + self.constant)

    def complex_hessian(self, r) -> np.ndarray:
        """``d^2 phi / dz_i dzbar_j`` at the real point ``z = r`` computed term
        by term: ``c m_i m_j prod r_l^{2 m_l - [l=i] - [l=j]}``."""
        r = np.asarray(r, dtype=float).reshape(self.n)
        H = np.zeros((self.n, self.n))
        for c, m in self.terms:
            m = np.asarray(m)
            for i in range(self.n):
                for j in range(self.n):
                    e = 2 * m.copy()
                    e[i] -= 1
                    e[j] -= 1
                    if m[i] == 0 or m[j] == 0:
                        continue
                    H[i, j] += c * m[i] * m[j] * np.prod(r**e)
        return H


@dataclass(frozen=True)
class ToricProfile:
    n: int
    profile: ConvexOracle
    complete: bool
    log_image: tuple
    family: ToricFamily
    label: str = ""
    extras: dict = field(default_factory=dict)


def _zero_oracle(n, lo, hi) -> ConvexOracle:
    return ConvexOracle(
        dim=n, lower=lo, upper=hi,
        _value=lambda x: 0.0, _grad=lambda x: np.zeros(n), _hess=lambda x: np.zeros((n, n)),
        label="0", _jet1d=(lambda xs: (np.zeros_like(xs), np.zeros_like(xs), np.zeros_like(xs))) if n == 1 else None,
    )


def log_pullback(family: ToricFamily, log_image=None, complete: bool = True, label: str = "") -> ToricProfile:
    """``u(x) = phi(e^x)``; the default log-image ``(-inf, 0)^n`` is that of
    the unit polydisc."""
    if not isinstance(family, ToricFamily):
        raise UnsupportedFamily("log_pullback accepts catalog families only")
    n = family.n
    if log_image is None:
        lo, hi = (-math.inf,) * n, (0.0,) * n
    else:
        arr = np.asarray(log_image, dtype=float)
        if arr.shape == (2,):
            arr = np.tile(arr, (n, 1))
        lo, hi = tuple(arr[:, 0]), tuple(arr[:, 1])
    if complete and not all(math.isinf(v) and v < 0 for v in lo):
        raise BadParams("a complete Reinhardt domain has a log-image closed under decreasing any coordinate")
    if family.terms:
        terms = [{"c": c, "k": [2 * v for v in m]} for c, m in family.terms]
        oracle = builtin_oracle(
            "exp-affine", {"terms": terms, "constant": family.constant},
            domain=list(zip(lo, hi)), label=label,
        )
    else:
        if family.constant != 0:
            raise UnsupportedFamily("a constant profile must be 0")
        oracle = _zero_oracle(n, lo, hi)
    return ToricProfile(n, oracle, complete, (lo, hi), family, label)


def complex_hessian_from_real(Hu, z) -> np.ndarray:
    """``Hu_ij / (4 z_i z_j)`` at the real positive point ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z == 0):
        raise ZeroCoordinate("the conversion is undefined where a coordinate vanishes; take a limit")
    if np.any(z < 0):
        raise InputError("evaluate at real positive points")
    Hu = np.atleast_2d(np.asarray(Hu, dtype=float))
    return Hu / (4.0 * np.outer(z, z))


def _problem(p0: ToricProfile, p1: ToricProfile) -> GeodesicProblem:
    if p0.n != p1.n:
        raise InputError("profiles must have the same dimension")
    return GeodesicProblem(p0.profile, p1.profile, dirichlet=False, labels=(p0.label, p1.label))


@dataclass(frozen=True)
class ToricEval:
    phi: float
    complex_spatial_hessian: np.ndarray
    ceiling: np.ndarray
    weights: np.ndarray  # harmonic over geometric mean of e^xi, e^eta; <= 1
    dominance_gap: float  # lambda_min(ceiling - hessian)
    xi: np.ndarray
    eta: np.ndarray
    real_blocks: object

    @property
    def dominated(self) -> bool:
        scale = max(1.0, float(np.abs(self.ceiling).max()))
        return self.dominance_gap >= -1e-9 * scale


def toric_geodesic_eval(p0: ToricProfile, p1: ToricProfile, z, tau: float) -> ToricEval:
    """Geodesic value and spatial complex Hessian at ``(z, |zeta| = e^tau)``.

    The ceiling matrix is ``((1-tau) Phi0(e^xi) + tau Phi1(e^eta))_ij s_i s_j
    / (z_i z_j)`` with ``Phi`` the complex Hessians of the inputs and ``s``
    the harmonic mean of ``e^xi`` and ``e^eta``; it dominates the spatial
    complex Hessian by the weighted AM-HM inequality.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z <= 0):
        raise ZeroCoordinate("evaluate off the coordinate hyperplanes (all z_i > 0)")
    p = _problem(p0, p1)
    x = np.log(z)
    sol = solve_endpoints(p, x, tau)
    phi = eval_geodesic(p, x, tau, sol)
    blocks = hessian_blocks(p, sol)
    H = complex_hessian_from_real(blocks.Hxx, z)
    ez0, ez1 = np.exp(sol.xi), np.exp(sol.eta)
    s = weight_harmonic(ez0, ez1, tau)
    mix = (1 - tau) * p0.family.complex_hessian(ez0) + tau * p1.family.complex_hessian(ez1)
    ceiling = mix * np.outer(s / z, s / z)
    gap = float(np.linalg.eigvalsh(0.5 * ((ceiling - H) + (ceiling - H).T))[0])
    return ToricEval(phi, H, ceiling, s / z, gap, sol.xi, sol.eta, blocks)


def toric_phi_1d(p0: ToricProfile, p1: ToricProfile, r, tau):
    """Vectorized geodesic values for ``n = 1`` at moduli ``r`` and times ``tau``."""
    if p0.n != 1:
        raise InputError("toric_phi_1d needs n = 1")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ZeroCoordinate("moduli must be positive")
    u, *_ = eval_geodesic_1d(_problem(p0, p1), np.log(r), tau)
    return u


@dataclass(frozen=True)
class GapProbe:
    gap_profile: list  # [(x, gap)]
    max_gap: float
    C_estimate: float
    bound_holds: object  # bool, or None when the domain is not complete
    window: tuple
    growth: float  # slope of gap against the distance of x from the window top

    def as_dict(self):
        return {
            "gap_profile": [{"x": _json(x), "gap": g} for x, g in self.gap_profile],
            "max_gap": self.max_gap,
            "C_estimate": _json(self.C_estimate),
            "bound_holds": self.bound_holds,
            "growth": self.growth,
        }


def _json(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_json(a) for a in np.asarray(v).tolist()]
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def enlarged_window(xs: np.ndarray, upper) -> tuple:
    """The sample box with the same center and twice the half-width,
    capped at the log-image's upper bounds."""
    lo, hi = xs.min(axis=0), xs.max(axis=0)
    c, w = 0.5 * (lo + hi), np.maximum(0.5 * (hi - lo), 1e-9)
    return c - 2 * w, np.minimum(c + 2 * w, np.asarray(upper, dtype=float))


def hessian_constant(p0: ToricProfile, p1: ToricProfile, top, samples: int = 201, seed: int = 0) -> float:
    """``max(lambda_hi, 1/lambda_lo)`` over the complex Hessians of both
    inputs on ``[0, e^top]^n``, which contains the closure of the window
    together with its points on the coordinate hyperplanes."""
    top = np.exp(np.asarray(top, dtype=float))
    n = p0.n
    if n <= 2:
        axes = [np.linspace(0.0, t, samples) for t in top]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, n)
    else:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.0, 1.0, size=(samples**2, n)) * top
        pts = np.vstack([pts, np.zeros(n), top])
    lam_lo, lam_hi = math.inf, 0.0
    for fam in (p0.family, p1.family):
        for r in pts:
            ev = np.linalg.eigvalsh(fam.complex_hessian(r))
            lam_lo, lam_hi = min(lam_lo, ev[0]), max(lam_hi, ev[-1])
    if lam_lo <= 0:
        return math.inf
    return max(lam_hi, 1.0 / lam_lo)


def endpoint_gap_probe(p0: ToricProfile, p1: ToricProfile, sample_xs, tau: float, tol: float = 1e-9) -> GapProbe:
    """Largest coordinate gap ``|xi_k - eta_k|`` along sampled points.

    Endpoints must stay in the enlarged window around the samples, otherwise
    :class:`WindowViolation` is raised.  For complete domains the gap is
    compared with ``2 log C``; an infinite ``C`` (some input Hessian
    degenerates on the window) gives no bound and ``bound_holds`` is False.
    """
    if p0.complete != p1.complete:
        raise BadParams("both profiles must describe the same kind of domain")
    xs = np.asarray(sample_xs, dtype=float).reshape(-1, p0.n)
    if xs.shape[0] == 0:
        raise InputError("no sample points")
    p = _problem(p0, p1)
    wlo, whi = enlarged_window(xs, p0.log_image[1])
    if p0.n == 1:
        b = solve_endpoints_1d(p, xs[:, 0], np.full(xs.shape[0], tau))
        xi, eta = b.xi[:, None], b.eta[:, None]
    else:
        sols = [solve_endpoints(p, x, tau) for x in xs]
        xi = np.array([s.xi for s in sols])
        eta = np.array([s.eta for s in sols])
    for pts, name in ((xi, "xi"), (eta, "eta")):
        bad = np.flatnonzero(np.any((pts < wlo - tol) | (pts > whi + tol), axis=1))
        if bad.size:
            k = bad[0]
            raise WindowViolation(
                f"{name}={pts[k].tolist()} for x={xs[k].tolist()} leaves the window [{wlo.tolist()}, {whi.tolist()}]"
            )
    gaps = np.abs(xi - eta).max(axis=1)
    profile = [(x[0] if p0.n == 1 else x.tolist(), float(g)) for x, g in zip(xs, gaps)]
    C = hessian_constant(p0, p1, whi)
    dist = np.linalg.norm(xs - xs.max(axis=0), axis=1)
    growth = float(np.polyfit(dist, gaps, 1)[0]) if xs.shape[0] > 1 and np.ptp(dist) > 0 else 0.0
    if p0.complete:
        bound = bool(math.isfinite(C) and gaps.max() <= 2 * math.log(C) + tol)
    else:
        bound = None
    return GapProbe(profile, float(gaps.max()), C, bound, (wlo.tolist(), whi.tolist()), growth)


def toric_report(p0: ToricProfile, p1: ToricProfile, points, sample_xs, tau: float) -> dict:
    """``points`` is a list of ``(z, tau)`` pairs for value/Hessian output."""
    phi_values, min_eig = [], math.inf
    for z, t in points:
        ev = toric_geodesic_eval(p0, p1, z, t)
        phi_values.append({"z": _json(np.atleast_1d(z)), "tau": float(t), "phi": ev.phi})
        min_eig = min(min_eig, float(np.linalg.eigvalsh(ev.complex_spatial_hessian)[0]))
    probe = endpoint_gap_probe(p0, p1, sample_xs, tau)
    return {
        "phi_values": phi_values,
        "hessian_min_eig": _json(min_eig),
        "gap_profile": probe.as_dict()["gap_profile"],
        "C_estimate": _json(probe.C_estimate),
        "bound_holds": probe.bound_holds,
    }


def disc_example_profiles():
    """``2(|z|^2 - 1)`` and ``|z|^4 - 1`` on the unit disc."""
    f0 = ToricFamily(((2.0, (1.0,)),), -2.0)
    f1 = ToricFamily(((1.0, (2.0,)),), -1.0)
    return log_pullback(f0, label="2(|z|^2-1)"), log_pullback(f1, label="|z|^4-1")


def disc_mixed_profiles():
    """``|z|^2 + |z|^4 - 2`` and ``2|z|^2 + |z|^4/2 - 5/2``, strictly psh at 0."""
    f0 = ToricFamily(((1.0, (1.0,)), (1.0, (2.0,))), -2.0)
    f1 = ToricFamily(((2.0, (1.0,)), (0.5, (2.0,))), -2.5)
    return log_pullback(f0, label="|z|^2+|z|^4-2"), log_pullback(f1, label="2|z|^2+|z|^4/2-5/2")

