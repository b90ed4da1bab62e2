"""End-to-end check bundles for the three reference problems."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fixtures as fx
from .geodesic import eval_geodesic, geodesic_grid_1d, grid_from_solver, solve_endpoints
from .hessian import blocks_at, degeneracy_certificate
from .legendre import conjugate_analytic, sample_oracle
from .regularity import (
    blowup_factor,
    c1alpha_profile,
    envelope_oracle_1d,
    gradient_image_1d,
    images_agree,
    lipschitz_components,
)
from .toric import disc_example_profiles, endpoint_gap_probe, toric_geodesic_eval, toric_phi_1d


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _check(name, passed, detail):
    return Check(name, bool(passed), detail)


def _banded_error(grid, exact, bands):
    X, T = np.meshgrid(grid.xs, grid.ts)
    h = float(np.diff(grid.xs).max())
    mask = np.ones_like(X, dtype=bool)
    for b in bands(T):
        mask &= np.abs(X - b) > 2 * h
    return float(np.abs(grid.u - exact(X, T))[mask].max())


def quadratic_checks(seed: int = 0, tol: float = 1e-3):
    u0, u1 = fx.quadratic_pair()
    p = fx.quadratic_problem()
    out = []

    xs = np.linspace(-1, 1, 2001)
    ts = np.linspace(0, 1, 101)
    grid = geodesic_grid_1d(sample_oracle(u0, xs), sample_oracle(u1, xs), ts)
    err = _banded_error(grid, fx.quadratic_exact, fx.quadratic_interfaces)
    out.append(_check("pipeline vs closed form (2001x101)", err <= 1e-6, f"max error {err:.3e} <= 1e-6"))

    sol = solve_endpoints(p, [0.1], 0.5)
    ok = abs(sol.xi[0] - 1 / 15) < 1e-12 and abs(sol.eta[0] - 2 / 15) < 1e-12 and abs(sol.s[0] - 4 / 15) < 1e-12
    out.append(_check("endpoints at (0.1, 0.5)", ok, f"xi={sol.xi[0]:.12g} eta={sol.eta[0]:.12g} s={sol.s[0]:.12g}"))

    v1, v2 = eval_geodesic(p, [0.0], 0.5), eval_geodesic(p, [-0.9], 0.2)
    out.append(_check("branch values", abs(v1 + 1.5) < 1e-12 and abs(v2 + 0.375) < 1e-12, f"u(0,.5)={v1:.12g} u(-.9,.2)={v2:.12g}"))

    b = blocks_at(p, [0.1], 0.5)
    H = b.full()
    ref = np.array([[8 / 3, -8 / 45], [-8 / 45, 8 / 675]])
    cert = degeneracy_certificate(b)
    out.append(_check("Hessian blocks at (0.1, 0.5)", np.abs(H - ref).max() < 1e-12 and cert.ok,
                      f"max deviation {np.abs(H - ref).max():.2e}, null residual {cert.null_residual:.2e}"))

    g0, g1 = gradient_image_1d(u0), gradient_image_1d(u1)
    ok = (not images_agree(g0, g1, tol) and abs(g0.hi - 4) < tol and abs(g0.lo + 4) < tol
          and abs(g1.hi - 2) < tol and abs(g1.lo + 2) < tol)
    out.append(_check("gradient images differ", ok, f"u0' -> ({g0.lo:.6g}, {g0.hi:.6g}), u1' -> ({g1.lo:.6g}, {g1.hi:.6g})"))

    sgrid = grid_from_solver(p, np.linspace(-1, 1, 801), np.linspace(0, 1, 401))
    prof = c1alpha_profile(sgrid, [0.2, 0.1, 0.05, 0.025], 1.0, 0.01)
    f = blowup_factor(prof)
    out.append(_check("corner blow-up of C^{1,1} constant", f >= 1.8,
                      "factor %.3f per halving; C = %s" % (f, ", ".join(f"{c:.3g}" for _, c in prof))))

    lip = lipschitz_components(sgrid)["x"]
    out.append(_check("Lipschitz constant in x", abs(lip - 4) < 0.01, f"{lip:.6g}"))

    xs = np.linspace(-1, 1, 401)
    f0, f1 = sample_oracle(u0, xs), sample_oracle(u1, xs)
    env = envelope_oracle_1d(f0, f1, 41)
    leg = geodesic_grid_1d(f0, f1, env.ts)
    gap = float(np.abs(env.u - leg.u).max())
    out.append(_check("hull envelope vs Legendre pipeline (401x41)", gap <= 5 * (xs[1] - xs[0]), f"sup gap {gap:.3e}"))
    return out


def log_quartic_checks(seed: int = 0, tol: float = 1e-3):
    u0, u1 = fx.log_quartic_pair()
    p = fx.log_quartic_problem()
    out = []

    g0, g1 = gradient_image_1d(u0), gradient_image_1d(u1)
    ok = images_agree(g0, g1, tol) and abs(g0.lo + 1) < tol and abs(g0.hi - 1) < tol
    out.append(_check("gradient images agree", ok, f"u0' -> ({g0.lo:.6g}, {g0.hi:.6g}), u1' -> ({g1.lo:.6g}, {g1.hi:.6g})"))

    cp = conjugate_analytic(u0, [0.6])
    ref0, _ = fx.log_quartic_conjugates(0.6)
    out.append(_check("conjugate of u0 at 0.6", abs(cp.value - ref0) < 1e-10 and abs(cp.argmax[0] - 1 / 3) < 1e-10,
                      f"{cp.value:.10f} (closed form {float(ref0):.10f})"))

    rng = np.random.default_rng(seed)
    ss = rng.uniform(-0.95, 0.95, 50)
    c0, c1 = fx.log_quartic_conjugates(ss)
    err = max(max(abs(conjugate_analytic(u0, [s]).value - a), abs(conjugate_analytic(u1, [s]).value - b))
              for s, a, b in zip(ss, c0, c1))
    out.append(_check("closed-form conjugates", err < 1e-9, f"max deviation {err:.2e} at 50 slopes"))

    pts = np.column_stack([rng.uniform(-0.98, 0.98, 200), rng.uniform(0.01, 0.99, 200)])
    worst = -math.inf
    for x, t in pts:
        worst = max(worst, blocks_at(p, [x], t).ceiling_gap())
    out.append(_check("AM-HM ceiling on Hxx", worst <= 1e-9, f"max lambda(Hxx - ceiling) = {worst:.3e}"))

    b = blocks_at(p, [0.0], 0.5)
    out.append(_check("Hxx at (0, 0.5)", abs(b.Hxx[0, 0] - 12 / 7) < 1e-12, f"{b.Hxx[0, 0]:.12g}"))

    sgrid = grid_from_solver(p, np.linspace(-1, 1, 801), np.linspace(0, 1, 401))
    prof = c1alpha_profile(sgrid, [0.2, 0.1, 0.05, 0.025], 1.0, 0.01)
    f = blowup_factor(prof)
    cmax = max(c for _, c in prof)
    out.append(_check("bounded C^{1,1} constant", f <= 1.1 and cmax <= 2.2, f"factor {f:.3f}, max C {cmax:.4g}"))

    xs = np.linspace(-1, 1, 401)
    f0, f1 = sample_oracle(u0, xs), sample_oracle(u1, xs)
    env = envelope_oracle_1d(f0, f1, 41)
    leg = geodesic_grid_1d(f0, f1, env.ts)
    gap = float(np.abs(env.u - leg.u).max())
    out.append(_check("hull envelope vs Legendre pipeline (401x41)", gap <= 5 * (xs[1] - xs[0]), f"sup gap {gap:.3e}"))

    xs = np.linspace(-1, 1, 2001)
    leg = geodesic_grid_1d(sample_oracle(u0, xs), sample_oracle(u1, xs), np.linspace(0, 1, 11))
    xq, ti = rng.uniform(-0.999, 0.999, 100), rng.integers(1, 10, 100)
    vals = np.array([eval_geodesic(p, [x], i / 10) for x, i in zip(xq, ti)])
    disc = np.array([np.interp(x, leg.xs, leg.u[i]) for x, i in zip(xq, ti)])
    gap = float(np.abs(vals - disc).max())
    out.append(_check("solver vs Legendre pipeline (2001 nodes)", gap <= 5 * (xs[1] - xs[0]), f"max gap {gap:.3e}"))
    return out


def exp_checks(seed: int = 0, tol: float = 1e-3):
    p0, p1 = disc_example_profiles()
    p = fx.exp_problem()
    out = []

    rng = np.random.default_rng(seed)
    r, tau = rng.uniform(1e-3, 1 - 1e-3, 1000), rng.uniform(1e-3, 1 - 1e-3, 1000)
    err = float(np.abs(toric_phi_1d(p0, p1, r, tau) - fx.toric_exact(r, tau)).max())
    out.append(_check("toric closed form at 1000 points", err <= 1e-10, f"max error {err:.2e}"))

    ev = toric_geodesic_eval(p0, p1, [0.5], 0.5)
    out.append(_check("phi(|z|=0.5, tau=0.5)", abs(ev.phi - fx.toric_exact(0.5, 0.5)) < 1e-10, f"{ev.phi:.10f}"))

    sol = solve_endpoints(p, [-1.0], 0.5)
    xi, eta = fx.exp_endpoints(-1.0, 0.5)
    ok = abs(sol.xi[0] - xi) < 1e-10 and abs(sol.eta[0] - eta) < 1e-10
    out.append(_check("endpoints at (-1, 0.5)", ok, f"xi={sol.xi[0]:.10g} eta={sol.eta[0]:.10g} (xi = 2 eta, eta = x/(2-t))"))

    zs = np.exp(np.linspace(-10, -0.05, 60))
    evals = [toric_geodesic_eval(p0, p1, [z], 0.5) for z in zs]
    lam = min(float(e.complex_spatial_hessian[0, 0]) for e in evals)
    dom = all(e.dominated for e in evals)
    out.append(_check("slice complex Hessians positive and dominated", lam > 0 and dom, f"min eigenvalue {lam:.4g}"))

    xs = np.linspace(-10, -0.1, 100)
    probe = endpoint_gap_probe(p0, p1, xs, 0.5)
    slope_ok = abs(probe.growth - 1 / 1.5) < 1e-6
    k = int(np.argmax([g for _, g in probe.gap_profile]))
    out.append(_check(
        "gap unbounded", slope_ok and not math.isfinite(probe.C_estimate),
        f"max gap {probe.max_gap:.4g} at x={probe.gap_profile[k][0]:.4g}, growth {probe.growth:.6f} per unit |x|, "
        f"C estimate {probe.C_estimate}",
    ))
    return out


BUNDLES = {"2.1": quadratic_checks, "2.2": log_quartic_checks, "2.3": exp_checks}
