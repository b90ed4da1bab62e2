import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hmae import fixtures as fx
from hmae.errors import DimensionUnsupported, GridMismatch, InputError
from hmae.funcspec import builtin_oracle, oracle_from_expr, parse_expr
from hmae.geodesic import (
    BOUNDARY,
    INTERIOR,
    GeodesicGrid,
    GeodesicProblem,
    clamp_t,
    eval_geodesic,
    eval_geodesic_1d,
    geodesic_grid_1d,
    grid_from_solver,
    solve_endpoints,
    spatial_gradient,
    time_derivative,
)
from hmae.legendre import SampledFunction1D, sample_oracle

Q = fx.quadratic_problem()
LQ = fx.log_quartic_problem()
EX = fx.exp_problem()


def test_quadratic_endpoints():
    sol = solve_endpoints(Q, [0.1], 0.5)
    assert sol.status == INTERIOR
    assert sol.xi[0] == pytest.approx(1 / 15, abs=1e-13)
    assert sol.eta[0] == pytest.approx(2 / 15, abs=1e-13)
    assert sol.s[0] == pytest.approx(4 / 15, abs=1e-13)


def test_exp_endpoints():
    sol = solve_endpoints(EX, [-1.0], 0.5)
    # (1-t) xi + t eta = x with xi = 2 eta forces eta = x / (2 - t)
    assert sol.eta[0] == pytest.approx(-1 / 1.5, abs=1e-12)
    assert sol.xi[0] == pytest.approx(2 * sol.eta[0], abs=1e-12)
    xi, eta = fx.exp_endpoints(-1.0, 0.5)
    assert (sol.xi[0], sol.eta[0]) == pytest.approx((xi, eta), abs=1e-12)


def test_identical_lids():
    u, _ = fx.log_quartic_pair()
    p = GeodesicProblem(u, u)
    sol = solve_endpoints(p, [0.37], 0.3)
    assert sol.xi[0] == pytest.approx(0.37, abs=1e-14) and sol.eta[0] == pytest.approx(0.37, abs=1e-14)
    assert sol.s[0] == pytest.approx(u.grad([0.37])[0], abs=1e-14)
    assert time_derivative(p, [0.37], 0.3) == pytest.approx(0.0, abs=1e-14)


def test_quadratic_values():
    assert eval_geodesic(Q, [0.0], 0.5) == pytest.approx(-1.5, abs=1e-13)
    assert eval_geodesic(Q, [-0.9], 0.2) == pytest.approx(-0.375, abs=1e-13)
    assert solve_endpoints(Q, [-0.9], 0.2).status == BOUNDARY


def test_lid_limit():
    u0, _ = fx.quadratic_pair()
    for x in (-0.7, 0.0, 0.4):
        assert eval_geodesic(Q, [x], 1e-9) == pytest.approx(u0.value([x]), abs=1e-7)


def _fd_x(p, x, t, h=1e-6):
    return (eval_geodesic(p, [x + h], t) - eval_geodesic(p, [x - h], t)) / (2 * h)


def _fd_t(p, x, t, h=1e-6):
    return (eval_geodesic(p, [x], t + h) - eval_geodesic(p, [x], t - h)) / (2 * h)


def test_spatial_gradient_examples():
    assert spatial_gradient(Q, [0.1], 0.5)[0] == pytest.approx(4 / 15, abs=1e-13)
    g = spatial_gradient(Q, [-0.9], 0.2)[0]
    assert g == pytest.approx(-3.5, abs=1e-10)
    assert g == pytest.approx(_fd_x(Q, -0.9, 0.2), abs=1e-6)
    u0, _ = fx.log_quartic_pair()
    p = GeodesicProblem(u0, u0)
    assert spatial_gradient(p, [0.2], 0.6)[0] == pytest.approx(u0.grad([0.2])[0], abs=1e-14)


def test_time_derivative_examples():
    assert time_derivative(Q, [0.0], 0.5) == pytest.approx(1.0, abs=1e-12)
    x, t = -1.0, 0.5
    a = 4 * x / (2 - t)
    exact = -(math.exp(a) - 1) + (2 - t) * math.exp(a) * 4 * x / (2 - t) ** 2
    got = time_derivative(EX, [x], t)
    assert got == pytest.approx(exact, abs=1e-12)
    assert got == pytest.approx(_fd_t(EX, x, t), abs=1e-6)


@pytest.mark.parametrize("p, x, t", [(Q, 0.3, 0.4), (Q, -0.95, 0.3), (LQ, 0.5, 0.7), (LQ, -0.99, 0.1), (EX, -2.0, 0.8)])
def test_derivatives_match_fd(p, x, t):
    assert spatial_gradient(p, [x], t)[0] == pytest.approx(_fd_x(p, x, t), abs=1e-6)
    assert time_derivative(p, [x], t) == pytest.approx(_fd_t(p, x, t), abs=1e-6)


def test_quadratic_closed_form_derivatives():
    rng = np.random.default_rng(0)
    x, t = rng.uniform(-0.99, 0.99, 300), rng.uniform(0.01, 0.99, 300)
    a, b = fx.quadratic_interfaces(t)
    keep = (np.abs(x - a) > 1e-3) & (np.abs(x - b) > 1e-3)
    u, ux, ut, _ = eval_geodesic_1d(Q, x[keep], t[keep])
    ref = fx.quadratic_exact_derivatives(x[keep], t[keep])
    assert np.abs(u - fx.quadratic_exact(x[keep], t[keep])).max() < 1e-12
    assert np.abs(ux - ref[0]).max() < 1e-11
    assert np.abs(ut - ref[1]).max() < 1e-11


def test_input_validation():
    with pytest.raises(InputError):
        solve_endpoints(Q, [0.1], 0.0)
    with pytest.raises(InputError):
        solve_endpoints(Q, [0.1, 0.2], 0.5)
    u = oracle_from_expr(parse_expr("x^2"), (-1, 1))
    with pytest.raises(InputError):
        GeodesicProblem(u, u)
    v = oracle_from_expr(parse_expr("x^2-1"), (-2, 2))
    w = oracle_from_expr(parse_expr("x^2-1"), (-1, 1))
    with pytest.raises(InputError):
        GeodesicProblem(v, w, dirichlet=False)
    assert clamp_t(0.0) > 0 and clamp_t(1.0) < 1


def test_nd_quadratic_solve():
    rng = np.random.default_rng(1)
    G, H = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    A, B = G @ G.T + np.eye(3), H @ H.T + np.eye(3)
    p = GeodesicProblem(builtin_oracle("quadratic-form", {"A": A}), builtin_oracle("quadratic-form", {"A": B}),
                        dirichlet=False)
    x, t = np.array([0.3, -0.2, 0.5]), 0.35
    sol = solve_endpoints(p, x, t)
    xi = np.linalg.solve((1 - t) * np.eye(3) + t * np.linalg.solve(B, A), x)
    assert np.allclose(sol.xi, xi, atol=1e-12)
    assert np.allclose((1 - t) * sol.xi + t * sol.eta, x, atol=1e-12)
    assert np.allclose(A @ sol.xi, B @ sol.eta, atol=1e-10)


def test_nd_boundary_contact_unsupported():
    box = [[-1, 1], [-1, 1]]
    p = GeodesicProblem(builtin_oracle("quadratic-form", {"A": 4 * np.eye(2)}, domain=box),
                        builtin_oracle("quadratic-form", {"A": np.eye(2)}, domain=box), dirichlet=False)
    assert solve_endpoints(p, [0.2, 0.1], 0.5).status == INTERIOR
    with pytest.raises(DimensionUnsupported):
        solve_endpoints(p, [0.95, 0.0], 0.5)


points = st.tuples(st.floats(-0.98, 0.98), st.floats(0.02, 0.98))


@pytest.mark.parametrize("p", [Q, LQ], ids=["quadratic", "log-quartic"])
@given(pt=points)
def test_segment_invariants(p, pt):
    x, t = pt
    sol = solve_endpoints(p, [x], t)
    assert abs((1 - t) * sol.xi[0] + t * sol.eta[0] - x) <= 1e-10
    if sol.status == INTERIOR:
        assert abs(p.u0.grad(sol.xi)[0] - p.u1.grad(sol.eta)[0]) <= 1e-8
    s = np.linspace(0, 1, 11)[1:-1]
    xs = (1 - s) * sol.xi[0] + s * sol.eta[0]
    u, ux, _, _ = eval_geodesic_1d(p, xs, s)
    v0 = 0.0 if sol.xi_on_boundary else p.u0.value(sol.xi)
    v1 = 0.0 if sol.eta_on_boundary else p.u1.value(sol.eta)
    line = np.concatenate([[v0], u, [v1]])
    assert np.abs(np.diff(line, 2)).max() <= 1e-8
    assert np.ptp(ux) <= 1e-8


@given(pt=points)
def test_exp_segment_invariants(pt):
    x, t = -5 * pt[0] - 5.05, pt[1]
    sol = solve_endpoints(EX, [x], t)
    assert abs((1 - t) * sol.xi[0] + t * sol.eta[0] - x) <= 1e-10
    assert abs(EX.u0.grad(sol.xi)[0] - EX.u1.grad(sol.eta)[0]) <= 1e-8


def _second_differences(u):
    return (
        u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2],
        u[2:] - 2 * u[1:-1] + u[:-2],
        u[2:, 2:] - 2 * u[1:-1, 1:-1] + u[:-2, :-2],
        u[2:, :-2] - 2 * u[1:-1, 1:-1] + u[:-2, 2:],
    )


@pytest.mark.parametrize("p", [Q, LQ], ids=["quadratic", "log-quartic"])
def test_grid_convex_and_monotone(p):
    grid = grid_from_solver(p, np.linspace(-1, 1, 201), np.linspace(0, 1, 51))
    for d in _second_differences(grid.u):
        assert d.min() >= -1e-8
    assert np.diff(grid.ux[1:-1], axis=1).min() >= -1e-12


@pytest.mark.parametrize("pair", [fx.quadratic_pair, fx.log_quartic_pair], ids=["quadratic", "log-quartic"])
def test_pipeline_boundary_recovery_and_convexity(pair):
    u0, u1 = pair()
    xs = np.linspace(-1, 1, 401)
    f0, f1 = sample_oracle(u0, xs), sample_oracle(u1, xs)
    grid = geodesic_grid_1d(f0, f1, np.linspace(0, 1, 21))
    step = xs[1] - xs[0]
    lip = max(np.abs(np.diff(f.vals) / step).max() for f in (f0, f1))
    assert np.abs(grid.u[0] - f0.vals).max() <= 2 * step * lip
    assert np.abs(grid.u[-1] - f1.vals).max() <= 2 * step * lip
    for d in _second_differences(grid.u):
        assert d.min() >= -1e-8
    assert np.all(np.diff(grid.ux, axis=1) >= -1e-12)


def test_pipeline_identical_lids():
    u0, _ = fx.log_quartic_pair()
    f = sample_oracle(u0, np.linspace(-1, 1, 301))
    grid = geodesic_grid_1d(f, f, np.linspace(0, 1, 11))
    assert np.abs(grid.u - f.vals[None, :]).max() <= 1e-12
    assert np.abs(grid.ut).max() <= 1e-12


def test_pipeline_matches_solver_on_log_quartic():
    u0, u1 = fx.log_quartic_pair()
    xs = np.linspace(-1, 1, 2001)
    grid = geodesic_grid_1d(sample_oracle(u0, xs), sample_oracle(u1, xs), np.linspace(0, 1, 11))
    rng = np.random.default_rng(2)
    xq, ti = rng.uniform(-0.999, 0.999, 100), rng.integers(1, 10, 100)
    vals, _, _, _ = eval_geodesic_1d(LQ, xq, ti / 10)
    disc = np.array([np.interp(x, grid.xs, grid.u[i]) for x, i in zip(xq, ti)])
    assert np.abs(vals - disc).max() <= 5 * (xs[1] - xs[0])


def test_pipeline_grid_mismatch():
    f = SampledFunction1D([0.0, 1.0], [0.0, 0.0])
    g = SampledFunction1D([0.0, 2.0], [0.0, 0.0])
    with pytest.raises(GridMismatch):
        geodesic_grid_1d(f, g, [0.5])


def test_grid_csv_roundtrip(tmp_path):
    grid = grid_from_solver(Q, np.linspace(-1, 1, 11), np.linspace(0, 1, 5))
    grid.extra = {"hxx": np.where(grid.status == INTERIOR, 1.0, np.nan)}
    text = grid.to_csv()
    assert text.splitlines()[0] == "x,t,u,ux,ut,status,hxx"
    back = GeodesicGrid.from_csv(text)
    assert np.array_equal(back.u, grid.u) and np.array_equal(back.ux, grid.ux)
    assert np.array_equal(back.status, grid.status)
    assert np.array_equal(np.isnan(back.extra["hxx"]), np.isnan(grid.extra["hxx"]))
    grid.to_csv(tmp_path / "g.csv")
    assert np.array_equal(GeodesicGrid.from_csv(tmp_path / "g.csv").ut, grid.ut)
    with pytest.raises(InputError):
        GeodesicGrid.from_csv("a,b\n1,2\n")
