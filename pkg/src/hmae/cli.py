"""Command-line interface.

Exit codes: 0 success, 1 a reproduce check failed, 2 bad input, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import HmaeError, InputError, NumericalError
from .funcspec import ConvexOracle, load_spec
from .geodesic import GeodesicProblem, clamp_t, geodesic_grid_1d, grid_from_solver, solve_endpoints_1d
from .hessian import hessian_columns_1d
from .legendre import conjugate_analytic, conjugate_discrete, sample_oracle
from .matmeans import SpdMatrix, amhm_gap, harmonic_mean, random_spd, variational_hm, weighted_amhm_gap
from .regularity import halving_deltas, regularity_report
from .reproduce import BUNDLES
from .toric import ToricFamily, log_pullback, toric_report


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _grid_axis(u: ConvexOracle, n: int, window):
    lo, hi = u.lower[0], u.upper[0]
    if window is not None:
        lo, hi = window
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise InputError("the domain is unbounded; pass --window LO HI")
    return np.linspace(lo, hi, n)


def cmd_conjugate(args) -> int:
    u = load_spec(args.spec)
    if u.dim != 1 and args.point is None:
        raise InputError("grid conjugates need a one-dimensional spec")
    if args.point is not None:
        y = [float(v) for v in args.point]
        cp = conjugate_analytic(u, y)
        arg = ";".join(repr(float(v)) for v in cp.argmax)
        ys = ";".join(repr(v) for v in y)
        _emit(f"y,value,argmax,interior\n{ys},{cp.value!r},{arg},{str(cp.interior).lower()}\n", args.out)
        return 0
    xs = _grid_axis(u, args.nx, args.window)
    f = sample_oracle(u, xs)
    _emit(conjugate_discrete(f).to_csv(), args.out)
    return 0


def cmd_geodesic(args) -> int:
    u0, u1 = load_spec(args.spec0), load_spec(args.spec1)
    if u0.dim != 1:
        raise InputError("geodesic grids are one-dimensional")
    p = GeodesicProblem(u0, u1)
    xs = _grid_axis(u0, args.nx, args.window)
    ts = np.linspace(0.0, 1.0, args.nt)
    grid = grid_from_solver(p, xs, ts)
    pipeline = geodesic_grid_1d(sample_oracle(u0, xs), sample_oracle(u1, xs), ts)
    failed = grid.status == "failed"
    grid.u = np.where(failed, pipeline.u, grid.u)
    X, T = np.meshgrid(xs, clamp_t(ts))
    inner = (X > xs[0]) & (X < xs[-1]) & (X > u0.lower[0]) & (X < u0.upper[0])
    hcols = [np.full(X.shape, np.nan) for _ in range(4)]
    if inner.any():
        b = solve_endpoints_1d(p, X[inner], T[inner])
        for col, vals in zip(hcols, hessian_columns_1d(p, b.xi, b.eta, b.t, b.status_names())):
            col[inner] = vals
    grid.extra = dict(zip(("hxx", "hxt", "htt", "null_residual"), hcols))
    _emit(grid.to_csv(), args.out)

    if args.report:
        step = max(np.diff(xs).max(), np.diff(ts).max())
        rho = args.rho if args.rho is not None else 4 * step
        deltas = halving_deltas(args.delta, args.halvings + 1)
        report = regularity_report(u0, u1, grid, deltas, args.alpha, rho, args.tol)
        report["legendre_pipeline_max_diff"] = float(np.abs(grid.u - pipeline.u).max())
        report["failed_points"] = int(failed.sum())
        Path(args.report).write_text(_dump(report), encoding="utf-8")
    return 0


def cmd_reproduce(args) -> int:
    checks = BUNDLES[args.example](seed=args.seed, tol=args.tol)
    text = "".join(c.line() + "\n" for c in checks)
    ok = all(c.passed for c in checks)
    text += f"{'ALL PASS' if ok else 'SOME CHECKS FAILED'} ({sum(c.passed for c in checks)}/{len(checks)})\n"
    _emit(text, args.out)
    return 0 if ok else 1


def amhm_sweep(seed: int, trials: int, dims) -> dict:
    rng = np.random.default_rng(seed)
    worst, worst_w, worst_var = math.inf, math.inf, 0.0
    for n in dims:
        for _ in range(trials):
            A, B = random_spd(rng, n), random_spd(rng, n)
            t = float(rng.uniform(0.0, 1.0))
            am = SpdMatrix((1 - t) * A + t * B)
            worst = min(worst, amhm_gap(A, B, t) / am.max_eig)
            l, r = np.exp(rng.uniform(-2, 2, n)), np.exp(rng.uniform(-2, 2, n))
            s = 1.0 / ((1 - t) / l + t / r)
            scale = am.max_eig * float(np.max(s)) ** 2
            worst_w = min(worst_w, weighted_amhm_gap(A, B, l, r, t) / scale)
            tt = min(max(t, 1e-6), 1 - 1e-6)
            z = rng.standard_normal(n)
            ref = float(z @ harmonic_mean(A, B, tt) @ z)
            worst_var = max(worst_var, abs(variational_hm(A, B, tt, z).value - ref) / abs(ref))
    empty = trials == 0 or not dims
    return {
        "seed": seed,
        "trials": trials,
        "dims": list(dims),
        "min_scaled_gap": None if empty else worst,
        "min_scaled_weighted_gap": None if empty else worst_w,
        "max_variational_rel_error": None if empty else worst_var,
        "passed": empty or (worst >= -1e-9 and worst_w >= -1e-9 and worst_var <= 1e-10),
    }


def cmd_amhm(args) -> int:
    if args.trials < 0:
        raise InputError("trials must be nonnegative")
    if args.dim is not None and args.dim < 1:
        raise InputError("dim must be at least 1")
    dims = [args.dim] if args.dim is not None else list(range(1, 7))
    report = amhm_sweep(args.seed, args.trials, dims)
    _emit(_dump(report), args.out)
    return 0


def _load_toric(path):
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read toric spec {path}: {exc}") from None
    if spec.get("kind") != "toric":
        raise InputError("toric spec needs kind 'toric'")
    fam = ToricFamily.from_params(spec)
    log_image = spec.get("log_image")
    if log_image is not None:
        log_image = [[float(str(v).replace("Infinity", "inf")) if v is not None else -math.inf for v in ax]
                     for ax in log_image]
    return log_pullback(fam, log_image, bool(spec.get("complete", True)), spec.get("label", ""))


def cmd_toric(args) -> int:
    p0, p1 = _load_toric(args.spec0), _load_toric(args.spec1)
    if p0.n != 1:
        raise InputError("the toric report samples one-dimensional profiles")
    lo, hi = args.window
    xs = np.linspace(lo, hi, args.nx)
    rng = np.random.default_rng(args.seed)
    pts = [([float(np.exp(x))], float(t)) for x, t in
           zip(rng.uniform(lo, hi, args.points), rng.uniform(0.05, 0.95, args.points))]
    _emit(_dump(toric_report(p0, p1, pts, xs, args.tau)), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hmae", description="Weak geodesics between convex functions.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--tol", type=float, default=1e-3, help="tolerance for interval comparisons")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("conjugate", help="Legendre transform of a function spec")
    c.add_argument("--spec", required=True)
    c.add_argument("--point", nargs="+", help="slope y (one value per dimension)")
    c.add_argument("--nx", type=int, default=1001)
    c.add_argument("--window", nargs=2, type=float)
    common(c, seed=False)
    c.set_defaults(func=cmd_conjugate)

    g = sub.add_parser("geodesic", help="geodesic grid CSV and regularity report")
    g.add_argument("--spec0", required=True)
    g.add_argument("--spec1", required=True)
    g.add_argument("--nx", type=int, default=401)
    g.add_argument("--nt", type=int, default=101)
    g.add_argument("--window", nargs=2, type=float)
    g.add_argument("--report", help="regularity report JSON path")
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--delta", type=float, default=0.2, help="largest corner margin")
    g.add_argument("--halvings", type=int, default=3)
    g.add_argument("--rho", type=float, help="probe radius (default: 4 grid steps)")
    common(g, seed=False)
    g.set_defaults(func=cmd_geodesic)

    r = sub.add_parser("reproduce", help="run a reference check bundle")
    r.add_argument("example", choices=sorted(BUNDLES))
    common(r)
    r.set_defaults(func=cmd_reproduce)

    a = sub.add_parser("amhm", help="random AM-HM inequality sweep")
    a.add_argument("--trials", type=int, default=1000)
    a.add_argument("--dim", type=int)
    common(a)
    a.set_defaults(func=cmd_amhm)

    t = sub.add_parser("toric", help="toric geodesic report")
    t.add_argument("--spec0", required=True)
    t.add_argument("--spec1", required=True)
    t.add_argument("--tau", type=float, default=0.5)
    t.add_argument("--window", nargs=2, type=float, default=(-8.0, -0.1))
    t.add_argument("--nx", type=int, default=50)
    t.add_argument("--points", type=int, default=20)
    common(t)
    t.set_defaults(func=cmd_toric)
    return ap


def _validate(args):
    for name in ("nx", "nt"):
        if getattr(args, name, 3) < 3:
            raise InputError(f"--{name} must be at least 3")
    alpha = getattr(args, "alpha", 1.0)
    if not 0 < alpha <= 1:
        raise InputError("--alpha must lie in (0, 1]")
    for name in ("delta", "rho"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            raise InputError(f"--{name} must be positive")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except HmaeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
