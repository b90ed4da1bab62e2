import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hmae.errors import BadParams, EvalDomainError, ExprSyntaxError, NotConvexError, UnsupportedFamily
from hmae.funcspec import (
    BinOp,
    Call,
    Neg,
    Num,
    Pow,
    Var,
    builtin_oracle,
    check_monotone_gradient,
    eval_jet,
    load_spec,
    oracle_from_expr,
    oracle_from_spec,
    parse_expr,
    to_text,
)

X = Var()


def test_parse_quadratic_example():
    assert parse_expr("2*(x^2-1)") == BinOp("*", Num(2.0), BinOp("-", Pow(X, 2.0), Num(1.0)))


def test_parse_variable():
    assert parse_expr("x") == X


def test_parse_log_example():
    expected = BinOp("-", Call("log", BinOp("+", Pow(X, 2.0), Num(1.0))), Call("log", Num(2.0)))
    assert parse_expr("log(x^2+1)-log(2)") == expected


def test_precedence_and_associativity():
    assert parse_expr("-x^2") == Neg(Pow(X, 2.0))
    assert parse_expr("x^3^2") == Pow(X, 9.0)
    assert parse_expr("x^-1") == Pow(X, -1.0)
    assert parse_expr("1+2*x") == BinOp("+", Num(1.0), BinOp("*", Num(2.0), X))
    assert parse_expr("x-1-1") == BinOp("-", BinOp("-", X, Num(1.0)), Num(1.0))
    assert parse_expr("  2 *\tx ") == parse_expr("2*x")


@pytest.mark.parametrize(
    "text, pos",
    [("2*(x^2-1", 8), ("x+", 2), ("foo(x)", 0), ("x^x", 2), ("2 $ x", 2), ("", 0), ("x)", 1)],
)
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr(text)
    assert info.value.position == pos
    assert info.value.expected


def _close(jet, ref):
    assert float(jet.value) == pytest.approx(ref[0], abs=1e-14)
    assert float(jet.d1) == pytest.approx(ref[1], abs=1e-14)
    assert float(jet.d2) == pytest.approx(ref[2], abs=1e-14)


def test_eval_jet_quadratic():
    _close(eval_jet(parse_expr("2*(x^2-1)"), 1.0), (0.0, 4.0, 4.0))


def test_eval_jet_log_at_zero():
    # u0'' = 2(1-x^2)/(x^2+1)^2, so u0''(0) = 2
    _close(eval_jet(parse_expr("log(x^2+1)-log(2)"), 0.0), (-math.log(2), 0.0, 2.0))


def test_eval_jet_quartic_at_one():
    # u1' = -x^3/2 + 3x/2, u1'' = 3(1-x^2)/2
    _close(eval_jet(parse_expr("-(1/8)*x^4+(3/4)*x^2-5/8"), 1.0), (0.0, 1.0, 0.0))


def test_eval_jet_vectorized_matches_scalar():
    e = parse_expr("exp(2*x)*cos(x)+sqrt(x+2)")
    xs = np.linspace(-1, 1, 7)
    j = eval_jet(e, xs)
    for i, x in enumerate(xs):
        s = eval_jet(e, x)
        assert j.value[i] == pytest.approx(float(s.value), rel=1e-15)
        assert j.d2[i] == pytest.approx(float(s.d2), rel=1e-15)


def test_chain_rule_second_order():
    # f(g) with f = exp, g = x^2 + x: d2 = f''(g) g'^2 + f'(g) g''
    x = 0.3
    g, g1, g2 = x**2 + x, 2 * x + 1, 2.0
    j = eval_jet(parse_expr("exp(x^2+x)"), x)
    assert float(j.d2) == pytest.approx(math.exp(g) * g1**2 + math.exp(g) * g2, rel=1e-14)


@pytest.mark.parametrize("text, x", [("log(x)", 0.0), ("log(x)", -1.0), ("sqrt(x)", -0.5), ("acos(x)", 1.5), ("1/x", 0.0)])
def test_domain_errors(text, x):
    with pytest.raises(EvalDomainError):
        eval_jet(parse_expr(text), x)


def test_oracle_quadratic_gradient():
    u = oracle_from_expr(parse_expr("2*(x^2-1)"), (-1, 1))
    assert u.grad([0.5])[0] == pytest.approx(2.0)
    assert u.hess([0.5]).shape == (1, 1)


def test_quartic_strictness():
    e = parse_expr("x^4")
    assert oracle_from_expr(e, (-1, 1)).hess([0.0])[0, 0] == 0.0
    with pytest.raises(NotConvexError) as info:
        oracle_from_expr(e, (-1, 1), strictness="interior")
    assert info.value.witness is not None and abs(info.value.witness) < 1e-3


def test_concave_rejected():
    with pytest.raises(NotConvexError):
        oracle_from_expr(parse_expr("-x^2"), (-1, 1))


def test_closure_strictness_checks_endpoints():
    e = parse_expr("log(x^2+1)-log(2)")
    oracle_from_expr(e, (-1, 1), strictness="interior")
    with pytest.raises(NotConvexError):
        oracle_from_expr(e, (-1, 1), strictness="closure")


def test_builtin_exp_affine():
    u = builtin_oracle("exp-affine", {"terms": [{"c": 2, "k": 2}], "constant": -2})
    assert u.value([0.0]) == pytest.approx(0.0)
    assert u.grad([0.0])[0] == pytest.approx(4.0)
    assert u.hess([0.0])[0, 0] == pytest.approx(8.0)


def test_builtin_exp_affine_matches_jet():
    u = builtin_oracle("exp-affine", {"terms": [[1.0, 4.0]], "constant": -1})
    e = parse_expr("exp(4*x)-1")
    for x in (-2.0, -0.5, 0.0):
        assert u.hess([x])[0, 0] == pytest.approx(16 * math.exp(4 * x), rel=1e-14)
        assert u.hess([x])[0, 0] == pytest.approx(float(eval_jet(e, x).d2), rel=1e-14)


def test_builtin_quadratic_identity():
    u = builtin_oracle("quadratic-form", {"A": np.eye(3), "offset": -1})
    x = np.array([0.1, -0.2, 0.3])
    assert np.allclose(u.grad(x), x)
    assert u.value(x) == pytest.approx(0.5 * x @ x - 1)


def test_builtin_separable_sum():
    u = builtin_oracle("separable-sum", {"parts": ["x^2", "exp(x)"]})
    assert np.allclose(u.hess([0.5, 0.0]), np.diag([2.0, 1.0]))


@pytest.mark.parametrize(
    "family, params",
    [
        ("quadratic-form", {"A": [[1, 2], [2, 1]]}),
        ("quadratic-form", {"A": [[1, 0], [1, 1]]}),
        ("exp-affine", {"terms": [{"c": -1, "k": 1}]}),
        ("exp-affine", {"terms": []}),
    ],
)
def test_builtin_bad_params(family, params):
    with pytest.raises(BadParams):
        builtin_oracle(family, params)


def test_unknown_family():
    with pytest.raises(UnsupportedFamily):
        builtin_oracle("cubic", {})


def test_spec_roundtrip(tmp_path):
    path = tmp_path / "u.json"
    path.write_text(json.dumps({"kind": "expr", "formula": "exp(4*x)-1", "domain": [None, 0]}))
    u = load_spec(path)
    assert u.lower[0] == -math.inf and u.upper[0] == 0.0
    assert u.value([0.0]) == pytest.approx(0.0)
    b = oracle_from_spec({"kind": "builtin", "family": "quadratic-form", "params": {"A": [[2.0]]}, "domain": [-1, 1]})
    assert b.grad([0.5])[0] == pytest.approx(1.0)
    with pytest.raises(BadParams):
        oracle_from_spec({"kind": "table"})


# expressions smooth on [-1, 1]
_leaf = st.one_of(st.just(X), st.floats(0, 2).map(lambda v: Num(round(v, 3))))


def _extend(children):
    pair = st.tuples(children, children)
    return st.one_of(
        pair.map(lambda ab: BinOp("+", *ab)),
        pair.map(lambda ab: BinOp("-", *ab)),
        pair.map(lambda ab: BinOp("*", *ab)),
        children.map(Neg),
        children.map(lambda a: Call("exp", BinOp("*", Num(0.5), a))),
        children.map(lambda a: Call("log", BinOp("+", Pow(a, 2.0), Num(1.0)))),
        children.map(lambda a: Call("sqrt", BinOp("+", Pow(a, 2.0), Num(0.5)))),
        children.map(lambda a: Call("cos", a)),
        children.map(lambda a: Call("acos", BinOp("*", Num(0.5), Call("cos", a)))),
        children.map(lambda a: BinOp("/", Num(1.0), BinOp("+", Pow(a, 2.0), Num(1.0)))),
        st.tuples(children, st.sampled_from([2.0, 3.0, -2.0, 0.5])).map(
            lambda ae: Pow(BinOp("+", Pow(ae[0], 2.0), Num(1.0)), ae[1])
        ),
    )


smooth_exprs = st.recursive(_leaf, _extend, max_leaves=6)


@given(smooth_exprs)
def test_print_parse_roundtrip(e):
    assert parse_expr(to_text(e)) == e


@given(smooth_exprs, st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=20))
def test_jet_matches_finite_differences(e, xs):
    h = 1e-5
    xs = np.array(xs)
    j = eval_jet(e, xs)
    jp, jm = eval_jet(e, xs + h), eval_jet(e, xs - h)
    scale = np.maximum.reduce([np.ones_like(xs), np.abs(j.value), np.abs(j.d1), np.abs(j.d2)])
    assume(np.all(scale < 1e6))
    fd1 = (jp.value - jm.value) / (2 * h)
    fd2 = (jp.d1 - jm.d1) / (2 * h)
    assert np.all(np.abs(fd1 - j.d1) <= 1e-6 * scale)
    assert np.all(np.abs(fd2 - j.d2) <= 1e-4 * scale)


_convex_specs = st.sampled_from(
    ["x^2", "exp(x)+x^4", "log(x^2+1)-log(2)", "2*(x^2-1)", "sqrt(x^2+1)", "exp(-3*x)+0.5*x"]
)


@given(_convex_specs, st.lists(st.floats(-0.999, 0.999), min_size=2, max_size=30))
def test_gradient_monotone(text, pts):
    u = oracle_from_expr(parse_expr(text), (-1, 1), samples=501)
    assert check_monotone_gradient(u, pts) >= -1e-12


@given(st.integers(1, 5), st.integers(0, 1000))
def test_builtin_hessians_spd(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    u = builtin_oracle("quadratic-form", {"A": G @ G.T + n * np.eye(n)})
    assert np.linalg.eigvalsh(u.hess(rng.standard_normal(n)))[0] > 0
    terms = [{"c": float(c), "k": rng.standard_normal(n).tolist()} for c in rng.uniform(0.1, 2, n + 1)]
    v = builtin_oracle("exp-affine", {"terms": terms})
    x = rng.standard_normal(n)
    assert np.linalg.eigvalsh(v.hess(x))[0] >= -1e-12
    pts = rng.standard_normal((10, n))
    assert check_monotone_gradient(v, pts) >= -1e-12
