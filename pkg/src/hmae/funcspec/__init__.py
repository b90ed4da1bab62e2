from .expr import BinOp, Call, Expr, Neg, Num, Pow, Var, parse_expr, to_text
from .jet import Jet2, eval_jet
from .oracle import (
    ConvexOracle,
    builtin_oracle,
    check_monotone_gradient,
    load_spec,
    oracle_from_expr,
    oracle_from_spec,
    sample_points,
)

__all__ = [
    "BinOp", "Call", "Expr", "Neg", "Num", "Pow", "Var", "parse_expr", "to_text",
    "Jet2", "eval_jet",
    "ConvexOracle", "builtin_oracle", "check_monotone_gradient", "load_spec",
    "oracle_from_expr", "oracle_from_spec", "sample_points",
]
