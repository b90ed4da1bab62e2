"""Exception types.

Everything derives from :class:`HmaeError`.  Errors caused by bad input
(malformed specs, non-convex data, mismatched shapes) also derive from
:class:`InputError`; failures of a numerical procedure on valid input derive
from :class:`NumericalError`.  The CLI maps the two families to exit codes
2 and 3.
"""


class HmaeError(Exception):
    pass


class InputError(HmaeError, ValueError):
    pass


class NumericalError(HmaeError, ArithmeticError):
    pass


class ExprSyntaxError(InputError):
    """Malformed function expression.

    ``position`` is the 0-based character offset where parsing stopped and
    ``expected`` the set of token descriptions that would have been accepted.
    """

    def __init__(self, message, position, expected=(), text=None):
        self.position = position
        self.expected = tuple(expected)
        self.text = text
        detail = f"{message} at position {position}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        if text is not None:
            detail += f"\n  {text}\n  {' ' * position}^"
        super().__init__(detail)


class EvalDomainError(NumericalError):
    pass


class NotConvexError(InputError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class BadParams(InputError):
    pass


class UnsupportedFamily(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NotSpd(InputError):
    pass


class NonpositiveWeight(InputError):
    pass


class GridMismatch(InputError):
    pass


class InsufficientResolution(InputError):
    pass


class StencilOutOfDomain(InputError):
    pass


class ZeroCoordinate(InputError):
    pass


class WindowViolation(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class NewtonDivergence(NoConvergence):
    def __init__(self, message, iterations=None, residual=None, trace=()):
        self.trace = list(trace)
        super().__init__(message, iterations, residual)


class DimensionUnsupported(NumericalError, NotImplementedError):
    pass


class SingularHessian(NumericalError):
    def __init__(self, message, eigenvalue=None):
        self.eigenvalue = eigenvalue
        super().__init__(message)


class HullDegenerate(UserWarning):
    """All hull input points are coplanar; the affine function is used."""
