"""Matrix arithmetic and harmonic means, and the Loewner-order gaps
between them."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as la

from .errors import DimensionMismatch, NonpositiveWeight, NotSpd


class SpdMatrix:
    """Symmetric positive (semi)definite matrix with cached spectrum.

    The constructor checks symmetry to ``1e-12`` relative and, unless
    ``semidefinite=True``, that the smallest eigenvalue is positive.
    """

    def __init__(self, a, semidefinite: bool = False):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NotSpd(f"expected a square matrix, got shape {a.shape}")
        scale = max(np.abs(a).max(), np.finfo(float).tiny)
        if np.abs(a - a.T).max() > 1e-12 * scale:
            raise NotSpd("matrix is not symmetric")
        self.matrix = 0.5 * (a + a.T)
        self.matrix.flags.writeable = False
        lam = self.eigenvalues[0]
        if semidefinite:
            if lam < -1e-12 * scale:
                raise NotSpd(f"matrix is not positive semidefinite (lambda_min={lam:.3g})")
        elif lam <= 0:
            raise NotSpd(f"matrix is not positive definite (lambda_min={lam:.3g})")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    @property
    def min_eig(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max_eig(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def cond(self) -> float:
        return self.max_eig / self.min_eig if self.min_eig > 0 else np.inf

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"SpdMatrix({self.matrix.tolist()!r})"


def _spd(a) -> np.ndarray:
    if isinstance(a, SpdMatrix):
        return a.matrix
    return SpdMatrix(a).matrix


def _pair(A, B):
    A, B = _spd(A), _spd(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    return A, B


def _sym(m):
    return 0.5 * (m + m.T)


def harmonic_mean(A, B, t: float) -> np.ndarray:
    """``((1-t) A^{-1} + t B^{-1})^{-1}``, computed as
    ``A [t A + (1-t) B]^{-1} B`` so that neither input is inverted."""
    A, B = _pair(A, B)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0:
        return A.copy()
    if t == 1.0:
        return B.copy()
    c = la.cho_factor(t * A + (1.0 - t) * B)
    return _sym(A @ la.cho_solve(c, B))


def arithmetic_mean(A, B, t: float) -> np.ndarray:
    A, B = _pair(A, B)
    return (1.0 - t) * A + t * B


def amhm_gap(A, B, t: float) -> float:
    """Smallest eigenvalue of ``AM - HM``; nonnegative up to rounding."""
    d = arithmetic_mean(A, B, t) - harmonic_mean(A, B, t)
    return float(np.linalg.eigvalsh(_sym(d))[0])


def weighted_amhm_gap(A, B, l, r, t: float) -> float:
    """Gap in the weighted AM-HM inequality.

    With ``A~ = (a_mk l_m l_k)``, ``B~ = (b_mk r_m r_k)`` and ``s_i`` the
    harmonic mean of ``l_i`` and ``r_i``, returns the smallest eigenvalue of
    ``[((1-t)A + tB)_mk s_m s_k] - ((1-t) A~^{-1} + t B~^{-1})^{-1}``.
    """
    A, B = _pair(A, B)
    l = np.asarray(l, dtype=float).reshape(-1)
    r = np.asarray(r, dtype=float).reshape(-1)
    if l.size != A.shape[0] or r.size != A.shape[0]:
        raise DimensionMismatch("weight vectors must match the matrix size")
    if np.any(l <= 0) or np.any(r <= 0):
        raise NonpositiveWeight("weights must be positive")
    s = weight_harmonic(l, r, t)
    lhs = ((1.0 - t) * A + t * B) * np.outer(s, s)
    hm = harmonic_mean(A * np.outer(l, l), B * np.outer(r, r), t)
    return float(np.linalg.eigvalsh(_sym(lhs - hm))[0])


def weight_harmonic(l, r, t: float) -> np.ndarray:
    """Entrywise harmonic mean ``((1-t)/l + t/r)^{-1}``."""
    l = np.asarray(l, dtype=float)
    r = np.asarray(r, dtype=float)
    return 1.0 / ((1.0 - t) / l + t / r)


@dataclass(frozen=True)
class VariationalResult:
    value: float
    minimizer_x: np.ndarray
    minimizer_y: np.ndarray


def variational_hm(A, B, t: float, z) -> VariationalResult:
    """Minimize ``<x,Ax>/(1-t) + <y,By>/t`` over ``x + y = z``.

    The minimizer is ``x* = (1-t) [tA + (1-t)B]^{-1} B z``; the minimum
    equals ``<z, HM z>``.
    """
    A, B = _pair(A, B)
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0, 1)")
    z = np.asarray(z, dtype=float).reshape(A.shape[0])
    c = la.cho_factor(t * A + (1.0 - t) * B)
    x = (1.0 - t) * la.cho_solve(c, B @ z)
    y = z - x
    value = float(x @ A @ x / (1.0 - t) + y @ B @ y / t)
    return VariationalResult(value, x, y)


def variational_objective(A, B, t: float, x, y) -> float:
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(x @ A @ x / (1.0 - t) + y @ B @ y / t)


def random_spd(rng: np.random.Generator, n: int, low: float = 1e-3, high: float = 1e3) -> np.ndarray:
    """``Q^T diag(lam) Q`` with log-uniform ``lam`` in ``[low, high]`` and
    ``Q`` from the QR factorization of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    lam = np.exp(rng.uniform(np.log(low), np.log(high), size=n))
    return _sym(q.T @ np.diag(lam) @ q)
