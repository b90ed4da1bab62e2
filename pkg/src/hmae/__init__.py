"""Weak geodesics for the homogeneous real Monge-Ampere equation.

Submodules: ``funcspec`` (function specs and oracles), ``legendre``
(conjugates), ``geodesic`` (segment solver and grids), ``hessian``,
``matmeans``, ``regularity``, ``toric`` and ``cli``.
"""

import os

# HMAE_THREADS caps the BLAS/OpenMP pools; it only takes effect when set
# before numpy is first imported.
_threads = os.environ.get("HMAE_THREADS")
if _threads:
    if not _threads.isdigit() or int(_threads) < 1:
        raise ValueError("HMAE_THREADS must be a positive integer")
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
