"""Dense symmetric linear algebra shared by the estimators and criteria.

Every matrix handled here is small (one row/column per model parameter), so a
single Cholesky-based code path backs all solves, inverses, log-determinants
and positive-definiteness checks.  Clarity and tight error semantics win over
throughput at these sizes.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky

from .exceptions import NotPositiveDefinite, SingularMatrix

__all__ = [
    "cholesky_spd",
    "solve_spd",
    "spd_solver",
    "inv_spd",
    "logdet_spd",
    "is_pd",
    "trace_product_inv",
]

#: Relative tolerance for the symmetry validation applied to every input.
SYMMETRY_RTOL = 1e-12


def _require_symmetric(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    tol = SYMMETRY_RTOL * np.maximum(1.0, np.abs(a))
    if not np.all(np.abs(a - a.T) <= tol):
        raise ValueError(f"{name} is not symmetric")
    return a


def cholesky_spd(a, name="matrix"):
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``.

    Parameters
    ----------
    a : array_like, shape (k, k)
        Symmetric positive definite matrix.
    name : str
        Label used in error messages.

    Raises
    ------
    NotPositiveDefinite
        If ``a`` has a non-positive pivot.
    ValueError
        If ``a`` is not square or not symmetric.
    """
    a = _require_symmetric(a, name)
    try:
        return cholesky(a, lower=True)
    except LinAlgError:
        raise NotPositiveDefinite(f"{name} is not positive definite") from None


def solve_spd(a, b, name="matrix"):
    """Solve ``a @ x = b`` for symmetric positive definite ``a``."""
    factor = cholesky_spd(a, name)
    return cho_solve((factor, True), np.asarray(b, dtype=float))


def spd_solver(a, name="matrix"):
    """Factor ``a`` once and return a ``solve(b)`` callable.

    For repeated solves against the same symmetric positive definite matrix
    (leave-one-out loops, multiple right-hand sides arriving one at a time).
    """
    factor = cholesky_spd(a, name)

    def solve(b):
        return cho_solve((factor, True), np.asarray(b, dtype=float))

    return solve


def inv_spd(a, name="matrix"):
    """Inverse of a symmetric positive definite matrix (via Cholesky)."""
    factor = cholesky_spd(a, name)
    identity = np.eye(a.shape[0] if hasattr(a, "shape") else len(a))
    inverse = cho_solve((factor, True), identity)
    return 0.5 * (inverse + inverse.T)


def logdet_spd(a, name="matrix"):
    """``log det a`` for symmetric positive definite ``a``.

    Computed as twice the log-sum of the Cholesky diagonal, which cannot
    overflow for matrices whose determinant would.
    """
    factor = cholesky_spd(a, name)
    return float(2.0 * np.sum(np.log(np.diag(factor))))


def is_pd(a):
    """Whether the symmetric matrix ``a`` is positive definite."""
    try:
        cholesky_spd(a)
    except NotPositiveDefinite:
        return False
    return True


def trace_product_inv(i_mat, j_mat):
    """``trace(i_mat @ inv(j_mat))`` without forming the inverse.

    ``j_mat`` must be symmetric positive definite; ``i_mat`` symmetric.

    Raises
    ------
    SingularMatrix
        If ``j_mat`` is not invertible as an SPD matrix.
    """
    i_mat = _require_symmetric(i_mat, "i_mat")
    try:
        solved = solve_spd(j_mat, i_mat, name="j_mat")
    except NotPositiveDefinite as exc:
        raise SingularMatrix(str(exc)) from None
    return float(np.trace(solved))
