"""Dense solve helpers with explicit conditioning checks.

Every factorization-based solve in the package funnels through these
wrappers so that near-singular systems fail loudly instead of returning
garbage.  The singularity threshold is a reciprocal condition estimate
below RCOND_FLOOR.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, cho_factor, cho_solve, get_lapack_funcs
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg import solve_triangular as _scipy_solve_triangular

from .errors import NumericalError

RCOND_FLOOR = 1e-14


def solve_spd(a: np.ndarray, b: np.ndarray, *, context: str) -> np.ndarray:
    """Solve a @ x = b for symmetric positive definite a via Cholesky."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    anorm = np.linalg.norm(a, 1)
    try:
        c, lower = cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{context}: matrix is not positive definite") from exc
    (pocon,) = get_lapack_funcs(("pocon",), (c,))
    rcond, info = pocon(c, anorm, uplo="L" if lower else "U")
    if info != 0 or rcond < RCOND_FLOOR:
        raise NumericalError(
            f"{context}: matrix numerically singular (rcond {rcond:.3e})"
        )
    return cho_solve((c, lower), b, check_finite=False)


def solve_general(a: np.ndarray, b: np.ndarray, *, context: str) -> np.ndarray:
    """Solve a @ x = b by LU with partial pivoting, guarding conditioning."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    anorm = np.linalg.norm(a, 1)
    try:
        with warnings.catch_warnings():
            # an exactly singular factor is reported through rcond below
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(a, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{context}: matrix is exactly singular") from exc
    (gecon,) = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond < RCOND_FLOOR:
        raise NumericalError(
            f"{context}: matrix numerically singular (rcond {rcond:.3e})"
        )
    return lu_solve((lu, piv), b, check_finite=False)


def solve_lower_triangular(a: np.ndarray, b: np.ndarray, *, context: str) -> np.ndarray:
    """Forward-substitution solve; the diagonal must be safely nonzero."""
    a = np.ascontiguousarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diag = np.abs(np.diag(a))
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if diag.size == 0 or diag.min() < RCOND_FLOOR * scale:
        raise NumericalError(f"{context}: triangular system has a (near-)zero pivot")
    return _scipy_solve_triangular(a, b, lower=True, check_finite=False)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Average away the rounding skew of a theoretically symmetric matrix."""
    return 0.5 * (a + a.T)
