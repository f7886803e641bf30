"""Numeric inner loops of the time march.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version.  The public names at the bottom of the module are bound to one of
them according to :data:`l1galerkin._backend.BACKEND`; both families stay
importable (``NUMBA_KERNELS`` / ``NUMPY_KERNELS``) so they can be compared
against each other in tests and benchmarks.

Tridiagonal matrices are passed as three arrays of equal length ``n``:
``lower[0]`` and ``upper[-1]`` are ignored.
"""

import numpy as np

from ._backend import BACKEND, HAS_NUMBA


class PivotError(ArithmeticError):
    """Raised by the Thomas solve when a pivot is not strictly positive."""


# {{{ numpy kernels


def _thomas_numpy(lower, diag, upper, rhs):
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    piv = diag[0]
    if not piv > 0.0:
        raise PivotError("non-positive pivot at row 0")
    cp[0] = upper[0] / piv
    dp[0] = rhs[0] / piv
    for k in range(1, n):
        piv = diag[k] - lower[k] * cp[k - 1]
        if not piv > 0.0:
            raise PivotError(f"non-positive pivot at row {k}")
        cp[k] = upper[k] / piv
        dp[k] = (rhs[k] - lower[k] * dp[k - 1]) / piv
    x = dp
    for k in range(n - 2, -1, -1):
        x[k] -= cp[k] * x[k + 1]
    return x


def _tridiag_matvec_numpy(lower, diag, upper, x):
    y = diag * x
    y[1:] += lower[1:] * x[:-1]
    y[:-1] += upper[:-1] * x[1:]
    return y


def _weighted_row_sum_numpy(coeffs, rows):
    # sum_k coeffs[k] * rows[k, :]
    return coeffs @ rows


# }}}

NUMPY_KERNELS = {
    "thomas_solve": _thomas_numpy,
    "tridiag_matvec": _tridiag_matvec_numpy,
    "weighted_row_sum": _weighted_row_sum_numpy,
}

# {{{ numba kernels

if HAS_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _thomas_core(lower, diag, upper, rhs, x):
        # returns -1 on success, otherwise the row with a bad pivot
        n = diag.shape[0]
        cp = np.empty(n)
        piv = diag[0]
        if not piv > 0.0:
            return 0
        cp[0] = upper[0] / piv
        x[0] = rhs[0] / piv
        for k in range(1, n):
            piv = diag[k] - lower[k] * cp[k - 1]
            if not piv > 0.0:
                return k
            cp[k] = upper[k] / piv
            x[k] = (rhs[k] - lower[k] * x[k - 1]) / piv
        for k in range(n - 2, -1, -1):
            x[k] -= cp[k] * x[k + 1]
        return -1

    def _thomas_numba(lower, diag, upper, rhs):
        x = np.empty(diag.shape[0])
        bad = _thomas_core(lower, diag, upper, rhs, x)
        if bad >= 0:
            raise PivotError(f"non-positive pivot at row {bad}")
        return x

    @njit(cache=True)
    def _tridiag_matvec_numba(lower, diag, upper, x):
        n = x.shape[0]
        y = np.empty(n)
        for k in range(n):
            acc = diag[k] * x[k]
            if k > 0:
                acc += lower[k] * x[k - 1]
            if k < n - 1:
                acc += upper[k] * x[k + 1]
            y[k] = acc
        return y

    @njit(cache=True)
    def _weighted_row_sum_numba(coeffs, rows):
        m = rows.shape[1]
        out = np.zeros(m)
        for k in range(coeffs.shape[0]):
            c = coeffs[k]
            for j in range(m):
                out[j] += c * rows[k, j]
        return out

    NUMBA_KERNELS = {
        "thomas_solve": _thomas_numba,
        "tridiag_matvec": _tridiag_matvec_numba,
        "weighted_row_sum": _weighted_row_sum_numba,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = dict(NUMPY_KERNELS)

# }}}

_ACTIVE = NUMBA_KERNELS if BACKEND == "numba" else NUMPY_KERNELS


def thomas_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system with the Thomas algorithm (no pivoting).

    Intended for symmetric positive definite matrices, so every pivot must
    come out strictly positive; otherwise :class:`PivotError` is raised.
    """
    return _ACTIVE["thomas_solve"](
        *(np.ascontiguousarray(a, dtype=np.float64) for a in (lower, diag, upper, rhs))
    )


def tridiag_matvec(lower, diag, upper, x):
    """Return ``T @ x`` for the tridiagonal ``T = (lower, diag, upper)``."""
    return _ACTIVE["tridiag_matvec"](
        *(np.ascontiguousarray(a, dtype=np.float64) for a in (lower, diag, upper, x))
    )


def weighted_row_sum(coeffs, rows):
    """Return ``sum_k coeffs[k] * rows[k]`` for a 2d ``rows`` array."""
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != coeffs.shape[0]:
        raise ValueError(
            f"shape mismatch: {coeffs.shape[0]} coefficients for rows {rows.shape}"
        )
    return _ACTIVE["weighted_row_sum"](coeffs, rows)
