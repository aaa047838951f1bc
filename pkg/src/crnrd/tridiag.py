"""Thomas algorithm, batched over columns, and the implicit Neumann diffusion operator."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _thomas(lower, diag, upper, rhs, out):
    n, k = rhs.shape
    cp = np.empty(n)
    dp = np.empty(n)
    for j in range(k):
        den = diag[0, j]
        cp[0] = upper[0, j] / den
        dp[0] = rhs[0, j] / den
        for i in range(1, n):
            den = diag[i, j] - lower[i, j] * cp[i - 1]
            cp[i] = upper[i, j] / den
            dp[i] = (rhs[i, j] - lower[i, j] * dp[i - 1]) / den
        out[n - 1, j] = dp[n - 1]
        for i in range(n - 2, -1, -1):
            out[i, j] = dp[i] - cp[i] * out[i + 1, j]


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve ``T x = rhs`` for tridiagonal T, one system per column of ``rhs``.

    Parameters
    ----------
    lower, diag, upper : array_like
        Diagonals of length n (``lower[0]`` and ``upper[-1]`` are ignored),
        or (n, k) arrays when each column has its own matrix.
    rhs : array_like
        (n,) or (n, k) right-hand sides.

    No pivoting; intended for diagonally dominant systems.
    """
    rhs = np.asarray(rhs, dtype=float)
    vec = rhs.ndim == 1
    rhs2 = rhs.reshape(rhs.shape[0], -1)
    n, k = rhs2.shape

    def prep(a):
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = np.repeat(a[:, None], k, axis=1)
        return np.ascontiguousarray(a)

    lo, di, up = prep(lower), prep(diag), prep(upper)
    out = np.empty_like(rhs2)
    _thomas(lo, di, up, np.ascontiguousarray(rhs2), out)
    return out[:, 0] if vec else out


@njit(cache=True, nogil=True)
def _neumann_sweep(cp, inv_den, a, rhs, out):
    # lower = upper = -a[j]; cp and inv_den precomputed per column
    n, k = rhs.shape
    dp = np.empty(n)
    for j in range(k):
        aj = a[j]
        dp[0] = rhs[0, j] * inv_den[0, j]
        for i in range(1, n):
            dp[i] = (rhs[i, j] + aj * dp[i - 1]) * inv_den[i, j]
        out[n - 1, j] = dp[n - 1]
        for i in range(n - 2, -1, -1):
            out[i, j] = dp[i] - cp[i, j] * out[i + 1, j]


class NeumannImplicit:
    """Factored ``I - a * Lap_h`` for the cell-centred Neumann Laplacian.

    ``a = dt * D / dx**2`` is given per column; the matrix has diagonal
    ``1 + 2a`` (``1 + a`` in the two end cells) and off-diagonals ``-a``.
    Every column sums to one, so a solve preserves the cell sum.
    """

    def __init__(self, n: int, a):
        a = np.ascontiguousarray(np.atleast_1d(np.asarray(a, dtype=float)))
        k = a.size
        diag = np.repeat((1.0 + 2.0 * a)[None, :], n, axis=0)
        diag[0] -= a
        diag[-1] -= a
        cp = np.zeros((n, k))
        inv_den = np.empty((n, k))
        inv_den[0] = 1.0 / diag[0]
        cp[0] = -a * inv_den[0]
        for i in range(1, n):
            inv_den[i] = 1.0 / (diag[i] + a * cp[i - 1])
            cp[i] = -a * inv_den[i]
        cp[-1] = 0.0
        self.n = n
        self.a = a
        self.cp = cp
        self.inv_den = inv_den

    def solve(self, rhs: np.ndarray, cols: slice = slice(None)) -> np.ndarray:
        rhs = np.ascontiguousarray(rhs, dtype=float)
        out = np.empty_like(rhs)
        _neumann_sweep(
            np.ascontiguousarray(self.cp[:, cols]),
            np.ascontiguousarray(self.inv_den[:, cols]),
            np.ascontiguousarray(self.a[cols]),
            rhs,
            out,
        )
        return out


def neumann_laplacian_matrix(n: int, dx: float) -> np.ndarray:
    """Dense ghost-cell Neumann Laplacian (for tests and small problems)."""
    A = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    A[0, 0] = A[-1, -1] = -1.0
    return A / dx**2
