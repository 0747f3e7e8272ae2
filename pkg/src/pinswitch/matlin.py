"""Small dense linear-algebra kernel used by the certificate checks.

All routines take and return plain numpy arrays. Nothing here is sparse or
complex; the design envelope is m up to a few hundred.
"""

import numpy as np
from scipy.sparse.csgraph import connected_components

# relative tolerance for residuals, absolute floor below it
REL_TOL = 1e-9
ABS_TOL = 1e-12


class DimensionError(ValueError):
    pass


class NumericError(ValueError):
    pass


class ConnectivityError(ValueError):
    pass


def _square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def _finite(A):
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has NaN or Inf entries")
    return A


def maxabs(A):
    """Largest absolute entry, i.e. ``max_ij |a_ij|``.

    This is what ``||A||_inf`` means in the certificate formulas; it is not
    the induced row-sum norm.
    """
    A = np.asarray(A, dtype=float)
    return float(np.max(np.abs(A))) if A.size else 0.0


def symmetric_part(A):
    """Return ``(A + A.T) / 2``."""
    A = _finite(_square(A))
    return 0.5 * (A + A.T)


def kron(A, B):
    return np.kron(np.atleast_2d(np.asarray(A, float)), np.atleast_2d(np.asarray(B, float)))


def sym_eig_extremes(S):
    """Smallest and largest eigenvalue of a symmetric matrix.

    The input is symmetrized first so that roundoff asymmetry is harmless.
    Inputs that are far from symmetric are rejected.
    """
    S = _finite(_square(S))
    scale = max(1.0, maxabs(S) * S.shape[0])
    if maxabs(S - S.T) > 1e-9 * scale:
        raise DimensionError("matrix is not symmetric")
    w = np.linalg.eigvalsh(0.5 * (S + S.T))
    return float(w[0]), float(w[-1])


def lambda_max(A):
    """Largest eigenvalue of the symmetric part of ``A``."""
    return sym_eig_extremes(symmetric_part(A))[1]


def lambda_min(A):
    return sym_eig_extremes(symmetric_part(A))[0]


def is_metzler_zero_row_sum(L, tol=ABS_TOL):
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        return False
    off = L - np.diag(np.diag(L))
    scale = max(1.0, maxabs(L))
    return bool(np.all(off >= 0) and np.all(np.abs(L.sum(axis=1)) <= tol * scale))


def check_metzler(L, name="L"):
    L = _finite(_square(L, name))
    if not is_metzler_zero_row_sum(L):
        raise ValueError(f"{name} is not a Metzler matrix with zero row sums")
    return L


def rebalance_diagonal(L):
    """Reset the diagonal so every row sums to exactly zero."""
    L = np.array(L, dtype=float)
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def is_strongly_connected(L):
    """True iff the graph with an edge j -> i for every l_ij > 0 is strongly connected."""
    L = _square(L)
    m = L.shape[0]
    if m <= 1:
        return True
    adj = (L > 0).astype(float)
    np.fill_diagonal(adj, 0.0)
    # adj[i, j] > 0 encodes j -> i; strong connectivity is direction-symmetric
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


def perron_left_vector(L):
    """Positive left null vector of an irreducible Metzler zero-row-sum matrix.

    Solves ``p^T L = 0`` with ``sum(p) = 1`` by replacing one equation of the
    transposed system with the normalization (LU with partial pivoting). If the
    residual is poor, falls back to power iteration on ``I + L^T / s``.

    Raises
    ------
    ConnectivityError
        If ``L`` is reducible.
    """
    L = check_metzler(L)
    m = L.shape[0]
    if not is_strongly_connected(L):
        raise ConnectivityError("coupling matrix is not strongly connected")
    if m == 1:
        return np.ones(1)

    A = L.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    tol = max(REL_TOL * maxabs(L), ABS_TOL)
    try:
        p = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        p = None
    if p is None or maxabs(p @ L) > tol or np.any(p <= 0):
        p = _perron_power(L)
    if np.any(p <= 0) or maxabs(p @ L) > tol:
        raise NumericError("Perron vector did not converge")
    return p / p.sum()


def _perron_power(L, iters=100000):
    m = L.shape[0]
    s = 2.0 * np.max(np.abs(np.diag(L))) + 1.0
    M = np.eye(m) + L / s  # row-stochastic, aperiodic
    p = np.full(m, 1.0 / m)
    for _ in range(iters):
        nxt = p @ M
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - p)) < 1e-15:
            return nxt
        p = nxt
    return p
