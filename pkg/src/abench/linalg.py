"""Dense linear-algebra kernel.

Vectors and matrices are plain ``numpy.ndarray`` objects of dtype float64.
LU factorization is delegated to LAPACK (``getrf`` through scipy) with our
own singularity test on the pivots; the least-squares solve uses a
Householder QR with truncation of rank-deficient directions.
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import DegenerateInputError, DimensionError, EvaluationError, SingularMatrixError

PIVOT_RTOL = 1e-14
RANK_RTOL = 1e-12


def norm2(v) -> float:
    """Euclidean norm. NaN components propagate."""
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(np.dot(v, v)))


def dot(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


def direction_cosine(u, v) -> float:
    """Cosine of the angle between ``u`` and ``v``, clamped to [-1, 1]."""
    nu, nv = norm2(u), norm2(v)
    if not (nu > 0 and nv > 0):
        raise DegenerateInputError("direction cosine of a zero vector")
    c = dot(u, v) / (nu * nv)
    return min(1.0, max(-1.0, c))


def lu_solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting.

    A pivot ``|U[j, j]|`` smaller than ``1e-14`` times the largest magnitude
    in row ``j`` of ``U`` is treated as singular. Comparing against the
    pivot's own row keeps the test invariant under row scaling, which the
    Jacobians here need (rows can differ by hundreds of orders of magnitude).

    Raises
    ------
    SingularMatrixError
        If any pivot falls below the threshold.
    DimensionError
        If ``A`` is not square or ``b`` has the wrong length.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix must be square, got {A.shape}")
    if b.shape != (A.shape[0],):
        raise DimensionError(f"rhs length {b.shape} does not match {A.shape}")
    if not np.all(np.isfinite(A)):
        raise SingularMatrixError("matrix has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    rowmax = np.max(np.abs(np.triu(lu)), axis=1)
    if np.any(pivots == 0.0) or np.any(pivots < PIVOT_RTOL * rowmax):
        raise SingularMatrixError("pivot below singularity threshold")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def qr_least_squares(F, rhs) -> np.ndarray:
    """Minimize ``||rhs - F g||`` over ``g`` with a Householder QR of ``F``.

    Components whose diagonal entry of ``R`` is below ``1e-12`` times the
    largest diagonal magnitude are set to zero and skipped in the back
    substitution.
    """
    F = np.asarray(F, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    n, m = F.shape
    if m < 1 or m > n:
        raise DimensionError(f"need 1 <= m <= n, got F of shape {F.shape}")
    if rhs.shape != (n,):
        raise DimensionError(f"rhs length {rhs.shape} does not match {F.shape}")
    if not np.any(F):
        raise DegenerateInputError("least-squares matrix is entirely zero")
    # numpy's qr is LAPACK geqrf (Householder reflections)
    Q, R = np.linalg.qr(F, mode="reduced")
    c = Q.T @ rhs
    d = np.abs(np.diag(R))
    keep = d >= RANK_RTOL * d.max()
    gamma = np.zeros(m)
    for j in range(m - 1, -1, -1):
        if keep[j]:
            gamma[j] = (c[j] - R[j, j + 1:] @ gamma[j + 1:]) / R[j, j]
    return gamma


def fd_jacobian(f, x, h=None) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``.

    Parameters
    ----------
    f : callable
        Residual map taking and returning 1-D arrays.
    x : array_like
        Evaluation point.
    h : float, optional
        Fixed step for every column. By default column ``j`` uses
        ``1e-6 * max(1, |x_j|)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if h is not None and not h > 0:
        raise ValueError("step h must be positive")
    cols = []
    for j in range(n):
        hj = h if h is not None else 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += hj
        xm[j] -= hj
        fp = np.asarray(f(xp), dtype=float)
        fm = np.asarray(f(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise EvaluationError(f"non-finite residual while differencing column {j}")
        cols.append((fp - fm) / (2.0 * hj))
    return np.column_stack(cols)
