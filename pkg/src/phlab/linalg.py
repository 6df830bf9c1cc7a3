"""Dense linear algebra helpers for tiny matrices.

Everything in the experiments lives in dimension <= 8, so singular values
are computed with a one-sided Jacobi sweep instead of a LAPACK call.  That
keeps the operator-norm / conorm pair self-contained and gives the test
suite an implementation that is independent of ``numpy.linalg.svd``.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularMatrix

_JACOBI_TOL = 1e-14
_JACOBI_SWEEPS = 60


def singular_values(mat) -> np.ndarray:
    """Singular values of a small dense matrix, descending.

    One-sided Jacobi: orthogonalize the columns of ``A`` by plane
    rotations; the column norms of the limit are the singular values.
    """
    a = np.array(mat, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    m, n = a.shape
    transposed = m < n
    if transposed:
        a = a.T
        m, n = a.shape
    for _ in range(_JACOBI_SWEEPS):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[:, p] @ a[:, q])
                app = float(a[:, p] @ a[:, p])
                aqq = float(a[:, q] @ a[:, q])
                off = max(off, abs(apq) / max(np.sqrt(app * aqq), 1e-300))
                if abs(apq) <= _JACOBI_TOL * np.sqrt(app * aqq):
                    continue
                tau = (aqq - app) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
        if off <= _JACOBI_TOL:
            break
    vals = np.sqrt(np.sum(a * a, axis=0))
    vals.sort()
    return vals[::-1]


def operator_norm(mat) -> float:
    """Largest singular value (operator norm for the Euclidean norm)."""
    return float(singular_values(mat)[0])


def conorm(mat) -> float:
    """Smallest singular value; equals 1/||M^-1||.

    Raises SingularMatrix when the matrix is numerically singular.
    """
    vals = singular_values(mat)
    small = float(vals[-1])
    if small < 1e-14:
        raise SingularMatrix(f"conorm {small:.3e} below 1e-14")
    return small


def principal_angles(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of ``u`` and ``v``."""
    qu, _ = np.linalg.qr(np.atleast_2d(u))
    qv, _ = np.linalg.qr(np.atleast_2d(v))
    sv = np.linalg.svd(qu.T @ qv, compute_uv=False)
    return np.arccos(np.clip(sv, -1.0, 1.0))


def subspace_gap(u: np.ndarray, v: np.ndarray) -> float:
    """sin of the largest principal angle between two subspaces."""
    ang = principal_angles(u, v)
    return float(np.max(np.sin(ang))) if ang.size else 0.0


def solve_small(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` for a small matrix, with a singularity guard."""
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize a vector; raises on the zero vector."""
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return np.asarray(v, dtype=float) / n
