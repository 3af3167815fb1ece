"""
Column-major vectorization and small dense linear algebra helpers.

All vec/unvec operations stack columns (Fortran order); the Kronecker
identities used by the vectorized Lyapunov ODE assume it.
"""

from typing import Tuple

import numpy as np
import scipy.linalg as sla


def vec(M: np.ndarray) -> np.ndarray:
    """Stack the columns of M into a single vector."""
    return np.reshape(np.asarray(M, dtype=float), (-1,), order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of vec for a rows x cols matrix."""
    return np.reshape(np.asarray(v, dtype=float), (rows, cols), order="F")


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def lower_triangle_indices(n: int) -> np.ndarray:
    """Positions in vec(M) of the entries M[i, j] with i >= j."""
    return np.array([i + j * n for j in range(n) for i in range(j, n)], dtype=int)


def lambda_max(M: np.ndarray) -> float:
    """Largest eigenvalue of the symmetric part of M."""
    return float(np.linalg.eigvalsh(symmetrize(M))[-1])


def lambda_min(M: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of M."""
    return float(np.linalg.eigvalsh(symmetrize(M))[0])


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix (negative eigenvalues clipped)."""
    w, V = np.linalg.eigh(symmetrize(M))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def solve_right_spd(Q: np.ndarray, Y: np.ndarray) -> Tuple[np.ndarray, float]:
    """Return (Y Q^{-1}, cond(Q)) without forming the inverse.

    Q is symmetric positive definite, so Y Q^{-1} = (Q^{-1} Y^T)^T is obtained
    from a Cholesky solve.
    """
    Q = symmetrize(np.asarray(Q, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    cond = float(np.linalg.cond(Q))
    try:
        factor = sla.cho_factor(Q, lower=True)
        K = sla.cho_solve(factor, Y.T).T
    except np.linalg.LinAlgError:
        K = np.linalg.lstsq(Q, Y.T, rcond=None)[0].T
    return K, cond
