import logging
from typing import List

import numpy as np

from predevaltools.core.exceptions import DataError, NumericalError

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-9
CONVERGENCE_TOLERANCE = 1e-12
MAX_SWEEPS = 100


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a ** 2) - np.sum(np.diag(a) ** 2)))


def _rotate(a: np.ndarray, p: int, q: int) -> None:
    """Apply one Jacobi rotation in place so that a[p, q] becomes zero."""
    apq = a[p, q]
    if apq == 0.0:
        return

    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0.0 else 1.0
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q

    a[p, q] = 0.0
    a[q, p] = 0.0


def sym_eigenvalues(matrix: np.ndarray) -> List[float]:
    """
    Eigenvalues of a real symmetric matrix by cyclic Jacobi sweeps.

    Sweeps visit every (p, q) pair above the diagonal and stop once the off-diagonal
    Frobenius norm falls below CONVERGENCE_TOLERANCE * ||A||_F.

    Parameters:
        matrix (np.ndarray): k×k matrix, symmetric within SYMMETRY_TOLERANCE.

    Returns:
        List[float]: The k eigenvalues, sorted descending.

    Raises:
        DataError: If the matrix is not square, not finite or not symmetric.
        NumericalError: If MAX_SWEEPS sweeps do not converge.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f'expected a square matrix, got shape {a.shape}')
    if not np.isfinite(a).all():
        raise DataError('matrix has non-finite entries')
    asymmetry = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asymmetry > SYMMETRY_TOLERANCE:
        raise DataError(f'matrix is not symmetric (max |A - A^T| = {asymmetry:.3e})')

    a = (a + a.T) / 2.0
    k = a.shape[0]
    scale = float(np.linalg.norm(a))
    if scale == 0.0 or k == 1:
        return sorted(np.diag(a).tolist(), reverse=True)

    threshold = CONVERGENCE_TOLERANCE * scale
    for sweep in range(MAX_SWEEPS):
        if _off_diagonal_norm(a) < threshold:
            logger.debug('Jacobi converged after %d sweep(s) for k=%d', sweep, k)
            return sorted(np.diag(a).tolist(), reverse=True)
        for p in range(k - 1):
            for q in range(p + 1, k):
                _rotate(a, p, q)

    if _off_diagonal_norm(a) < threshold:
        return sorted(np.diag(a).tolist(), reverse=True)
    raise NumericalError(f'Jacobi eigensolver did not converge within {MAX_SWEEPS} sweeps (k={k})')


def nuclear_norm_raw(matrix: np.ndarray) -> float:
    """
    Sum of singular values of an n×k matrix.

    Uses the eigenvalues of the smaller Gram matrix (PᵀP when k <= n, PPᵀ otherwise);
    round-off negatives are clamped to zero before the square root.

    Raises:
        DataError: If the matrix is not 2-dimensional or has non-finite entries.
    """
    p = np.asarray(matrix, dtype=np.float64)
    if p.ndim != 2:
        raise DataError(f'expected a 2-dimensional matrix, got {p.ndim} dimension(s)')
    if not np.isfinite(p).all():
        raise DataError('matrix has non-finite entries')

    n, k = p.shape
    gram = p.T @ p if k <= n else p @ p.T
    eigenvalues = np.asarray(sym_eigenvalues(gram))
    return float(np.sum(np.sqrt(np.clip(eigenvalues, 0.0, None))))
