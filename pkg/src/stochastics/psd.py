"""
Positive-definite matrix helpers.

Cholesky factorization is the canonical PD check. A single jitter of
``1e-10 * trace / dim`` is tried before a matrix is declared non-PD.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..models.errors import FactorizationError

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-10
JITTER_SCALE = 1e-10


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + np.swapaxes(matrix, -1, -2))


def is_symmetric(matrix: np.ndarray, rtol: float = SYMMETRY_RTOL) -> bool:
    scale = max(float(np.max(np.abs(matrix))), 1.0) if matrix.size else 1.0
    return bool(np.max(np.abs(matrix - matrix.T), initial=0.0) <= rtol * scale)


def cholesky(matrix: np.ndarray, site: str = "unknown") -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive-definite matrix.

    Args:
        matrix: Square symmetric matrix
        site: Name of the calling update, reported on failure

    Returns:
        Lower-triangular factor L with L @ L.T == matrix

    Raises:
        FactorizationError: If the matrix is not symmetric or not PD after one jitter
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        raise FactorizationError(site, f"matrix is not square: {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise FactorizationError(site, "matrix has non-finite entries")
    if not is_symmetric(matrix):
        raise FactorizationError(site, "matrix is not symmetric")
    matrix = symmetrize(matrix)
    try:
        return scipy.linalg.cholesky(matrix, lower=True)
    except np.linalg.LinAlgError:
        pass
    dim = matrix.shape[0]
    jitter = JITTER_SCALE * float(np.trace(matrix)) / dim
    if jitter > 0:
        logger.debug(f"Adding jitter {jitter:.3e} before refactorizing at {site}")
        try:
            return scipy.linalg.cholesky(matrix + jitter * np.eye(dim), lower=True)
        except np.linalg.LinAlgError:
            pass
    raise FactorizationError(site)


def batched_cholesky(matrices: np.ndarray, site: str = "unknown", label: str = "block") -> np.ndarray:
    """Cholesky of a stack (k, p, p); on failure the offending index is named."""
    matrices = symmetrize(np.asarray(matrices, dtype=float))
    try:
        return np.linalg.cholesky(matrices)
    except np.linalg.LinAlgError:
        factors = np.empty_like(matrices)
        for index, matrix in enumerate(matrices):
            factors[index] = cholesky(matrix, site=f"{site} ({label} {index + 1})")
        return factors


def cho_solve_batch(factors: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve A_k x_k = b_k for a stack of lower Cholesky factors L_k (A_k = L_k L_k^T)."""
    solved = np.empty_like(np.asarray(rhs, dtype=float))
    for index, factor in enumerate(factors):
        solved[index] = scipy.linalg.cho_solve((factor, True), rhs[index], check_finite=False)
    return solved


def upper_solve_batch(factors: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve L_k^T x_k = b_k for a stack of lower Cholesky factors."""
    solved = np.empty_like(np.asarray(rhs, dtype=float))
    for index, factor in enumerate(factors):
        solved[index] = scipy.linalg.solve_triangular(factor, rhs[index], lower=True, trans="T",
                                                      check_finite=False)
    return solved


def logdet_from_cholesky(factor: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(factor))))


@dataclass(frozen=True)
class PsdMatrix:
    """A validated symmetric positive-definite matrix with its Cholesky factor."""

    entries: np.ndarray
    chol: np.ndarray = field(repr=False)

    @classmethod
    def from_array(cls, entries, site: str = "PsdMatrix") -> "PsdMatrix":
        array = np.atleast_2d(np.asarray(entries, dtype=float))
        factor = cholesky(array, site=site)
        return cls(entries=symmetrize(array), chol=factor)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])


def inverse_pd(matrix: np.ndarray, site: str = "unknown") -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix through its Cholesky factor."""
    factor = cholesky(matrix, site=site)
    inverse = scipy.linalg.cho_solve((factor, True), np.eye(factor.shape[0]))
    return symmetrize(inverse)
