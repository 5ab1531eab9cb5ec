"""
Clustering and estimation accuracy metrics.
"""

import numpy as np
from sklearn.metrics import adjusted_rand_score
from sklearn.metrics.cluster import contingency_matrix

from ..models.errors import ParameterError


def _paired(a, b):
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.size != b.size:
        raise ParameterError(f"label vectors differ in length ({a.size} vs {b.size})")
    if a.size == 0:
        raise ParameterError("label vectors are empty")
    return a, b


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index of two partitions."""
    a, b = _paired(a, b)
    return float(adjusted_rand_score(a, b))


def purity(pred, truth) -> float:
    """Fraction of observations carrying the majority true class of their predicted cluster."""
    pred, truth = _paired(pred, truth)
    table = contingency_matrix(truth, pred)
    return float(table.max(axis=0).sum() / pred.size)


def relative_rmse(estimate, truth) -> float:
    """||estimate - truth|| / ||truth|| (Euclidean for vectors, Frobenius for matrices)."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ParameterError(f"estimate shape {estimate.shape} does not match truth shape {truth.shape}")
    scale = np.linalg.norm(truth.ravel())
    if scale == 0:
        raise ParameterError("relative RMSE is undefined for a zero-norm truth")
    return float(np.linalg.norm((estimate - truth).ravel()) / scale)
