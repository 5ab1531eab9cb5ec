"""
Partitioning Around Medoids on a dissimilarity matrix, silhouette-based
choice of the cluster count, and the representative clustering built from a
posterior similarity matrix.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from sklearn.metrics import silhouette_score

from ..models.errors import ParameterError
from ..stochastics.rng import RngStream

logger = logging.getLogger(__name__)

SWAP_TOLERANCE = 1e-12
ROW_CHUNK = 1024
DEFAULT_MAX_EXACT = 12000


@dataclass
class PamResult:
    labels: np.ndarray          # 0-based, ordered by medoid index
    medoids: np.ndarray         # ascending point indices
    objective: float
    history: List[float] = field(default_factory=list)
    sampled: bool = False


def validate_dissimilarity(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ParameterError(f"dissimilarity must be a square matrix, got shape {D.shape}")
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise ParameterError("dissimilarity entries must be finite and nonnegative")
    if np.max(np.abs(D - D.T), initial=0.0) > 1e-12:
        raise ParameterError("dissimilarity must be symmetric")
    if np.any(np.diag(D) != 0):
        raise ParameterError("dissimilarity must have a zero diagonal")
    return D


def assign_to_medoids(D: np.ndarray, medoids: np.ndarray) -> np.ndarray:
    """Nearest medoid per point; ties go to the lowest medoid index (medoids sorted)."""
    return np.argmin(D[:, medoids], axis=1).astype(np.int64)


def _nearest_two(D: np.ndarray, medoids: np.ndarray):
    distances = D[:, medoids]
    if medoids.size == 1:
        return np.zeros(D.shape[0], dtype=np.int64), distances[:, 0], np.full(D.shape[0], np.inf)
    order = np.argsort(distances, axis=1, kind="stable")
    rows = np.arange(D.shape[0])
    return order[:, 0], distances[rows, order[:, 0]], distances[rows, order[:, 1]]


def _build(D: np.ndarray, k: int) -> np.ndarray:
    n = D.shape[0]
    medoids = [int(np.argmin(D.sum(axis=1)))]
    nearest = D[:, medoids[0]].copy()
    for _ in range(1, k):
        gains = np.maximum(nearest[None, :] - D, 0.0).sum(axis=1)
        gains[medoids] = -np.inf
        candidate = int(np.argmax(gains))
        medoids.append(candidate)
        nearest = np.minimum(nearest, D[:, candidate])
    return np.array(medoids, dtype=np.int64)


def _best_swap(D: np.ndarray, medoids: np.ndarray):
    """Most negative cost change over all (medoid, non-medoid) swaps."""
    n, k = D.shape[0], medoids.size
    near, d1, d2 = _nearest_two(D, medoids)
    membership = np.zeros((n, k))
    membership[np.arange(n), near] = 1.0
    is_medoid = np.zeros(n, dtype=bool)
    is_medoid[medoids] = True
    best = (0.0, -1, -1)
    for start in range(0, n, ROW_CHUNK):
        block = D[start:start + ROW_CHUNK]
        gain_other = np.minimum(block - d1[None, :], 0.0)
        own = np.minimum(block, d2[None, :]) - d1[None, :]
        delta = gain_other.sum(axis=1)[:, None] + (own - gain_other) @ membership
        delta[is_medoid[start:start + ROW_CHUNK]] = np.inf
        flat = int(np.argmin(delta))
        h, i = divmod(flat, k)
        if delta[h, i] < best[0]:
            best = (float(delta[h, i]), start + h, i)
    return best


def pam(D: np.ndarray, k: int, max_iter: int = 1000) -> PamResult:
    """
    Exact PAM (BUILD then SWAP until no single swap lowers the cost).

    Args:
        D: Square symmetric nonnegative dissimilarity matrix with zero diagonal
        k: Number of medoids, 2 <= k < n

    Returns:
        PamResult; ``history`` holds the objective after BUILD and after each swap

    Raises:
        ParameterError: If D is malformed or k is out of range
    """
    D = validate_dissimilarity(D)
    n = D.shape[0]
    if not 2 <= k < n:
        raise ParameterError(f"k must satisfy 2 <= k < n = {n}, got {k}")
    medoids = _build(D, k)
    objective = float(D[:, medoids].min(axis=1).sum())
    history = [objective]
    for _ in range(max_iter):
        delta, h, i = _best_swap(D, medoids)
        if delta >= -SWAP_TOLERANCE:
            break
        medoids[i] = h
        objective = float(D[:, medoids].min(axis=1).sum())
        history.append(objective)
    medoids = np.sort(medoids)
    return PamResult(labels=assign_to_medoids(D, medoids), medoids=medoids,
                     objective=float(D[:, medoids].min(axis=1).sum()), history=history)


def _pam_on_sample(D: np.ndarray, sample: np.ndarray, k: int) -> PamResult:
    local = pam(D[np.ix_(sample, sample)], k)
    medoids = np.sort(sample[local.medoids])
    return PamResult(labels=assign_to_medoids(D, medoids), medoids=medoids,
                     objective=float(D[:, medoids].min(axis=1).sum()), history=local.history, sampled=True)


def select_k(D: np.ndarray, k_max: int, results: Optional[Dict[int, PamResult]] = None,
             scores: Optional[Dict[int, float]] = None) -> int:
    """
    Cluster count with the largest average silhouette width; ties go to the smallest k.

    Args:
        D: Dissimilarity matrix
        k_max: Largest count considered (capped at n - 1)
        results: Optional dict filled with the PAM result per k
        scores: Optional dict filled with the silhouette width per k

    Returns:
        k* in [2, min(k_max, n - 1)]
    """
    if k_max < 2:
        raise ParameterError(f"k_max must be >= 2, got {k_max}")
    D = validate_dissimilarity(D)
    if D.shape[0] < 3:
        raise ParameterError(f"choosing k needs at least 3 points, got {D.shape[0]}")
    best_k, best_score = 2, -np.inf
    for k in range(2, min(k_max, D.shape[0] - 1) + 1):
        result = pam(D, k)
        if results is not None:
            results[k] = result
        if np.unique(result.labels).size < 2:
            continue
        score = float(silhouette_score(D, result.labels, metric="precomputed"))
        logger.debug(f"k={k}: silhouette {score:.4f}")
        if scores is not None:
            scores[k] = score
        if score > best_score + 1e-12:
            best_k, best_score = k, score
    return best_k


@dataclass
class RepresentativeClustering:
    subset_ids: np.ndarray      # 0-based observation indices
    labels: np.ndarray          # 0-based representative labels
    k: int
    medoids: np.ndarray         # 0-based observation indices of the medoids
    sizes: np.ndarray
    silhouette: Dict[int, float] = field(default_factory=dict)
    method: str = "pam"
    k_rule: str = "silhouette"

    def as_dict(self) -> Dict[str, object]:
        return {
            "k": self.k, "method": self.method, "k_rule": self.k_rule,
            "medoids": [int(m) + 1 for m in self.medoids],
            "sizes": [int(s) for s in self.sizes],
            "silhouette": {str(k): v for k, v in self.silhouette.items()},
        }


def representative_clustering(D: np.ndarray, subset_ids: np.ndarray, k_max: int = 30,
                              k: Optional[int] = None, max_exact: int = DEFAULT_MAX_EXACT,
                              allow_sampled: bool = False, rng: Optional[RngStream] = None) -> RepresentativeClustering:
    """
    Representative clustering Z* from a dissimilarity matrix D = 1 - S.

    Raises:
        ParameterError: If the subset exceeds ``max_exact`` without opting in to sampled PAM
    """
    n = D.shape[0]
    if n > max_exact and not allow_sampled:
        raise ParameterError(f"subset of {n} observations exceeds the exact PAM limit {max_exact}; "
                             "reduce the subset or opt in to sampled PAM")
    silhouette: Dict[int, float] = {}
    if n > max_exact:
        rng = rng or RngStream(0)
        sample = np.sort(rng.generator.choice(n, size=max_exact, replace=False))
        if k is None:
            chosen = select_k(D[np.ix_(sample, sample)], k_max, scores=silhouette)
            k_rule = "silhouette (sampled)"
        else:
            chosen, k_rule = k, "fixed"
        result = _pam_on_sample(D, sample, chosen)
        method = "pam-sampled"
    else:
        results: Dict[int, PamResult] = {}
        if k is None:
            chosen = select_k(D, k_max, results, silhouette)
            k_rule = "silhouette"
        else:
            chosen = k
            k_rule = "fixed"
        result = results[chosen] if chosen in results else pam(D, chosen)
        method = "pam"
    sizes = np.bincount(result.labels, minlength=chosen)
    logger.info(f"Representative clustering: k={chosen} ({k_rule}), sizes {sizes.tolist()}")
    return RepresentativeClustering(subset_ids=np.asarray(subset_ids), labels=result.labels, k=chosen,
                                    medoids=np.asarray(subset_ids)[result.medoids], sizes=sizes,
                                    silhouette=silhouette, method=method, k_rule=k_rule)
