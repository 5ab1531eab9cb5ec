"""
Posterior similarity matrix.

S[i, i'] is the fraction of kept draws in which observations i and i' share
a cluster. Draws are streamed from the chain in chunks; each worker keeps a
partial co-occurrence count that is summed at the end.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..models.errors import DataError, ParameterError
from ..sampler.chain_store import ChainStore
from ..stochastics.rng import RngStream

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 32


@dataclass
class SimilarityMatrix:
    subset_ids: np.ndarray      # 0-based observation indices
    S: np.ndarray
    n_draws: int

    @property
    def dim(self) -> int:
        return int(self.subset_ids.size)

    def dissimilarity(self) -> np.ndarray:
        D = 1.0 - self.S
        np.fill_diagonal(D, 0.0)
        return D

    def save(self, path: Path) -> Path:
        """Binary file with header fields ``dim`` and 1-based ``subset_ids``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            np.savez(f, dim=np.int64(self.dim), subset_ids=self.subset_ids.astype("<i8") + 1,
                     n_draws=np.int64(self.n_draws), S=self.S.astype("<f8"))
        return path

    @classmethod
    def load(cls, path: Path) -> "SimilarityMatrix":
        with np.load(Path(path)) as payload:
            S = np.array(payload["S"])
            subset_ids = np.array(payload["subset_ids"], dtype=np.int64) - 1
            if int(payload["dim"]) != S.shape[0] or subset_ids.size != S.shape[0]:
                raise DataError(f"similarity file {path} has an inconsistent header")
            return cls(subset_ids=subset_ids, S=S, n_draws=int(payload["n_draws"]))


def default_subset(n: int, size: Optional[int], rng: RngStream) -> np.ndarray:
    """Sorted random subset of ``size`` observation indices (all when size is None or >= n)."""
    if size is None or size >= n:
        return np.arange(n)
    if size < 2:
        raise ParameterError(f"similarity subset needs at least 2 observations, got {size}")
    return np.sort(rng.generator.choice(n, size=size, replace=False))


def _co_occurrence(chunk: np.ndarray, C: int) -> np.ndarray:
    """Sum over draws of one-hot(Z) one-hot(Z)^T for a (draws, s) label chunk."""
    draws, size = chunk.shape
    onehot = np.zeros((size, draws * C))
    onehot[np.repeat(np.arange(size)[None, :], draws, axis=0).ravel(),
           (chunk + C * np.arange(draws)[:, None]).ravel()] = 1.0
    return onehot @ onehot.T


def co_occurrence_counts(chunks: Iterable[np.ndarray], subset_ids: np.ndarray, C: int,
                         workers: int = 1) -> tuple:
    """Total co-occurrence counts and number of draws over a stream of allocation chunks."""
    size = subset_ids.size
    total = np.zeros((size, size))
    n_draws = 0

    def work(chunk: np.ndarray) -> np.ndarray:
        return _co_occurrence(np.asarray(chunk)[:, subset_ids], C)

    if workers <= 1:
        for chunk in chunks:
            total += work(chunk)
            n_draws += chunk.shape[0]
        return total, n_draws
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="similarity") as executor:
        futures = []
        for chunk in chunks:
            futures.append(executor.submit(work, chunk))
            n_draws += chunk.shape[0]
        for future in futures:
            total += future.result()
    return total, n_draws


def build_similarity(chain: ChainStore, subset_ids: Optional[np.ndarray] = None,
                     workers: int = 1, chunk_size: int = DEFAULT_CHUNK,
                     max_draws: Optional[int] = None) -> SimilarityMatrix:
    """
    Posterior co-clustering frequencies over the chain's kept draws.

    Args:
        chain: Chain with allocation draws
        subset_ids: 0-based observation indices (default: all observations)
        workers: Threads accumulating partial counts
        chunk_size: Draws per streamed chunk
        max_draws: Use only the last ``max_draws`` kept draws

    Returns:
        SimilarityMatrix with unit diagonal

    Raises:
        DataError: If the chain holds no draws
        ParameterError: If a subset index is out of range
    """
    if chain.is_empty:
        raise DataError("cannot build a similarity matrix from an empty chain")
    n = chain.meta.n
    subset_ids = np.arange(n) if subset_ids is None else np.asarray(subset_ids, dtype=np.int64)
    if subset_ids.size == 0 or subset_ids.min() < 0 or subset_ids.max() >= n:
        raise ParameterError(f"subset indices must lie in 0..{n - 1}")
    chunks = chain.iter_alloc(chunk_size)
    if max_draws is not None and max_draws < len(chain):
        skip = len(chain) - max_draws
        alloc = chain.array("alloc")
        chunks = (np.asarray(alloc[start:start + chunk_size])
                  for start in range(skip, alloc.shape[0], chunk_size))
    counts, n_draws = co_occurrence_counts(chunks, subset_ids, chain.meta.C, workers=workers)
    S = counts / n_draws
    np.fill_diagonal(S, 1.0)
    logger.info(f"Similarity over {subset_ids.size} observations from {n_draws} draws")
    return SimilarityMatrix(subset_ids=subset_ids, S=S, n_draws=n_draws)
