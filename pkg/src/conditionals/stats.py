"""
Per-cluster sufficient statistics of the clustering covariates.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from ..core.design import group_sum, outer_rows
from ..stochastics.psd import symmetrize


@dataclass
class ClusterSufficientStats:
    """Counts, means and centered scatter matrices per cluster, plus category counts."""
    counts: np.ndarray              # (C,)
    means: np.ndarray               # (C, q); zero rows for empty clusters
    scatter: np.ndarray             # (C, q, q)
    category_counts: List[np.ndarray]   # per categorical covariate: (C, K_j)

    @property
    def C(self) -> int:
        return int(self.counts.size)

    @property
    def q(self) -> int:
        return int(self.means.shape[1])

    @classmethod
    def from_allocation(cls, u_cont: np.ndarray, u_cat: np.ndarray, n_categories: List[int],
                        alloc: np.ndarray, C: int) -> "ClusterSufficientStats":
        alloc = np.asarray(alloc, dtype=np.int64)
        counts = np.bincount(alloc, minlength=C).astype(float)
        q = u_cont.shape[1]
        if q:
            sums = group_sum(u_cont, alloc, C)
            means = np.divide(sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0)
            centered = u_cont - means[alloc]
            scatter = symmetrize(group_sum(outer_rows(centered), alloc, C))
        else:
            means = np.zeros((C, 0))
            scatter = np.zeros((C, 0, 0))
        category_counts = []
        for column, n_levels in enumerate(n_categories):
            table = np.zeros((C, n_levels))
            np.add.at(table, (alloc, u_cat[:, column]), 1.0)
            category_counts.append(table)
        return cls(counts=counts, means=means, scatter=scatter, category_counts=category_counts)
