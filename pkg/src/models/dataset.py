"""
Longitudinal dataset model.

Holds observations (outcome, regression covariates, clustering covariates)
together with the observation -> individual map g(i) and observation times.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DataError


@dataclass
class LongitudinalDataset:
    """
    Observation-level longitudinal data.

    Individuals are stored 0-based in ``individual`` (``individual[i] = g(i) - 1``);
    ``individual_ids`` keeps the original identifiers in first-appearance order.
    """
    y: np.ndarray                       # outcome per observation (n,)
    time: np.ndarray                    # observation time (n,)
    individual: np.ndarray              # 0-based individual index per observation (n,)
    X: np.ndarray                       # regression covariates (n, p_x)
    x_names: List[str]
    U_cont: np.ndarray                  # continuous clustering covariates (n, q)
    u_cont_names: List[str]
    U_cat: np.ndarray                   # categorical codes (n, l), 0-based
    u_cat_names: List[str]
    n_categories: List[int]             # category count per categorical column
    individual_ids: Optional[List[str]] = None
    cat_levels: List[List[str]] = field(default_factory=list)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        n = self.y.size
        self.time = np.asarray(self.time, dtype=float).reshape(-1)
        self.individual = np.asarray(self.individual, dtype=np.int64).reshape(-1)
        self.X = np.asarray(self.X, dtype=float).reshape(n, -1)
        self.U_cont = np.asarray(self.U_cont, dtype=float).reshape(n, -1)
        self.U_cat = np.asarray(self.U_cat, dtype=np.int64).reshape(n, -1)
        self._validate()
        if self.individual_ids is None:
            self.individual_ids = [str(j + 1) for j in range(self.m)]
        if not self.cat_levels:
            self.cat_levels = [[str(k) for k in range(count)] for count in self.n_categories]

    def _validate(self) -> None:
        n = self.n
        if n == 0:
            raise DataError("dataset has no observations")
        for name, array in (("time", self.time), ("individual", self.individual)):
            if array.size != n:
                raise DataError(f"'{name}' has {array.size} entries, expected {n}")
        if self.X.shape[1] != len(self.x_names):
            raise DataError(f"X has {self.X.shape[1]} columns but {len(self.x_names)} names")
        if self.U_cont.shape[1] != len(self.u_cont_names):
            raise DataError("continuous clustering covariates do not match their names")
        if self.U_cat.shape[1] != len(self.u_cat_names) or len(self.n_categories) != len(self.u_cat_names):
            raise DataError("categorical clustering covariates do not match their names")
        for name, array in (("y", self.y), ("time", self.time), ("X", self.X), ("U_cont", self.U_cont)):
            if not np.all(np.isfinite(array)):
                raise DataError(f"'{name}' contains missing or non-finite values")
        if self.individual.min() < 0:
            raise DataError("individual indices must be nonnegative")
        owned = np.bincount(self.individual)
        if np.any(owned == 0):
            missing = int(np.flatnonzero(owned == 0)[0])
            raise DataError(f"individual {missing + 1} owns no observation")
        for column, count in enumerate(self.n_categories):
            codes = self.U_cat[:, column]
            if count < 1 or codes.min() < 0 or codes.max() >= count:
                raise DataError(
                    f"categorical column '{self.u_cat_names[column]}' has codes outside 0..{count - 1}")

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def m(self) -> int:
        return int(self.individual.max()) + 1

    @property
    def q(self) -> int:
        return int(self.U_cont.shape[1])

    @property
    def has_clustering_covariates(self) -> bool:
        return self.U_cont.shape[1] + self.U_cat.shape[1] > 0

    def column(self, name: str) -> np.ndarray:
        """Return a regression covariate column by name."""
        if name not in self.x_names:
            raise KeyError(name)
        return self.X[:, self.x_names.index(name)]

    def subset(self, rows: np.ndarray) -> "LongitudinalDataset":
        """Row subset with individuals re-indexed to a contiguous range."""
        rows = np.asarray(rows)
        kept, individual = np.unique(self.individual[rows], return_inverse=True)
        return LongitudinalDataset(
            y=self.y[rows], time=self.time[rows], individual=individual,
            X=self.X[rows], x_names=list(self.x_names),
            U_cont=self.U_cont[rows], u_cont_names=list(self.u_cont_names),
            U_cat=self.U_cat[rows], u_cat_names=list(self.u_cat_names),
            n_categories=list(self.n_categories),
            individual_ids=[self.individual_ids[j] for j in kept],
            cat_levels=[list(levels) for levels in self.cat_levels],
        )
