"""
Design views over a longitudinal dataset.

Resolves the fixed-effect, random-effect and interaction column roles of a
:class:`ModelSpec` into dense matrices, applies optional standardization and
precomputes the per-individual row blocks used by the conditional updates.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse

from ..models.dataset import LongitudinalDataset
from ..models.errors import ParameterError, SpecError
from ..models.model_spec import INTERCEPT, ModelSpec
from ..simulation.splines import bspline_basis

logger = logging.getLogger(__name__)


def group_sum(values: np.ndarray, labels: np.ndarray, n_groups: int) -> np.ndarray:
    """
    Sum the leading axis of ``values`` within groups.

    Args:
        values: Array of shape (n, ...)
        labels: Group index per row, in 0..n_groups-1
        n_groups: Number of groups (empty groups sum to zero)

    Returns:
        Array of shape (n_groups, ...)
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    indicator = scipy.sparse.csr_matrix(
        (np.ones(n), (np.asarray(labels, dtype=np.int64), np.arange(n))), shape=(n_groups, n))
    flat = indicator @ values.reshape(n, -1)
    return np.asarray(flat).reshape((n_groups, *values.shape[1:]))


def outer_rows(matrix: np.ndarray) -> np.ndarray:
    """Per-row outer products, shape (n, p, p)."""
    return np.einsum("ni,nj->nij", matrix, matrix)


def is_continuous(column: np.ndarray) -> bool:
    """A column is continuous unless it takes at most two distinct values."""
    return np.unique(column).size > 2


@dataclass
class Standardizer:
    """
    Per-column centering and scaling applied to continuous covariates.

    Regression columns are z-scored only when continuous; binary columns,
    the intercept and spline columns are left untouched. The coefficient
    map folds the centering offsets into the intercept coefficient when the
    intercept column belongs to the same block.
    """
    x_center: Dict[str, float] = field(default_factory=dict)
    x_scale: Dict[str, float] = field(default_factory=dict)
    u_center: np.ndarray = field(default_factory=lambda: np.zeros(0))
    u_scale: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def fit(cls, data: LongitudinalDataset, spec: ModelSpec) -> "Standardizer":
        if not spec.standardize:
            return cls(u_center=np.zeros(data.q), u_scale=np.ones(data.q))
        x_center, x_scale = {}, {}
        for name in spec.x_cols:
            column = data.column(name)
            if is_continuous(column):
                sd = float(np.std(column))
                x_center[name] = float(np.mean(column))
                x_scale[name] = sd if sd > 0 else 1.0
        u_center = data.U_cont.mean(axis=0) if data.q else np.zeros(0)
        u_scale = data.U_cont.std(axis=0) if data.q else np.zeros(0)
        u_scale = np.where(u_scale > 0, u_scale, 1.0)
        return cls(x_center=x_center, x_scale=x_scale, u_center=u_center, u_scale=u_scale)

    def transform_column(self, name: str, column: np.ndarray) -> np.ndarray:
        if name not in self.x_center:
            return column
        return (column - self.x_center[name]) / self.x_scale[name]

    def transform_u(self, u_cont: np.ndarray) -> np.ndarray:
        """Standardize raw continuous clustering covariates."""
        return (np.asarray(u_cont, dtype=float) - self.u_center) / self.u_scale

    def coefficient_map(self, columns: Sequence[str]) -> np.ndarray:
        """
        Matrix A with b_original = A @ b_standardized for a coefficient block.

        Args:
            columns: Design column names of the block, in coefficient order

        Returns:
            Square matrix of size len(columns)
        """
        columns = list(columns)
        A = np.eye(len(columns))
        intercept = columns.index(INTERCEPT) if INTERCEPT in columns else None
        for k, name in enumerate(columns):
            if name in self.x_center:
                A[k, k] = 1.0 / self.x_scale[name]
                if intercept is not None:
                    A[intercept, k] = -self.x_center[name] / self.x_scale[name]
        return A

    def to_original(self, coefficients: np.ndarray, columns: Sequence[str]) -> np.ndarray:
        """Back-transform coefficients (last axis indexed by ``columns``)."""
        return np.asarray(coefficients, dtype=float) @ self.coefficient_map(columns).T

    def to_standardized(self, coefficients: np.ndarray, columns: Sequence[str]) -> np.ndarray:
        inverse = np.linalg.inv(self.coefficient_map(columns))
        return np.asarray(coefficients, dtype=float) @ inverse.T

    def u_to_original(self, mu: np.ndarray, sigma: Optional[np.ndarray] = None):
        """Map cluster means (and optionally covariances) back to the raw exposure scale."""
        mu_original = np.asarray(mu, dtype=float) * self.u_scale + self.u_center
        if sigma is None:
            return mu_original
        return mu_original, np.asarray(sigma, dtype=float) * np.outer(self.u_scale, self.u_scale)

    def as_dict(self) -> Dict[str, object]:
        return {
            "x_center": dict(self.x_center),
            "x_scale": dict(self.x_scale),
            "u_center": [float(v) for v in self.u_center],
            "u_scale": [float(v) for v in self.u_scale],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, object]) -> "Standardizer":
        return cls(
            x_center={k: float(v) for k, v in payload.get("x_center", {}).items()},
            x_scale={k: float(v) for k, v in payload.get("x_scale", {}).items()},
            u_center=np.asarray(payload.get("u_center", []), dtype=float),
            u_scale=np.asarray(payload.get("u_scale", []), dtype=float),
        )


@dataclass
class DesignViews:
    """
    Dense design matrices and per-individual row blocks for one dataset/spec pair.
    """
    y: np.ndarray
    x_fe: np.ndarray
    x_re: np.ndarray
    x_int: np.ndarray
    fe_cols: List[str]
    re_cols: List[str]
    int_cols: List[str]
    individual: np.ndarray
    individual_rows: List[np.ndarray]
    re_gram: np.ndarray              # per individual X_re_j^T X_re_j, (m, p_re, p_re)
    u_cont: np.ndarray
    u_cat: np.ndarray
    n_categories: List[int]
    standardizer: Standardizer
    time: np.ndarray
    spline_domain: Optional[Tuple[float, float]] = None

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def m(self) -> int:
        return len(self.individual_rows)

    @property
    def q(self) -> int:
        return int(self.u_cont.shape[1])

    @property
    def p_fe(self) -> int:
        return int(self.x_fe.shape[1])

    @property
    def p_re(self) -> int:
        return int(self.x_re.shape[1])

    @property
    def p_int(self) -> int:
        return int(self.x_int.shape[1])

    @property
    def individual_sizes(self) -> np.ndarray:
        return np.array([rows.size for rows in self.individual_rows], dtype=np.int64)

    def with_observations(self, y: np.ndarray, u_cont: Optional[np.ndarray] = None,
                          u_cat: Optional[np.ndarray] = None) -> "DesignViews":
        """Copy with replaced outcome and clustering covariates (designs unchanged)."""
        return replace(
            self,
            y=np.asarray(y, dtype=float),
            u_cont=self.u_cont if u_cont is None else np.asarray(u_cont, dtype=float).reshape(self.n, -1),
            u_cat=self.u_cat if u_cat is None else np.asarray(u_cat, dtype=np.int64).reshape(self.n, -1),
        )


def spline_design(time: np.ndarray, spec: ModelSpec) -> Tuple[np.ndarray, Tuple[float, float]]:
    """Time-basis columns bs1..bsK evaluated at the observation times."""
    domain = spec.spline_domain or (float(np.min(time)), float(np.max(time)))
    if not domain[1] > domain[0]:
        raise SpecError("spline columns need observation times spanning a nonempty interval")
    try:
        return bspline_basis(time, spec.spline_degree, spec.spline_basis, domain), domain
    except ParameterError as e:
        raise SpecError(f"cannot build spline columns: {e}") from e


def _resolve_columns(role: str, names: Sequence[str], available: Dict[str, np.ndarray]) -> np.ndarray:
    unknown = [name for name in names if name not in available]
    if unknown:
        raise SpecError(f"{role} references unknown design column(s) {unknown}; "
                        f"available: {sorted(available)}")
    return np.column_stack([available[name] for name in names])


def build_design_views(data: LongitudinalDataset, spec: ModelSpec) -> DesignViews:
    """
    Build the design matrices x^Fe, x^Re, x^Int and per-individual row blocks.

    Args:
        data: Validated longitudinal dataset
        spec: Column roles and structure

    Returns:
        DesignViews with standardization applied when ``spec.standardize``

    Raises:
        SpecError: If a role names an unknown column or spline settings are invalid
    """
    missing = [name for name in spec.x_cols if name not in data.x_names]
    if missing:
        raise SpecError(f"x_cols {missing} are not regression covariates of the dataset")
    if list(data.u_cont_names) != list(spec.u_cont_cols) or list(data.u_cat_names) != list(spec.u_cat_cols):
        raise SpecError("dataset clustering covariates do not match the model specification")

    standardizer = Standardizer.fit(data, spec)
    available: Dict[str, np.ndarray] = {INTERCEPT: np.ones(data.n)}
    for name in spec.x_cols:
        available[name] = standardizer.transform_column(name, data.column(name))
    domain = None
    if spec.spline_basis:
        basis, domain = spline_design(data.time, spec)
        for k, name in enumerate(spec.spline_columns):
            available[name] = basis[:, k]

    x_fe = _resolve_columns("fe_cols", spec.fe_cols, available)
    x_re = _resolve_columns("re_cols", spec.re_cols, available)
    x_int = _resolve_columns("int_cols", spec.int_cols, available)

    order = np.argsort(data.individual, kind="stable")
    bounds = np.searchsorted(data.individual[order], np.arange(data.m + 1))
    individual_rows = [order[bounds[j]:bounds[j + 1]] for j in range(data.m)]
    re_gram = group_sum(outer_rows(x_re), data.individual, data.m)

    logger.debug(f"Design views: n={data.n}, m={data.m}, p_fe={x_fe.shape[1]}, "
                 f"p_re={x_re.shape[1]}, p_int={x_int.shape[1]}, q={data.q}")
    return DesignViews(
        y=data.y.copy(), x_fe=x_fe, x_re=x_re, x_int=x_int,
        fe_cols=list(spec.fe_cols), re_cols=list(spec.re_cols), int_cols=list(spec.int_cols),
        individual=data.individual.copy(), individual_rows=individual_rows, re_gram=re_gram,
        u_cont=standardizer.transform_u(data.U_cont) if data.q else data.U_cont.copy(),
        u_cat=data.U_cat.copy(), n_categories=list(data.n_categories),
        standardizer=standardizer, time=data.time.copy(), spline_domain=domain,
    )
