"""
Cluster-parameter aggregation over a representative clustering.

For representative cluster c the pooled sample set is
{param^(h)_{Z^(h)_i} : every kept draw h, every subset observation i with Z*_i = c}.
It is held as weighted values: draw h contributes param^(h)_{c'} with weight
equal to the number of cluster-c observations allocated to c' in that draw.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..conditionals.likelihood import gaussian_log_density
from ..core.design import Standardizer
from ..models.errors import ParameterError
from ..sampler.chain_store import ChainStore

logger = logging.getLogger(__name__)

PARAMETERS = ("gamma", "effect", "mu", "sigma", "phi")


@dataclass
class ClusterEstimate:
    label: int                      # 0-based representative label
    size: int
    mean: Optional[np.ndarray]
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    excluded: bool = False

    @property
    def missing(self) -> bool:
        return self.size == 0

    def as_dict(self, columns: Sequence[str]) -> Dict[str, object]:
        def listed(values):
            return None if values is None else [float(v) for v in values]
        return {
            "cluster": self.label + 1, "size": self.size, "missing": self.missing,
            "excluded": self.excluded, "columns": list(columns),
            "mean": listed(self.mean), "lower": listed(self.lower), "upper": listed(self.upper),
        }


@dataclass
class ClusterSummary:
    which: str
    level: float
    columns: List[str]
    clusters: List[ClusterEstimate]
    draw_means: np.ndarray          # (H, k, d); NaN rows for empty clusters
    excluded: List[int] = field(default_factory=list)

    def __getitem__(self, label: int) -> ClusterEstimate:
        return self.clusters[label]

    @property
    def k(self) -> int:
        return len(self.clusters)

    def reported(self) -> List[ClusterEstimate]:
        return [c for c in self.clusters if not c.excluded and not c.missing]

    def means(self) -> np.ndarray:
        """Stacked pooled means (k, d); NaN for empty clusters."""
        d = len(self.columns)
        return np.stack([c.mean if c.mean is not None else np.full(d, np.nan) for c in self.clusters])

    def as_dict(self) -> Dict[str, object]:
        return {"parameter": self.which, "level": self.level, "excluded": [c + 1 for c in self.excluded],
                "clusters": [c.as_dict(self.columns) for c in self.clusters]}


@dataclass
class ParameterEstimate:
    name: str
    mean: float
    lower: Optional[float]
    upper: Optional[float]

    def as_dict(self) -> Dict[str, object]:
        return {"name": self.name, "mean": self.mean, "lower": self.lower, "upper": self.upper}


@dataclass
class ContrastRow:
    cluster: int
    reference: int
    column: str
    mean: float
    lower: Optional[float]
    upper: Optional[float]

    def as_dict(self) -> Dict[str, object]:
        return {"cluster": self.cluster + 1, "reference": self.reference + 1, "column": self.column,
                "mean": self.mean, "lower": self.lower, "upper": self.upper}


def interval_probabilities(level: float) -> Optional[tuple]:
    if not 0.0 <= level < 1.0:
        raise ParameterError(f"credible level must lie in [0, 1), got {level}")
    if level == 0.0:
        return None
    return (1.0 - level) / 2.0, (1.0 + level) / 2.0


def allocation_weights(chain: ChainStore, subset_ids: np.ndarray, labels: np.ndarray, k: int,
                       chunk_size: int = 256) -> np.ndarray:
    """W[h, c, c'] = #{i in subset : Z*_i = c and Z^(h)_i = c'}, streamed over draws."""
    C = chain.meta.C
    labels = np.asarray(labels, dtype=np.int64)
    blocks = []
    for chunk in chain.iter_alloc(chunk_size):
        draws = chunk.shape[0]
        flat = (np.arange(draws)[:, None] * (k * C) + labels[None, :] * C + chunk[:, subset_ids]).ravel()
        blocks.append(np.bincount(flat, minlength=draws * k * C).reshape(draws, k, C))
    return np.concatenate(blocks, axis=0).astype(float)


def parameter_draws(chain: ChainStore, which: str, standardizer: Optional[Standardizer] = None):
    """
    Per-draw cluster parameters (H, C, d) and their column names, on the original scale.
    """
    meta = chain.meta
    if which not in PARAMETERS:
        raise ParameterError(f"unknown cluster parameter '{which}'; choose from {PARAMETERS}")
    standardizer = standardizer or Standardizer.from_dict(meta.standardizer)
    if which in ("gamma", "effect"):
        values = standardizer.to_original(np.asarray(chain.array("gamma")), meta.int_cols)
        if which == "effect":
            beta = standardizer.to_original(np.asarray(chain.array("beta")), meta.fe_cols)
            for j, name in enumerate(meta.int_cols):
                if name in meta.fe_cols:
                    values[..., j] += beta[:, meta.fe_cols.index(name)][:, None]
        return values, list(meta.int_cols)
    if which == "mu":
        return standardizer.u_to_original(np.asarray(chain.array("theta_mu"))), list(meta.u_cont_names)
    if which == "sigma":
        sigma = np.asarray(chain.array("theta_sigma")) * np.outer(standardizer.u_scale, standardizer.u_scale)
        names = [f"{a}:{b}" for a in meta.u_cont_names for b in meta.u_cont_names]
        return sigma.reshape(sigma.shape[0], sigma.shape[1], -1), names
    names = [f"{var}={level}" for var, count in zip(meta.u_cat_names, meta.n_categories) for level in range(count)]
    return np.asarray(chain.array("theta_phi")), names


def _log_widened(what: str, lower: np.ndarray, upper: np.ndarray, mean: np.ndarray,
                 columns: Sequence[str]) -> None:
    """Warn for each column whose interval had to be widened to contain the posterior mean."""
    for j in np.flatnonzero((lower > mean) | (upper < mean)):
        logger.warning(f"{what}, {columns[j]}: interval [{lower[j]:.4g}, {upper[j]:.4g}] does not contain "
                       f"the mean {mean[j]:.4g}; widened to include it")


def aggregate_cluster_params(chain: ChainStore, subset_ids: np.ndarray, labels: np.ndarray, which: str,
                             level: float = 0.95, k: Optional[int] = None,
                             weights: Optional[np.ndarray] = None) -> ClusterSummary:
    """
    Pooled posterior means and equal-tailed intervals per representative cluster.

    Args:
        chain: Chain with allocation and parameter draws
        subset_ids: 0-based observation indices the labels refer to
        labels: 0-based representative labels Z*
        which: One of gamma, effect (gamma plus beta on shared columns), mu, sigma, phi
        level: Credible level; 0 gives point means only
        k: Number of representative clusters (default max label + 1)
        weights: Precomputed allocation weights (see :func:`allocation_weights`)

    Returns:
        ClusterSummary; empty clusters carry a missing marker instead of estimates
    """
    labels = np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if k is None else k
    probabilities = interval_probabilities(level)
    values, columns = parameter_draws(chain, which)
    if weights is None:
        weights = allocation_weights(chain, np.asarray(subset_ids), labels, k)
    sizes = np.bincount(labels, minlength=k)
    H, _, d = values.shape
    draw_means = np.full((H, k, d), np.nan)
    clusters = []
    for c in range(k):
        if sizes[c] == 0:
            clusters.append(ClusterEstimate(label=c, size=0, mean=None))
            continue
        w = weights[:, c, :]
        draw_means[:, c, :] = np.einsum("hc,hcd->hd", w, values) / sizes[c]
        mean = draw_means[:, c, :].mean(axis=0)
        lower = upper = None
        if probabilities is not None:
            positive = w.ravel() > 0
            pooled = values.reshape(H * values.shape[1], d)[positive]
            pooled_weights = w.ravel()[positive]
            bounds = np.stack([np.quantile(pooled[:, j], probabilities, weights=pooled_weights,
                                           method="inverted_cdf") for j in range(d)], axis=1)
            lower, upper = np.minimum(bounds[0], mean), np.maximum(bounds[1], mean)
            _log_widened(f"{which} cluster {c + 1}", bounds[0], bounds[1], mean, columns)
        clusters.append(ClusterEstimate(label=c, size=int(sizes[c]), mean=mean, lower=lower, upper=upper))
    return ClusterSummary(which=which, level=level, columns=columns, clusters=clusters, draw_means=draw_means)


def apply_min_size(summary: ClusterSummary, min_size: int) -> ClusterSummary:
    """Flag clusters smaller than ``min_size`` as excluded from reporting (recorded, not dropped)."""
    summary.excluded = []
    for cluster in summary.clusters:
        cluster.excluded = 0 < cluster.size < min_size
        if cluster.excluded:
            summary.excluded.append(cluster.label)
    if summary.excluded:
        logger.info(f"Excluded clusters below {min_size} observations: {[c + 1 for c in summary.excluded]}")
    return summary


def cluster_effect_contrasts(summary: ClusterSummary, reference: int, level: float = 0.90) -> List[ContrastRow]:
    """
    Differences of each cluster's pooled effect from a reference cluster.

    The difference is formed per kept draw from the cluster means, so its
    mean equals the difference of the pooled means.

    Raises:
        ParameterError: If the reference cluster does not exist or is empty
    """
    if not 0 <= reference < summary.k or summary.clusters[reference].missing:
        raise ParameterError(f"reference cluster {reference + 1} is empty or does not exist")
    probabilities = interval_probabilities(level)
    rows = []
    for cluster in summary.clusters:
        if cluster.label == reference or cluster.missing or cluster.excluded:
            continue
        differences = summary.draw_means[:, cluster.label, :] - summary.draw_means[:, reference, :]
        mean = differences.mean(axis=0)
        for j, column in enumerate(summary.columns):
            lower = upper = None
            if probabilities is not None:
                lower, upper = (float(v) for v in np.quantile(differences[:, j], probabilities))
                _log_widened(f"contrast {cluster.label + 1} - {reference + 1}", np.array([lower]),
                             np.array([upper]), mean[j:j + 1], [column])
                lower, upper = min(lower, float(mean[j])), max(upper, float(mean[j]))
            rows.append(ContrastRow(cluster=cluster.label, reference=reference, column=column,
                                    mean=float(mean[j]), lower=lower, upper=upper))
    return rows


def _estimate(name: str, draws: np.ndarray, probabilities) -> ParameterEstimate:
    mean = float(np.mean(draws))
    if probabilities is None:
        return ParameterEstimate(name=name, mean=mean, lower=None, upper=None)
    lower, upper = (float(v) for v in np.quantile(draws, probabilities))
    return ParameterEstimate(name=name, mean=mean, lower=lower, upper=upper)


def fixed_effect_summary(chain: ChainStore, level: float = 0.95,
                         standardizer: Optional[Standardizer] = None) -> List[ParameterEstimate]:
    """
    Posterior means and equal-tailed intervals of beta (original scale), sigma2, W^Re and W^Int.
    """
    meta = chain.meta
    probabilities = interval_probabilities(level)
    standardizer = standardizer or Standardizer.from_dict(meta.standardizer)
    beta = standardizer.to_original(np.asarray(chain.array("beta")), meta.fe_cols)
    rows = [_estimate(f"beta[{name}]", beta[:, j], probabilities) for j, name in enumerate(meta.fe_cols)]
    rows.append(_estimate("sigma2", np.asarray(chain.array("sigma2")), probabilities))
    for label, array, columns in (("W^Re", "wre", meta.re_cols), ("W^Int", "wint", meta.int_cols)):
        A = standardizer.coefficient_map(columns)
        draws = np.einsum("ij,hjk,lk->hil", A, np.asarray(chain.array(array)), A)
        for a in range(len(columns)):
            for b in range(a, len(columns)):
                rows.append(_estimate(f"{label}[{columns[a]},{columns[b]}]", draws[:, a, b], probabilities))
    return rows


@dataclass
class AssignmentProfile:
    """Aggregated assignment parameters of the reported clusters (original scale)."""
    labels: np.ndarray              # 0-based representative labels
    mu: np.ndarray                  # (k, q)
    sigma: np.ndarray               # (k, q, q)
    phi: List[np.ndarray]           # per categorical covariate (k, K_j)

    @classmethod
    def from_summaries(cls, mu: ClusterSummary, sigma: ClusterSummary, phi: Optional[ClusterSummary],
                       n_categories: Sequence[int]) -> "AssignmentProfile":
        kept = [c.label for c in mu.reported()]
        q = len(mu.columns)
        mus = np.stack([mu[c].mean for c in kept]) if q else np.zeros((len(kept), 0))
        sigmas = np.stack([sigma[c].mean.reshape(q, q) for c in kept]) if q else np.zeros((len(kept), 0, 0))
        tables = []
        if phi is not None and n_categories:
            flat = np.stack([phi[c].mean for c in kept])
            bounds = np.cumsum([0, *n_categories])
            tables = [flat[:, bounds[j]:bounds[j + 1]] for j in range(len(n_categories))]
        return cls(labels=np.array(kept, dtype=np.int64), mu=mus, sigma=sigmas, phi=tables)


def predict_cluster(u_cont: np.ndarray, u_cat: Optional[np.ndarray], profile: AssignmentProfile) -> np.ndarray:
    """
    Representative cluster with maximal aggregated assignment density (equal weights).

    Ties go to the lowest cluster label.

    Returns:
        0-based representative labels
    """
    u_cont = np.atleast_2d(np.asarray(u_cont, dtype=float))
    log_density = gaussian_log_density(u_cont, profile.mu, profile.sigma)
    if profile.phi and u_cat is not None:
        u_cat = np.asarray(u_cat, dtype=np.int64).reshape(u_cont.shape[0], -1)
        with np.errstate(divide="ignore"):
            for column, table in enumerate(profile.phi):
                log_density += np.log(table[:, u_cat[:, column]]).T
    return profile.labels[np.argmax(log_density, axis=1)]


def predictive_zone_grid(profile: AssignmentProfile, lower: Sequence[float], upper: Sequence[float],
                         resolution: int = 50) -> Dict[str, np.ndarray]:
    """
    Predicted cluster over a grid of the first two continuous covariates.

    Uses the marginal Gaussians of those two coordinates, so other
    covariates (continuous or categorical) are integrated out.
    """
    if profile.mu.shape[1] < 2:
        raise ParameterError("predictive zones need at least two continuous clustering covariates")
    xs = np.linspace(lower[0], upper[0], resolution)
    ys = np.linspace(lower[1], upper[1], resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    points = np.column_stack((gx.ravel(), gy.ravel()))
    marginal = AssignmentProfile(labels=profile.labels, mu=profile.mu[:, :2],
                                 sigma=profile.sigma[:, :2, :2], phi=[])
    return {"x": points[:, 0], "y": points[:, 1], "cluster": predict_cluster(points, None, marginal)}
