"""
Synthetic longitudinal cohorts with nine exposure clusters.

Cluster centroids sit on the grid {-1, 0, 1}^2 in row-major order
(-1,-1), (-1,0), (-1,1), (0,-1), ..., (1,1). Each individual is observed at
``waves`` time points, wave w falling uniformly in [w, w+1).
"""

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..models.dataset import LongitudinalDataset
from ..models.errors import SpecError
from ..models.model_spec import INTERCEPT, ModelSpec
from ..stochastics.rng import RngStream
from ..stochastics.samplers import sample_mvn_batch
from .splines import bspline_basis, clamped_knots

logger = logging.getLogger(__name__)

CENTROIDS = np.array([(a, b) for a in (-1.0, 0.0, 1.0) for b in (-1.0, 0.0, 1.0)])
TRUE_INTERCEPTS = (-4.0, -1.0, 2.0, -3.0, 0.0, 3.0, -2.0, 1.0, 4.0)
TRUE_SLOPES = (-1.67, 1.60, 0.45, 0.05, -2.56, 1.19, 0.77, 0.06, 0.13)
X_NAMES = ["x1", "x2", "x3", "x4"]
U_NAMES = ["u1", "u2"]
INTERACTING = [INTERCEPT, "x1"]
NON_INTERACTING = ["x2", "x3", "x4"]
BETA_SEED = 20240607


@dataclass
class ScenarioConfig:
    """
    Simulation settings. Scenario 1 has equal weights and isotropic clusters;
    scenario 2 down-weights the (-1,1) and (1,-1) clusters and correlates
    the two exposures within every cluster.
    """
    m: int = 1000
    waves: int = 3
    scenario: int = 1
    within_sd: float = 0.2
    correlation: float = 0.7
    sparse_weight: float = 0.1
    sparse_clusters: Tuple[int, ...] = (2, 6)
    intercepts: Tuple[float, ...] = TRUE_INTERCEPTS
    slopes: Tuple[float, ...] = TRUE_SLOPES
    beta: Optional[Tuple[float, ...]] = None        # intercept, x1..x4; drawn from N(0,1) when None
    beta_seed: int = BETA_SEED
    wre_scale: float = 0.5
    sigma2: float = 1.0
    n_basis: int = 3
    spline_degree: int = 2
    seed: int = 1

    def __post_init__(self):
        if self.scenario not in (1, 2):
            raise SpecError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.m < 1 or self.waves < 1:
            raise SpecError("m and waves must be positive")
        for name in ("within_sd", "sparse_weight", "wre_scale", "sigma2"):
            if not getattr(self, name) > 0:
                raise SpecError(f"scenario setting '{name}' must be positive")
        if not -1.0 < self.correlation < 1.0:
            raise SpecError(f"correlation must lie in (-1, 1), got {self.correlation}")
        if len(self.intercepts) != len(CENTROIDS) or len(self.slopes) != len(CENTROIDS):
            raise SpecError(f"exactly {len(CENTROIDS)} cluster intercepts and slopes are required")
        if self.beta is not None and len(self.beta) != 1 + len(X_NAMES):
            raise SpecError(f"beta needs {1 + len(X_NAMES)} entries (intercept, {', '.join(X_NAMES)})")
        if any(not 0 <= c < len(CENTROIDS) for c in self.sparse_clusters):
            raise SpecError("sparse_clusters must index the nine centroids (0-based)")
        if self.n_basis < self.spline_degree + 1:
            raise SpecError("n_basis must be at least spline_degree + 1")
        self.intercepts = tuple(float(v) for v in self.intercepts)
        self.slopes = tuple(float(v) for v in self.slopes)
        self.sparse_clusters = tuple(int(c) for c in self.sparse_clusters)
        if self.beta is not None:
            self.beta = tuple(float(v) for v in self.beta)

    @property
    def domain(self) -> Tuple[float, float]:
        return 1.0, float(self.waves + 1)

    def mixture_weights(self) -> np.ndarray:
        weights = np.ones(len(CENTROIDS))
        if self.scenario == 2:
            weights[list(self.sparse_clusters)] *= self.sparse_weight
        return weights / weights.sum()

    def cluster_covariance(self) -> np.ndarray:
        rho = self.correlation if self.scenario == 2 else 0.0
        return self.within_sd ** 2 * np.array([[1.0, rho], [rho, 1.0]])

    def true_beta(self) -> np.ndarray:
        if self.beta is not None:
            return np.asarray(self.beta)
        return RngStream(self.beta_seed).generator.standard_normal(1 + len(X_NAMES))

    def as_dict(self) -> Dict[str, object]:
        payload = asdict(self)
        for name in ("sparse_clusters", "intercepts", "slopes", "beta"):
            if payload[name] is not None:
                payload[name] = list(payload[name])
        return payload


@dataclass
class GroundTruth:
    labels: np.ndarray              # 0-based true cluster per observation
    centroids: np.ndarray           # (9, 2)
    covariances: np.ndarray         # (9, 2, 2)
    weights: np.ndarray             # (9,)
    beta: np.ndarray                # intercept, x1..x4
    gamma: np.ndarray               # (9, 2): intercept, x1
    wre: np.ndarray
    sigma2: float
    eta: np.ndarray                 # (m, n_basis)
    basis: np.ndarray               # (n, n_basis)
    knots: np.ndarray
    domain: Tuple[float, float]
    fe_cols: List[str] = field(default_factory=lambda: [INTERCEPT, *X_NAMES])

    @property
    def effects(self) -> np.ndarray:
        """Identified cluster effects gamma_c + beta on the interacting columns."""
        return self.gamma + self.beta[: self.gamma.shape[1]]

    def beta_group(self, names: List[str]) -> np.ndarray:
        return self.beta[[self.fe_cols.index(name) for name in names]]

    def parameters(self) -> Dict[str, object]:
        return {
            "centroids": self.centroids.tolist(), "covariances": self.covariances.tolist(),
            "weights": self.weights.tolist(), "beta": dict(zip(self.fe_cols, self.beta.tolist())),
            "gamma": self.gamma.tolist(), "effects": self.effects.tolist(), "wre": self.wre.tolist(),
            "sigma2": self.sigma2, "knots": self.knots.tolist(), "domain": list(self.domain),
        }


def scenario_spec(cfg: ScenarioConfig, C: int = 30) -> ModelSpec:
    """Model specification matching the generating design."""
    return ModelSpec(
        outcome="y", x_cols=list(X_NAMES), u_cont_cols=list(U_NAMES),
        fe_cols=[INTERCEPT, *X_NAMES], re_cols=[f"bs{k + 1}" for k in range(cfg.n_basis)],
        int_cols=list(INTERACTING), C=C, spline_basis=cfg.n_basis, spline_degree=cfg.spline_degree,
        spline_domain=cfg.domain,
    )


def generate_scenario(cfg: ScenarioConfig) -> Tuple[LongitudinalDataset, GroundTruth]:
    """
    Draw one synthetic cohort.

    Returns:
        Tuple of (dataset, ground truth); the dataset has m * waves observations
    """
    rng = RngStream(cfg.seed)
    gen = rng.generator
    m, waves = cfg.m, cfg.waves
    n = m * waves
    individual = np.repeat(np.arange(m), waves)
    wave = np.tile(np.arange(1, waves + 1), m).astype(float)
    time = wave + gen.random(n)

    x1 = gen.standard_normal(m)[individual]
    x2 = gen.binomial(1, 0.5, m)[individual].astype(float)
    x3 = gen.standard_normal(n)
    x4 = gen.binomial(1, 0.5, n).astype(float)
    X = np.column_stack((x1, x2, x3, x4))

    weights = cfg.mixture_weights()
    labels = gen.choice(len(CENTROIDS), size=n, p=weights)
    covariance = cfg.cluster_covariance()
    covariances = np.repeat(covariance[None], len(CENTROIDS), axis=0)
    U = sample_mvn_batch(CENTROIDS[labels], covariances[labels], rng, site="scenario exposures")

    basis = bspline_basis(time, cfg.spline_degree, cfg.n_basis, cfg.domain)
    wre = cfg.wre_scale * np.eye(cfg.n_basis)
    eta = sample_mvn_batch(np.zeros((m, cfg.n_basis)), np.repeat(wre[None], m, axis=0), rng,
                           site="scenario random effects")

    beta = cfg.true_beta()
    gamma = np.column_stack((cfg.intercepts, cfg.slopes))
    design = np.column_stack((np.ones(n), X))
    y = (design @ beta + np.einsum("ij,ij->i", basis, eta[individual])
         + gamma[labels, 0] + gamma[labels, 1] * x1
         + np.sqrt(cfg.sigma2) * gen.standard_normal(n))

    data = LongitudinalDataset(
        y=y, time=time, individual=individual, X=X, x_names=list(X_NAMES),
        U_cont=U, u_cont_names=list(U_NAMES), U_cat=np.zeros((n, 0), dtype=np.int64),
        u_cat_names=[], n_categories=[],
    )
    truth = GroundTruth(
        labels=labels.astype(np.int64), centroids=CENTROIDS.copy(), covariances=covariances,
        weights=weights, beta=beta, gamma=gamma, wre=wre, sigma2=cfg.sigma2, eta=eta, basis=basis,
        knots=clamped_knots(cfg.spline_degree, cfg.n_basis, cfg.domain), domain=cfg.domain,
    )
    logger.info(f"Scenario {cfg.scenario}: {m} individuals, {n} observations, "
                f"cluster sizes {np.bincount(labels, minlength=len(CENTROIDS)).tolist()}")
    return data, truth


def write_truth(truth: GroundTruth, cfg: ScenarioConfig, output_dir: Path) -> Dict[str, Path]:
    """Write per-observation true labels (1-based CSV) and the true parameters (JSON)."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    labels_path = output_dir / "truth.csv"
    pd.DataFrame({"row": np.arange(truth.labels.size) + 1, "cluster": truth.labels + 1}).to_csv(
        labels_path, index=False)
    params_path = output_dir / "truth.json"
    with open(params_path, "w", encoding="utf-8") as f:
        json.dump({"scenario": cfg.as_dict(), "parameters": truth.parameters()}, f, indent=2)
    return {"truth_labels": labels_path, "truth_parameters": params_path}


def replicate_config(cfg: ScenarioConfig, repetition: int) -> ScenarioConfig:
    """Configuration of repetition ``repetition`` with a seed derived from the master seed."""
    return replace(cfg, seed=RngStream(cfg.seed).child(repetition).integer_seed())
