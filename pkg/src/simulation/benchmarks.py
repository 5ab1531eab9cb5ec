"""
Benchmark clusterings built from the ground truth, and the two-step LMM fit
that regresses the outcome on a fixed labelling.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..conditionals.likelihood import gaussian_log_density
from ..core.design import Standardizer
from ..models.dataset import LongitudinalDataset
from ..models.model_spec import Hyperparameters, ModelSpec, RunConfig
from ..sampler.chain_store import ChainStore
from ..sampler.gibbs import run_chain
from .scenario import GroundTruth

logger = logging.getLogger(__name__)


def benchmark_true_centroids(data: LongitudinalDataset, truth: GroundTruth) -> np.ndarray:
    """
    Assign every observation to the true component of maximal Gaussian density
    (equal weights); ties go to the lowest component index.
    """
    log_density = gaussian_log_density(data.U_cont, truth.centroids, truth.covariances)
    return np.argmax(log_density, axis=1).astype(np.int64)


def benchmark_true_assignment(truth: GroundTruth) -> np.ndarray:
    return truth.labels.copy()


@dataclass
class FixedLabelFit:
    labels: np.ndarray
    chain: ChainStore
    beta: np.ndarray                # posterior mean, original scale
    wre: np.ndarray                 # posterior mean, original scale


def posterior_means(chain: ChainStore):
    """Posterior means of beta and W^Re on the original covariate scale."""
    meta = chain.meta
    standardizer = Standardizer.from_dict(meta.standardizer)
    beta = standardizer.to_original(np.asarray(chain.array("beta")), meta.fe_cols).mean(axis=0)
    A = standardizer.coefficient_map(meta.re_cols)
    wre = A @ np.asarray(chain.array("wre")).mean(axis=0) @ A.T
    return beta, wre


def fit_with_labels(data: LongitudinalDataset, labels: np.ndarray, spec: ModelSpec, hyper: Hyperparameters,
                    runcfg: RunConfig, chain_id: int = 0) -> FixedLabelFit:
    """
    Fit the LMM with interaction effects while holding the cluster labels fixed.

    The same conditional samplers run with the allocation block switched off,
    so the regression part sees exactly the given partition.
    """
    labels = np.asarray(labels, dtype=np.int64)
    needed = int(labels.max()) + 1
    if spec.C < max(needed, 2):
        spec = replace(spec, C=max(needed, 2))
    chain = run_chain(data, spec, hyper, runcfg, chain_id=chain_id, fixed_alloc=labels)
    beta, wre = posterior_means(chain)
    logger.debug(f"Two-step fit over {needed} fixed clusters done ({len(chain)} draws)")
    return FixedLabelFit(labels=labels, chain=chain, beta=beta, wre=wre)
