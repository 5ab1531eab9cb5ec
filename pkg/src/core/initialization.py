"""
Initial sampler state.
"""

import logging
from typing import Union

import numpy as np
from sklearn.cluster import KMeans

from ..conditionals.assignment import update_assignment_params
from ..conditionals.stats import ClusterSufficientStats
from ..models.dataset import LongitudinalDataset
from ..models.errors import SpecError
from ..models.model_spec import Hyperparameters, ModelSpec
from ..models.parameter_state import ParameterState, uniform_sticks
from ..stochastics.rng import RngStream
from .design import DesignViews, build_design_views

logger = logging.getLogger(__name__)

MAX_INITIAL_CLUSTERS = 10


def clustering_features(views: DesignViews) -> np.ndarray:
    """Standardized continuous covariates followed by one-hot categorical columns."""
    blocks = [views.u_cont]
    for column, n_levels in enumerate(views.n_categories):
        blocks.append(np.eye(n_levels)[views.u_cat[:, column]])
    return np.hstack(blocks)


def initial_allocation(views: DesignViews, C: int, rng: RngStream) -> np.ndarray:
    """k-means labels on the clustering covariates with k = min(C, 10)."""
    features = clustering_features(views)
    distinct = np.unique(features, axis=0).shape[0]
    k = min(C, MAX_INITIAL_CLUSTERS, distinct)
    if k < 2:
        return np.zeros(views.n, dtype=np.int64)
    kmeans = KMeans(n_clusters=k, n_init=10, random_state=rng.integer_seed())
    return kmeans.fit_predict(features).astype(np.int64)


def prior_mean_covariance(psi: np.ndarray, nu: float) -> np.ndarray:
    """IW prior mean Psi / (nu - p - 1), falling back to Psi when it does not exist."""
    p = psi.shape[0]
    return psi / max(nu - p - 1.0, 1.0)


def init_state(data: Union[LongitudinalDataset, DesignViews], spec: ModelSpec, hyper: Hyperparameters,
               rng: RngStream) -> ParameterState:
    """
    Build the starting state of a chain.

    Allocation from k-means; beta, eta and gamma at zero; sigma2 at the
    sample variance of y; W^Re and W^Int at their prior means; theta^u from
    one conjugate sweep given the initial allocation; uniform weights;
    zeta = a_zeta * b_zeta.

    Args:
        data: Dataset or prebuilt design views
        spec: Model specification
        hyper: Hyperparameters (resolved here when needed)
        rng: Random stream

    Returns:
        ParameterState

    Raises:
        SpecError: If the data has no observations
    """
    views = data if isinstance(data, DesignViews) else build_design_views(data, spec)
    if views.n == 0:
        raise SpecError("cannot initialise a chain on an empty dataset")
    if not hyper.is_resolved:
        hyper = hyper.resolve(views.p_re, views.p_int, views.q)
    C = spec.C

    alloc = initial_allocation(views, C, rng)
    variance = float(np.var(views.y, ddof=1)) if views.n > 1 else 0.0
    sigma2 = variance if variance > 0 else 1.0

    stats = ClusterSufficientStats.from_allocation(views.u_cont, views.u_cat, views.n_categories, alloc, C)
    theta = update_assignment_params(stats, hyper, rng)
    logger.debug(f"Initial allocation uses {np.unique(alloc).size} clusters, sigma2={sigma2:.4f}")
    return ParameterState(
        beta=np.zeros(views.p_fe),
        sigma2=sigma2,
        gamma=np.zeros((C, views.p_int)),
        wint=prior_mean_covariance(hyper.psi_int, hyper.nu_int),
        eta=np.zeros((views.m, views.p_re)),
        wre=prior_mean_covariance(hyper.psi_re, hyper.nu_re),
        mu=theta.mu,
        sigma_u=theta.sigma_u,
        phi=theta.phi,
        alloc=alloc,
        sticks=uniform_sticks(C),
        zeta=hyper.a_zeta * hyper.b_zeta,
    )
