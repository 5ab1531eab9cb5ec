"""
Block a: assignment parameters theta^u of every mixture component.

Continuous clustering covariates follow a multivariate Gaussian per cluster
with a conjugate NIW(0, lambda0, nu0, Phi0) prior; each categorical
covariate follows a multinomial with a symmetric Dirichlet prior.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..models.model_spec import Hyperparameters
from ..stochastics.rng import RngStream
from ..stochastics.samplers import sample_dirichlet, sample_inverse_wishart, sample_mvn
from .stats import ClusterSufficientStats


@dataclass
class AssignmentParams:
    mu: np.ndarray              # (C, q)
    sigma_u: np.ndarray         # (C, q, q)
    phi: List[np.ndarray]       # per categorical covariate: (C, K_j)


def niw_posterior(count: float, mean: np.ndarray, scatter: np.ndarray,
                  hyper: Hyperparameters) -> Tuple[np.ndarray, float, float, np.ndarray]:
    """
    NIW posterior parameters for one cluster under a zero prior mean.

    Returns:
        Tuple (location, lambda_n, nu_n, Phi_n)
    """
    lambda_n = hyper.lambda0 + count
    nu_n = hyper.nu0 + count
    location = count * mean / lambda_n
    shrink = hyper.lambda0 * count / lambda_n
    phi_n = hyper.phi0 + scatter + shrink * np.outer(mean, mean)
    return location, lambda_n, nu_n, phi_n


def update_assignment_params(stats: ClusterSufficientStats, hyper: Hyperparameters,
                             rng: RngStream) -> AssignmentParams:
    """
    Draw (mu_c, Sigma_c) and phi_c for every cluster given the current allocation.

    Empty clusters have zero statistics, so their draw comes from the prior.

    Args:
        stats: Sufficient statistics consistent with the current allocation
        hyper: Resolved hyperparameters
        rng: Random stream

    Returns:
        AssignmentParams for all C clusters
    """
    C, q = stats.C, stats.q
    mu = np.zeros((C, q))
    sigma_u = np.zeros((C, q, q))
    if q:
        for c in range(C):
            location, lambda_n, nu_n, phi_n = niw_posterior(
                stats.counts[c], stats.means[c], stats.scatter[c], hyper)
            site = f"assignment parameters (cluster {c + 1})"
            sigma_u[c] = sample_inverse_wishart(phi_n, nu_n, rng, site=site)
            mu[c] = sample_mvn(location, sigma_u[c] / lambda_n, rng, site=site)
    phi = []
    for counts in stats.category_counts:
        phi.append(np.stack([sample_dirichlet(hyper.alpha_dir + counts[c], rng) for c in range(C)]))
    return AssignmentParams(mu=mu, sigma_u=sigma_u, phi=phi)
