"""
Conditional-posterior updates of the blocked Gibbs sampler.

Block a updates the assignment parameters; block b the outcome model
(beta/gamma jointly, sigma2, random effects and their covariances); block c
the allocations, stick-breaking weights and DP concentration.
"""

from .assignment import AssignmentParams, update_assignment_params
from .mixture import update_allocations, update_concentration, update_weights
from .outcome import (
    update_beta_gamma_joint,
    update_random_effects,
    update_sigma,
    update_wint,
    update_wre,
)
from .stats import ClusterSufficientStats

__all__ = [
    "AssignmentParams",
    "ClusterSufficientStats",
    "update_assignment_params",
    "update_allocations",
    "update_beta_gamma_joint",
    "update_concentration",
    "update_random_effects",
    "update_sigma",
    "update_weights",
    "update_wint",
    "update_wre",
]
