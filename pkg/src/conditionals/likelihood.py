"""
Log-density pieces shared by the allocation update and the log-likelihood trace.
"""

from typing import List

import numpy as np
import scipy.linalg

from ..core.design import DesignViews
from ..models.parameter_state import ParameterState
from ..stochastics.psd import cholesky, logdet_from_cholesky

LOG_2PI = float(np.log(2.0 * np.pi))


def random_effect_part(state: ParameterState, views: DesignViews) -> np.ndarray:
    """x^Re_i eta_{g(i)} per observation."""
    return np.einsum("ij,ij->i", views.x_re, state.eta[views.individual])


def interaction_part(state: ParameterState, views: DesignViews) -> np.ndarray:
    """x^Int_i gamma_{Z_i} per observation."""
    return np.einsum("ij,ij->i", views.x_int, state.gamma[state.alloc])


def residuals(state: ParameterState, views: DesignViews) -> np.ndarray:
    return (views.y - views.x_fe @ state.beta - random_effect_part(state, views)
            - interaction_part(state, views))


def outcome_log_density(state: ParameterState, views: DesignViews) -> np.ndarray:
    """log N(y_i; x^Fe_i beta + x^Re_i eta_g(i) + x^Int_i gamma_c, sigma2) for every (i, c)."""
    base = views.y - views.x_fe @ state.beta - random_effect_part(state, views)
    deviation = base[:, None] - views.x_int @ state.gamma.T
    return -0.5 * (LOG_2PI + np.log(state.sigma2)) - 0.5 * deviation ** 2 / state.sigma2


def gaussian_log_density(u_cont: np.ndarray, mu: np.ndarray, sigma_u: np.ndarray) -> np.ndarray:
    """log N(u_i; mu_c, Sigma_c) for every (i, c); zero columns when q = 0."""
    n, q = u_cont.shape
    C = mu.shape[0]
    out = np.zeros((n, C))
    if q == 0:
        return out
    for c in range(C):
        factor = cholesky(sigma_u[c], site=f"allocations (cluster {c + 1} covariance)")
        whitened = scipy.linalg.solve_triangular(factor, (u_cont - mu[c]).T, lower=True)
        out[:, c] = -0.5 * (q * LOG_2PI + logdet_from_cholesky(factor) + np.sum(whitened ** 2, axis=0))
    return out


def categorical_log_density(u_cat: np.ndarray, phi: List[np.ndarray]) -> np.ndarray:
    """Sum over categorical covariates of log phi_{c,j}[u_ij], shape (n, C)."""
    n = u_cat.shape[0]
    C = phi[0].shape[0] if phi else 0
    out = np.zeros((n, C))
    with np.errstate(divide="ignore"):
        for column, table in enumerate(phi):
            out += np.log(table[:, u_cat[:, column]]).T
    return out


def assignment_log_density(state: ParameterState, views: DesignViews) -> np.ndarray:
    out = gaussian_log_density(views.u_cont, state.mu, state.sigma_u)
    if state.phi:
        out = out + categorical_log_density(views.u_cat, state.phi)
    return out


def complete_data_loglik(state: ParameterState, views: DesignViews) -> float:
    """log p(y, U | all parameters, Z) at the current allocation."""
    rows = np.arange(views.n)
    outcome = -0.5 * (LOG_2PI + np.log(state.sigma2)) - 0.5 * residuals(state, views) ** 2 / state.sigma2
    assignment = assignment_log_density(state, views)[rows, state.alloc]
    return float(np.sum(outcome) + np.sum(assignment))
