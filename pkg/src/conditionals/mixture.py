"""
Block c: allocations, stick-breaking weights and the DP concentration.
"""

from typing import Tuple

import numpy as np

from ..core.design import DesignViews
from ..models.model_spec import Hyperparameters
from ..models.parameter_state import ParameterState, stick_breaking
from ..stochastics.rng import RngStream
from ..stochastics.samplers import normalize_log_weights, sample_beta, sample_categorical_log, sample_gamma
from .likelihood import assignment_log_density, outcome_log_density

STICK_CLAMP = 1.0 - 1e-12


def allocation_log_weights(state: ParameterState, views: DesignViews) -> np.ndarray:
    """
    Unnormalised log allocation weights, shape (n, C).

    log pi_c + log N(y_i | ..., gamma_c, sigma2) + log p(u_i | theta^u_c)
    """
    with np.errstate(divide="ignore"):
        log_pi = np.log(state.weights)
    return log_pi[None, :] + outcome_log_density(state, views) + assignment_log_density(state, views)


def allocation_probabilities(state: ParameterState, views: DesignViews) -> np.ndarray:
    """Normalised allocation probabilities per observation (max-subtracted in log space)."""
    return normalize_log_weights(allocation_log_weights(state, views))


def update_allocations(state: ParameterState, views: DesignViews, rng: RngStream) -> np.ndarray:
    """
    Draw every Z_i from its categorical conditional over the C clusters.

    Raises:
        NumericalError: If every weight of an observation is -inf
    """
    return sample_categorical_log(allocation_log_weights(state, views), rng)


def update_weights(alloc: np.ndarray, zeta: float, C: int, rng: RngStream) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw the sticks V_c ~ Beta(1 + n_c, zeta + sum_{l>c} n_l) for c < C, with V_C = 1.

    Returns:
        Tuple (sticks, weights)
    """
    counts = np.bincount(np.asarray(alloc, dtype=np.int64), minlength=C).astype(float)
    tail = np.concatenate((np.cumsum(counts[::-1])[::-1][1:], [0.0]))
    sticks = np.ones(C)
    sticks[:-1] = sample_beta(1.0 + counts[:-1], zeta + tail[:-1], rng)
    return sticks, stick_breaking(sticks)


def concentration_posterior(sticks: np.ndarray, hyper: Hyperparameters, C: int) -> Tuple[float, float]:
    """
    Shape and scale of the Gamma conditional of zeta.

    Returns:
        Tuple (a_zeta + C - 1, o) with 1/o = 1/b_zeta - sum_{c<C} log(1 - V_c)
    """
    informative = np.minimum(np.asarray(sticks, dtype=float)[: C - 1], STICK_CLAMP)
    inverse_scale = 1.0 / hyper.b_zeta - float(np.sum(np.log1p(-informative)))
    return hyper.a_zeta + C - 1, 1.0 / inverse_scale


def update_concentration(sticks: np.ndarray, hyper: Hyperparameters, rng: RngStream, C: int) -> float:
    """Draw zeta; the (shape, scale) pair is converted to a rate here."""
    shape, scale = concentration_posterior(sticks, hyper, C)
    return sample_gamma(shape, 1.0 / scale, rng)
