"""
Random-variate samplers used by the Gibbs blocks.

Gamma is parameterized by (shape, rate) everywhere in this module; callers
holding a (shape, scale) pair convert at the call site.
"""

from typing import Sequence

import numpy as np
import scipy.linalg

from ..models.errors import NumericalError, ParameterError
from .psd import batched_cholesky, cho_solve_batch, cholesky, symmetrize, upper_solve_batch
from .rng import RngStream


def _check_positive(value, name: str) -> None:
    array = np.asarray(value, dtype=float)
    if array.size == 0 or not np.all(np.isfinite(array)) or np.any(array <= 0):
        raise ParameterError(f"'{name}' must be positive and finite, got {value}")


def sample_mvn(mean, cov, rng: RngStream, site: str = "sample_mvn") -> np.ndarray:
    """
    Draw from N(mean, cov) through the Cholesky factor of ``cov``.

    Raises:
        ParameterError: If the dimensions disagree
        FactorizationError: If ``cov`` is not positive definite
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (mean.size, mean.size):
        raise ParameterError(f"mean has dimension {mean.size} but covariance is {cov.shape}")
    factor = cholesky(cov, site=site)
    return mean + factor @ rng.generator.standard_normal(mean.size)


def sample_mvn_precision(linear, precision, rng: RngStream, site: str = "sample_mvn_precision"):
    """
    Draw from N(P^-1 b, P^-1) given the precision P and linear term b.

    Returns:
        Tuple of (draw, mean)
    """
    linear = np.atleast_1d(np.asarray(linear, dtype=float))
    factor = cholesky(precision, site=site)
    mean = scipy.linalg.cho_solve((factor, True), linear)
    noise = scipy.linalg.solve_triangular(factor.T, rng.generator.standard_normal(linear.size), lower=False)
    return mean + noise, mean


def sample_mvn_batch(means: np.ndarray, covs: np.ndarray, rng: RngStream,
                     site: str = "sample_mvn_batch", label: str = "block") -> np.ndarray:
    """Independent draws N(means[k], covs[k]) for a stack of k small Gaussians."""
    means = np.asarray(means, dtype=float)
    if means.shape[0] == 0:
        return means.copy()
    factors = batched_cholesky(covs, site=site, label=label)
    noise = rng.generator.standard_normal(means.shape)
    return means + np.einsum("kij,kj->ki", factors, noise)


def sample_mvn_precision_batch(linears: np.ndarray, precisions: np.ndarray, rng: RngStream,
                               site: str = "sample_mvn_precision_batch", label: str = "block"):
    """
    Independent draws N(P_k^-1 b_k, P_k^-1) for a stack of precisions.

    Returns:
        Tuple of (draws, means), both of shape (k, p)
    """
    linears = np.asarray(linears, dtype=float)
    if linears.shape[0] == 0:
        return linears.copy(), linears.copy()
    factors = batched_cholesky(precisions, site=site, label=label)
    means = cho_solve_batch(factors, linears)
    draws = means + upper_solve_batch(factors, rng.generator.standard_normal(linears.shape))
    return draws, means


def sample_inverse_wishart(scale, dof: float, rng: RngStream,
                           site: str = "sample_inverse_wishart") -> np.ndarray:
    """
    Draw from IW(scale, dof) as the inverse of a Bartlett-decomposed Wishart draw.

    With scale = C C^T and A the Bartlett factor of W(I, dof), the draw is
    C A^-T A^-1 C^T.

    Raises:
        ParameterError: If dof <= dim - 1
        FactorizationError: If ``scale`` is not positive definite
    """
    scale = np.atleast_2d(np.asarray(scale, dtype=float))
    dim = scale.shape[0]
    if not np.isfinite(dof) or dof <= dim - 1:
        raise ParameterError(f"inverse-Wishart dof must exceed dim - 1 = {dim - 1}, got {dof}")
    factor = cholesky(scale, site=site)
    generator = rng.generator
    bartlett = np.zeros((dim, dim))
    bartlett[np.diag_indices(dim)] = np.sqrt(generator.chisquare(dof - np.arange(dim)))
    lower = np.tril_indices(dim, -1)
    bartlett[lower] = generator.standard_normal(len(lower[0]))
    root = scipy.linalg.solve_triangular(bartlett, factor.T, lower=True)
    return symmetrize(root.T @ root)


def sample_gamma(shape: float, rate: float, rng: RngStream) -> float:
    """Gamma draw with mean shape / rate."""
    _check_positive(shape, "shape")
    _check_positive(rate, "rate")
    return float(rng.generator.gamma(shape, 1.0 / rate))


def sample_beta(a, b, rng: RngStream):
    """Beta draw with mean a / (a + b); array arguments give one draw per entry."""
    _check_positive(a, "a")
    _check_positive(b, "b")
    draws = rng.generator.beta(a, b)
    return float(draws) if np.ndim(draws) == 0 else draws


def sample_dirichlet(alpha: Sequence[float], rng: RngStream) -> np.ndarray:
    """Dirichlet draw by normalizing independent Gamma(alpha_k, 1) variates."""
    alpha = np.asarray(alpha, dtype=float)
    _check_positive(alpha, "alpha")
    draws = rng.generator.gamma(alpha)
    total = draws.sum()
    if total <= 0:
        # every component underflowed; fall back to the largest concentration
        draws = (alpha == alpha.max()).astype(float)
        total = draws.sum()
    simplex = draws / total
    return simplex / simplex.sum()


def sample_categorical(weights: Sequence[float], rng: RngStream) -> int:
    """Index c drawn with probability weights[c] / sum(weights)."""
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0 or np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ParameterError(f"weights must be nonnegative and finite, got {weights}")
    total = weights.sum()
    if total <= 0:
        raise ParameterError("weights sum to zero")
    cumulative = np.cumsum(weights / total)
    index = int(np.searchsorted(cumulative, rng.generator.random(), side="right"))
    index = min(index, weights.size - 1)
    while weights[index] == 0:
        index -= 1
    return index


def normalize_log_weights(log_weights: np.ndarray) -> np.ndarray:
    """
    Row-normalize log-weights into probabilities with max-subtraction.

    Raises:
        NumericalError: If a row has no finite weight (names the row index)
    """
    log_weights = np.atleast_2d(log_weights)
    row_max = np.max(log_weights, axis=1, keepdims=True)
    bad = ~np.isfinite(row_max[:, 0])
    if np.any(bad):
        index = int(np.flatnonzero(bad)[0])
        raise NumericalError(f"all allocation weights are -inf for observation {index + 1}")
    probabilities = np.exp(log_weights - row_max)
    probabilities /= probabilities.sum(axis=1, keepdims=True)
    return probabilities


def sample_categorical_log(log_weights: np.ndarray, rng: RngStream) -> np.ndarray:
    """One categorical draw per row of a (n, C) log-weight matrix."""
    probabilities = normalize_log_weights(log_weights)
    cumulative = np.cumsum(probabilities, axis=1)
    uniforms = rng.generator.random(probabilities.shape[0])[:, None]
    draws = np.sum(cumulative <= uniforms * cumulative[:, -1:], axis=1)
    draws = np.minimum(draws, probabilities.shape[1] - 1)
    # a zero-probability column can only be hit through rounding at the top edge
    stuck = probabilities[np.arange(draws.size), draws] == 0
    for row in np.flatnonzero(stuck):
        draws[row] = int(np.flatnonzero(probabilities[row] > 0)[-1])
    return draws.astype(np.int64)
