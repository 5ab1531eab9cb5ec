"""
Block b: the LMM outcome model.

beta is drawn with the cluster interaction effects gamma marginalised out,
then every gamma_c given beta. Marginal covariances V_c = sigma2 I + A_c W A_c^T
are never formed; their inverses enter through the Woodbury identity
V_c^-1 = (I - A_c M_c^-1 A_c^T) / sigma2 with M_c = sigma2 W^-1 + A_c^T A_c, so
every linear solve has the latent dimension.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..core.design import DesignViews, group_sum, outer_rows
from ..models.model_spec import Hyperparameters
from ..models.parameter_state import ParameterState
from ..stochastics.psd import batched_cholesky, cho_solve_batch, inverse_pd, symmetrize
from ..stochastics.rng import RngStream
from ..stochastics.samplers import (
    sample_gamma,
    sample_inverse_wishart,
    sample_mvn_precision,
    sample_mvn_precision_batch,
)
from .likelihood import interaction_part, random_effect_part, residuals


@dataclass
class BetaGammaMoments:
    """Gaussian conditionals of the joint (beta, gamma) block in precision form."""
    beta_precision: np.ndarray      # (p_fe, p_fe)
    beta_linear: np.ndarray         # (p_fe,)
    gamma_precision: np.ndarray     # (C, p_int, p_int)
    gamma_offset: np.ndarray        # (C, p_int): A_c^T r_c / sigma2
    cross: np.ndarray               # (C, p_fe, p_int): F_c^T A_c / sigma2

    @property
    def beta_cov(self) -> np.ndarray:
        return inverse_pd(self.beta_precision, site="beta (marginal covariance)")

    @property
    def beta_mean(self) -> np.ndarray:
        return self.beta_cov @ self.beta_linear

    def gamma_linear(self, beta: np.ndarray) -> np.ndarray:
        return self.gamma_offset - np.einsum("cfi,f->ci", self.cross, beta)

    def gamma_moments(self, beta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Means (C, p_int) and covariances (C, p_int, p_int) of gamma_c | beta."""
        covs = symmetrize(np.linalg.inv(self.gamma_precision))
        means = np.einsum("cij,cj->ci", covs, self.gamma_linear(beta))
        return means, covs


def beta_gamma_moments(state: ParameterState, views: DesignViews,
                       hyper: Hyperparameters) -> BetaGammaMoments:
    """
    Conditional moments of beta (gamma marginalised) and of gamma_c | beta.

    Raises:
        FactorizationError: If a Woodbury core M_c is not positive definite (names cluster c)
    """
    C = state.C
    sigma2 = state.sigma2
    F, A = views.x_fe, views.x_int
    r = views.y - random_effect_part(state, views)
    alloc = state.alloc

    ff = group_sum(outer_rows(F), alloc, C)
    fa = group_sum(np.einsum("ni,nj->nij", F, A), alloc, C)
    aa = group_sum(outer_rows(A), alloc, C)
    fr = group_sum(F * r[:, None], alloc, C)
    ar = group_sum(A * r[:, None], alloc, C)

    wint_inv = inverse_pd(state.wint, site="beta/gamma (W^Int)")
    core = symmetrize(sigma2 * wint_inv[None] + aa)
    factors = batched_cholesky(core, site="beta/gamma marginal covariance V_c", label="cluster")
    rhs = np.concatenate((np.swapaxes(fa, 1, 2), ar[..., None]), axis=2)
    solved = cho_solve_batch(factors, rhs)
    p_fe = F.shape[1]
    gram = ff - np.einsum("cfi,cig->cfg", fa, solved[..., :p_fe])
    linear = fr - np.einsum("cfi,ci->cf", fa, solved[..., p_fe])

    beta_precision = symmetrize(hyper.lam * np.eye(p_fe) + gram.sum(axis=0)) / sigma2
    beta_linear = linear.sum(axis=0) / sigma2
    gamma_precision = symmetrize(wint_inv[None] + aa / sigma2)
    return BetaGammaMoments(
        beta_precision=beta_precision, beta_linear=beta_linear,
        gamma_precision=gamma_precision, gamma_offset=ar / sigma2, cross=fa / sigma2,
    )


def update_beta_gamma_joint(state: ParameterState, views: DesignViews, hyper: Hyperparameters,
                            rng: RngStream) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw beta from its gamma-marginal conditional, then each gamma_c given beta.

    Empty clusters receive draws from the prior N(0, W^Int).

    Returns:
        Tuple (beta, gamma) with gamma of shape (C, p_int)
    """
    moments = beta_gamma_moments(state, views, hyper)
    beta, _ = sample_mvn_precision(moments.beta_linear, moments.beta_precision, rng,
                                   site="beta (marginal conditional)")
    gamma, _ = sample_mvn_precision_batch(moments.gamma_linear(beta), moments.gamma_precision, rng,
                                          site="gamma", label="cluster")
    return beta, gamma


def sigma_posterior(resid: np.ndarray, beta: np.ndarray, hyper: Hyperparameters,
                    include_beta_prior: bool = True) -> Tuple[float, float]:
    """
    Shape and rate of the Gamma conditional of the precision 1/sigma2.

    The beta prior N(0, sigma2/lambda I) contributes p_fe/2 to the shape and
    lambda |beta|^2 / 2 to the rate; ``include_beta_prior=False`` gives the
    likelihood-only update.
    """
    shape = hyper.a_sigma + 0.5 * resid.size
    rate = hyper.b_sigma + 0.5 * float(np.sum(resid ** 2))
    if include_beta_prior:
        shape += 0.5 * beta.size
        rate += 0.5 * hyper.lam * float(np.sum(beta ** 2))
    return shape, rate


def update_sigma(state: ParameterState, views: DesignViews, hyper: Hyperparameters,
                 rng: RngStream) -> float:
    """Draw sigma2 = 1/tau with tau from its Gamma(shape, rate) conditional."""
    shape, rate = sigma_posterior(residuals(state, views), state.beta, hyper)
    return 1.0 / sample_gamma(shape, rate, rng)


def random_effects_moments(state: ParameterState, views: DesignViews) -> Tuple[np.ndarray, np.ndarray]:
    """
    Precisions (m, p_re, p_re) and linear terms (m, p_re) of eta_j | rest.

    Equivalent to the covariance form with S_j = sigma2 I + X_j W^Re X_j^T.
    """
    partial = views.y - views.x_fe @ state.beta - interaction_part(state, views)
    m = views.m
    linear = group_sum(views.x_re * partial[:, None], views.individual, m) / state.sigma2
    wre_inv = inverse_pd(state.wre, site="random effects (W^Re)")
    precision = symmetrize(wre_inv[None] + views.re_gram / state.sigma2)
    return precision, linear


def update_random_effects(state: ParameterState, views: DesignViews, hyper: Hyperparameters,
                          rng: RngStream) -> np.ndarray:
    """Draw eta_j for every individual; failures name the individual."""
    precision, linear = random_effects_moments(state, views)
    eta, _ = sample_mvn_precision_batch(linear, precision, rng, site="random effects", label="individual")
    return eta


def update_wre(eta: np.ndarray, hyper: Hyperparameters, rng: RngStream) -> np.ndarray:
    """W^Re ~ IW(Psi^RE + sum_j eta_j eta_j^T, nu^RE + m)."""
    eta = np.asarray(eta, dtype=float)
    scale = hyper.psi_re + eta.T @ eta
    return sample_inverse_wishart(scale, hyper.nu_re + eta.shape[0], rng, site="W^Re")


def update_wint(gamma: np.ndarray, hyper: Hyperparameters, rng: RngStream) -> np.ndarray:
    """W^Int ~ IW(Psi^Int + sum_c gamma_c gamma_c^T, nu^Int + C) over all C clusters."""
    gamma = np.asarray(gamma, dtype=float)
    scale = hyper.psi_int + gamma.T @ gamma
    return sample_inverse_wishart(scale, hyper.nu_int + gamma.shape[0], rng, site="W^Int")
