"""
Getting-it-right validation of the Gibbs sampler.

The marginal-conditional simulator draws parameters from the prior and data
from the likelihood; the successive-conditional simulator alternates one
Gibbs sweep with a fresh data draw. With exact conditional updates both
produce the joint prior over parameters, so the means of a set of scalar
statistics must agree up to Monte Carlo error.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..conditionals.likelihood import residuals
from ..conditionals.outcome import sigma_posterior
from ..core.design import DesignViews, build_design_views
from ..models.dataset import LongitudinalDataset
from ..models.errors import SpecError
from ..models.model_spec import INTERCEPT, Hyperparameters, ModelSpec, RunConfig
from ..models.parameter_state import ParameterState, stick_breaking
from ..stochastics.psd import batched_cholesky
from ..stochastics.rng import RngStream
from ..stochastics.samplers import (
    sample_beta,
    sample_categorical_log,
    sample_dirichlet,
    sample_gamma,
    sample_inverse_wishart,
    sample_mvn,
    sample_mvn_batch,
)
from .diagnostics import effective_sample_size
from .gibbs import Block, GibbsSampler

logger = logging.getLogger(__name__)

Z_THRESHOLD = 4.0
MAX_OBSERVATIONS = 30
MAX_CLUSTERS = 4


@dataclass
class StatisticComparison:
    name: str
    prior_mean: float
    gibbs_mean: float
    prior_se: float
    gibbs_se: float
    z: float


@dataclass
class ValidationReport:
    statistics: List[StatisticComparison]
    draws: int
    threshold: float = Z_THRESHOLD
    label: str = "getting-it-right"

    @property
    def max_abs_z(self) -> float:
        return max(abs(s.z) for s in self.statistics)

    @property
    def passed(self) -> bool:
        return all(abs(s.z) < self.threshold for s in self.statistics)

    def as_dict(self) -> Dict[str, object]:
        return {
            "label": self.label, "draws": self.draws, "threshold": self.threshold,
            "passed": self.passed, "max_abs_z": self.max_abs_z,
            "statistics": [s.__dict__ for s in self.statistics],
        }


def toy_spec(C: int = MAX_CLUSTERS, q: int = 2, n_cat: int = 1) -> ModelSpec:
    """Random-intercept model with one regression covariate and a cluster offset."""
    return ModelSpec(
        outcome="y", x_cols=["x1"],
        u_cont_cols=[f"u{k + 1}" for k in range(q)], u_cat_cols=[f"c{k + 1}" for k in range(n_cat)],
        fe_cols=[INTERCEPT, "x1"], re_cols=[INTERCEPT], int_cols=[INTERCEPT],
        C=C, standardize=False,
    )


def toy_hyperparameters() -> Hyperparameters:
    """Priors with finite second moments for every monitored statistic."""
    return Hyperparameters(lam=1.0, a_sigma=3.0, b_sigma=2.0, psi_re=0.5, nu_re=5.0,
                           psi_int=1.0, nu_int=5.0, lambda0=1.0, nu0=6.0, phi0=1.0,
                           alpha_dir=1.0, a_zeta=2.0, b_zeta=1.0)


def design_dataset(spec: ModelSpec, n_obs: int, m: int, rng: RngStream, n_levels: int = 3) -> LongitudinalDataset:
    """Fixed regression design with placeholder outcome and clustering covariates."""
    generator = rng.generator
    individual = np.arange(n_obs) % m
    wave = np.arange(n_obs) // m
    return LongitudinalDataset(
        y=np.zeros(n_obs), time=1.0 + wave + generator.random(n_obs), individual=individual,
        X=generator.standard_normal((n_obs, len(spec.x_cols))), x_names=list(spec.x_cols),
        U_cont=np.zeros((n_obs, len(spec.u_cont_cols))), u_cont_names=list(spec.u_cont_cols),
        U_cat=np.zeros((n_obs, len(spec.u_cat_cols)), dtype=np.int64), u_cat_names=list(spec.u_cat_cols),
        n_categories=[n_levels] * len(spec.u_cat_cols),
    )


def prior_draw(views: DesignViews, C: int, hyper: Hyperparameters, rng: RngStream) -> ParameterState:
    """One draw of every parameter (and the allocation) from the prior."""
    q = views.q
    zeta = sample_gamma(hyper.a_zeta, 1.0 / hyper.b_zeta, rng)
    sticks = np.ones(C)
    sticks[:-1] = sample_beta(np.ones(C - 1), np.full(C - 1, zeta), rng)
    mu = np.zeros((C, q))
    sigma_u = np.zeros((C, q, q))
    for c in range(C):
        if q:
            sigma_u[c] = sample_inverse_wishart(hyper.phi0, hyper.nu0, rng)
            mu[c] = sample_mvn(np.zeros(q), sigma_u[c] / hyper.lambda0, rng)
    phi = [np.stack([sample_dirichlet(np.full(k, hyper.alpha_dir), rng) for _ in range(C)])
           for k in views.n_categories]
    sigma2 = 1.0 / sample_gamma(hyper.a_sigma, hyper.b_sigma, rng)
    beta = sample_mvn(np.zeros(views.p_fe), sigma2 / hyper.lam * np.eye(views.p_fe), rng)
    wint = sample_inverse_wishart(hyper.psi_int, hyper.nu_int, rng)
    gamma = sample_mvn_batch(np.zeros((C, views.p_int)), np.repeat(wint[None], C, axis=0), rng)
    wre = sample_inverse_wishart(hyper.psi_re, hyper.nu_re, rng)
    eta = sample_mvn_batch(np.zeros((views.m, views.p_re)), np.repeat(wre[None], views.m, axis=0), rng)
    with np.errstate(divide="ignore"):
        log_pi = np.log(stick_breaking(sticks))
    alloc = sample_categorical_log(np.tile(log_pi, (views.n, 1)), rng)
    return ParameterState(beta=beta, sigma2=sigma2, gamma=gamma, wint=wint, eta=eta, wre=wre,
                          mu=mu, sigma_u=sigma_u, phi=phi, alloc=alloc, sticks=sticks, zeta=zeta)


def simulate_observations(state: ParameterState, views: DesignViews,
                          rng: RngStream) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (y, U_cont, U_cat) from the likelihood given every parameter and Z."""
    generator = rng.generator
    n, q = views.n, views.q
    alloc = state.alloc
    u_cont = np.zeros((n, q))
    if q:
        factors = batched_cholesky(state.sigma_u, site="simulate_observations")
        noise = generator.standard_normal((n, q))
        u_cont = state.mu[alloc] + np.einsum("nij,nj->ni", factors[alloc], noise)
    u_cat = np.zeros((n, len(state.phi)), dtype=np.int64)
    for column, table in enumerate(state.phi):
        with np.errstate(divide="ignore"):
            u_cat[:, column] = sample_categorical_log(np.log(table[alloc]), rng)
    mean = (views.x_fe @ state.beta
            + np.einsum("ij,ij->i", views.x_re, state.eta[views.individual])
            + np.einsum("ij,ij->i", views.x_int, state.gamma[alloc]))
    y = mean + np.sqrt(state.sigma2) * generator.standard_normal(n)
    return y, u_cont, u_cat


def monitored_statistics(state: ParameterState) -> Dict[str, float]:
    """Scalar functions of the parameters compared between the two simulators."""
    stats = {f"beta[{k}]": float(state.beta[k]) for k in range(min(state.beta.size, 2))}
    stats.update({
        "beta[0]^2": float(state.beta[0] ** 2),
        "log sigma2": float(np.log(state.sigma2)),
        "log wre[0,0]": float(np.log(state.wre[0, 0])),
        "log wint[0,0]": float(np.log(state.wint[0, 0])),
        "gamma[0,0]": float(state.gamma[0, 0]),
        "eta[0,0]": float(state.eta[0, 0]),
        "zeta": float(state.zeta),
        "nclus": float(state.n_nonempty),
        "pi[0]": float(state.weights[0]),
    })
    if state.mu.shape[1]:
        stats["mu[0,0]"] = float(state.mu[0, 0])
        stats["log sigma_u[0,0,0]"] = float(np.log(state.sigma_u[0, 0, 0]))
    if state.phi:
        stats["phi[0][0,0]"] = float(state.phi[0][0, 0])
    return stats


def halved_rate_sigma_block(state, views, hyper, rng):
    """Deliberately wrong sigma2 update (Gamma rate halved); a negative control."""
    shape, rate = sigma_posterior(residuals(state, views), state.beta, hyper)
    state.sigma2 = 1.0 / sample_gamma(shape, 0.5 * rate, rng)


def _compare(name: str, prior: np.ndarray, gibbs: np.ndarray) -> StatisticComparison:
    prior_se = float(np.std(prior, ddof=1) / np.sqrt(prior.size))
    gibbs_se = float(np.std(gibbs, ddof=1) / np.sqrt(max(effective_sample_size(gibbs), 1.0)))
    difference = float(np.mean(prior) - np.mean(gibbs))
    scale = np.hypot(prior_se, gibbs_se)
    if scale == 0.0:
        z = 0.0 if difference == 0.0 else float(np.inf)
    else:
        z = difference / scale
    return StatisticComparison(name=name, prior_mean=float(np.mean(prior)), gibbs_mean=float(np.mean(gibbs)),
                               prior_se=prior_se, gibbs_se=gibbs_se, z=z)


def getting_it_right(spec: ModelSpec, hyper: Hyperparameters, runcfg: RunConfig, n_obs_small: int,
                     m: Optional[int] = None, overrides: Optional[Mapping[str, Block]] = None,
                     label: str = "getting-it-right") -> ValidationReport:
    """
    Compare marginal-conditional and successive-conditional draws.

    Args:
        spec: Small model specification (C <= 4); standardization is disabled
        hyper: Hyperparameters
        runcfg: ``iterations`` draws per simulator; the first ``burn_in``
            successive-conditional draws are discarded
        n_obs_small: Number of observations (<= 30)
        m: Number of individuals (default n_obs_small // 3)
        overrides: Replacement Gibbs blocks (negative controls)
        label: Report label

    Returns:
        ValidationReport; ``passed`` when every |z| < 4

    Raises:
        SpecError: If the problem is larger than the harness supports
    """
    if n_obs_small < 2 or n_obs_small > MAX_OBSERVATIONS:
        raise SpecError(f"getting-it-right needs 2..{MAX_OBSERVATIONS} observations, got {n_obs_small}")
    if spec.C > MAX_CLUSTERS:
        raise SpecError(f"getting-it-right needs C <= {MAX_CLUSTERS}, got {spec.C}")
    spec = replace(spec, standardize=False)
    m = m or max(n_obs_small // 3, 1)
    rng = RngStream(runcfg.seed)
    data = design_dataset(spec, n_obs_small, m, rng.child(0))
    views = build_design_views(data, spec)
    resolved = hyper.resolve(views.p_re, views.p_int, views.q)
    sampler = GibbsSampler(views, resolved, overrides=overrides)
    C = spec.C

    marginal_rng = rng.child(1)
    marginal: Dict[str, List[float]] = {}
    for _ in range(runcfg.iterations):
        for name, value in monitored_statistics(prior_draw(views, C, resolved, marginal_rng)).items():
            marginal.setdefault(name, []).append(value)

    successive_rng = rng.child(2)
    state = prior_draw(views, C, resolved, successive_rng)
    current = views.with_observations(*simulate_observations(state, views, successive_rng))
    successive: Dict[str, List[float]] = {}
    for iteration in range(1, runcfg.iterations + 1):
        state = sampler.sweep(state, successive_rng, iteration, views=current)
        current = views.with_observations(*simulate_observations(state, views, successive_rng))
        if iteration > runcfg.burn_in:
            for name, value in monitored_statistics(state).items():
                successive.setdefault(name, []).append(value)

    comparisons = [_compare(name, np.asarray(marginal[name]), np.asarray(successive[name])) for name in marginal]
    report = ValidationReport(statistics=comparisons, draws=runcfg.iterations, label=label)
    logger.info(f"{label}: {len(comparisons)} statistics, max |z| = {report.max_abs_z:.2f}, "
                f"{'passed' if report.passed else 'failed'}")
    return report


@dataclass
class ValidationSuite:
    reference: ValidationReport
    negative_control: ValidationReport
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """The correct sampler passes and the corrupted one is caught."""
        return self.reference.passed and not self.negative_control.passed

    def as_dict(self) -> Dict[str, object]:
        return {"passed": self.passed, "reference": self.reference.as_dict(),
                "negative_control": self.negative_control.as_dict(), **self.extra}


def validation_suite(runcfg: RunConfig, n_obs_small: int = 30, m: int = 10, C: int = MAX_CLUSTERS,
                     q: int = 2) -> ValidationSuite:
    """Run the reference harness and the corrupted-sigma2 negative control."""
    spec = toy_spec(C=C, q=q)
    hyper = toy_hyperparameters()
    reference = getting_it_right(spec, hyper, runcfg, n_obs_small, m=m)
    corrupted = getting_it_right(spec, hyper, runcfg, n_obs_small, m=m,
                                 overrides={"sigma": halved_rate_sigma_block}, label="negative control")
    return ValidationSuite(reference=reference, negative_control=corrupted)
