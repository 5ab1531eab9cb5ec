"""
Tests for the conditional updates of the Gibbs blocks.

Closed-form moments are checked against dense or brute-force oracles;
samplers are checked by Monte Carlo averages with loose tolerances.
"""
import numpy as np
import pytest
from scipy import stats

from src.conditionals.assignment import niw_posterior, update_assignment_params
from src.conditionals.likelihood import complete_data_loglik, residuals
from src.conditionals.mixture import (
    allocation_probabilities,
    concentration_posterior,
    update_allocations,
    update_concentration,
    update_weights,
)
from src.conditionals.outcome import (
    beta_gamma_moments,
    random_effects_moments,
    sigma_posterior,
    update_beta_gamma_joint,
    update_random_effects,
    update_sigma,
    update_wint,
    update_wre,
)
from src.conditionals.stats import ClusterSufficientStats
from src.models.model_spec import Hyperparameters
from src.models.parameter_state import ParameterState, stick_breaking
from src.stochastics.rng import RngStream
from src.testing.test_helpers import dense_beta_gamma_oracle, dense_random_effect_oracle, niw_grid_moments


def _random_spd(rng, dim, scale=1.0):
    A = rng.standard_normal((dim, dim))
    return scale * (A @ A.T / dim + np.eye(dim))


@pytest.fixture
def toy_state(toy_views):
    """State on the toy views with cluster 3 left empty."""
    rng = np.random.default_rng(21)
    C = 3
    n, m = toy_views.n, toy_views.m
    alloc = np.tile([0, 1], n // 2)
    return ParameterState(
        beta=rng.standard_normal(toy_views.p_fe), sigma2=0.7,
        gamma=rng.standard_normal((C, toy_views.p_int)), wint=_random_spd(rng, toy_views.p_int),
        eta=rng.standard_normal((m, toy_views.p_re)), wre=_random_spd(rng, toy_views.p_re, 0.5),
        mu=rng.standard_normal((C, toy_views.q)), sigma_u=np.stack([_random_spd(rng, toy_views.q) for _ in range(C)]),
        phi=[np.array([[0.2, 0.3, 0.5], [0.6, 0.2, 0.2], [1 / 3, 1 / 3, 1 / 3]])],
        alloc=alloc, sticks=np.array([0.4, 0.5, 1.0]), zeta=1.3,
    )


class TestBetaGammaBlock:
    """Test the Woodbury-form moments of the joint fixed/interaction-effect block."""

    def test_beta_matches_dense_marginal(self, toy_state, toy_views):
        hyper = Hyperparameters(lam=0.5)
        moments = beta_gamma_moments(toy_state, toy_views, hyper)
        mean, cov, _ = dense_beta_gamma_oracle(toy_state, toy_views, lam=0.5)
        assert np.allclose(moments.beta_mean, mean, atol=1e-8)
        assert np.allclose(moments.beta_cov, cov, atol=1e-8)

    def test_gamma_matches_dense_conditional(self, toy_state, toy_views):
        hyper = Hyperparameters(lam=0.5)
        moments = beta_gamma_moments(toy_state, toy_views, hyper)
        _, _, gamma_oracle = dense_beta_gamma_oracle(toy_state, toy_views, lam=0.5)
        beta = np.array([0.3, -0.8])
        means, covs = moments.gamma_moments(beta)
        for c, (mean, cov) in enumerate(gamma_oracle(beta)):
            assert np.allclose(means[c], mean, atol=1e-8)
            assert np.allclose(covs[c], cov, atol=1e-8)

    def test_empty_cluster_gets_prior(self, toy_state, toy_views):
        moments = beta_gamma_moments(toy_state, toy_views, Hyperparameters())
        means, covs = moments.gamma_moments(toy_state.beta)
        assert np.allclose(means[2], 0.0)
        assert np.allclose(covs[2], toy_state.wint)

    def test_draws_center_on_marginal_mean(self, toy_state, toy_views):
        mean, cov, _ = dense_beta_gamma_oracle(toy_state, toy_views, lam=0.5)
        rng = RngStream(31)
        draws = [update_beta_gamma_joint(toy_state, toy_views, Hyperparameters(lam=0.5), rng) for _ in range(4000)]
        assert draws[0][1].shape == toy_state.gamma.shape
        betas = np.array([beta for beta, _ in draws])
        tolerance = 5.0 * np.sqrt(np.diag(cov) / len(draws))
        assert np.all(np.abs(betas.mean(axis=0) - mean) < tolerance)


class TestRandomEffects:
    """Test the per-individual random-effect conditional."""

    def test_matches_dense_oracle(self, toy_state, toy_views):
        precision, linear = random_effects_moments(toy_state, toy_views)
        for j in range(toy_views.m):
            mean, cov = dense_random_effect_oracle(toy_state, toy_views, j)
            assert np.allclose(np.linalg.solve(precision[j], linear[j]), mean, atol=1e-8)
            assert np.allclose(np.linalg.inv(precision[j]), cov, atol=1e-8)

    def test_draws_center_on_conditional_mean(self, toy_state, toy_views):
        mean, cov = dense_random_effect_oracle(toy_state, toy_views, 0)
        rng = RngStream(32)
        draws = np.array([update_random_effects(toy_state, toy_views, Hyperparameters(), rng)[0]
                          for _ in range(4000)])
        tolerance = 5.0 * np.sqrt(np.diag(cov) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - mean) < tolerance)


class TestResidualVariance:
    """Test the Gamma conditional of the residual precision."""

    def test_with_beta_prior(self):
        hyper = Hyperparameters(lam=0.01, a_sigma=1.0, b_sigma=1.0)
        shape, rate = sigma_posterior(np.array([1.0, -1.0, 1.0, -1.0]), np.array([1.0, 2.0]), hyper)
        assert shape == pytest.approx(1.0 + 2.0 + 1.0)
        assert rate == pytest.approx(1.0 + 2.0 + 0.5 * 0.01 * 5.0)

    def test_likelihood_only(self):
        hyper = Hyperparameters(a_sigma=1.0, b_sigma=1.0)
        shape, rate = sigma_posterior(np.array([1.0, -1.0, 1.0, -1.0]), np.array([1.0, 2.0]), hyper,
                                      include_beta_prior=False)
        assert (shape, rate) == (pytest.approx(3.0), pytest.approx(3.0))

    def test_precision_draw_mean(self, toy_state, toy_views):
        hyper = Hyperparameters(lam=0.5, a_sigma=2.0, b_sigma=1.0)
        shape, rate = sigma_posterior(residuals(toy_state, toy_views), toy_state.beta, hyper)
        rng = RngStream(33)
        precisions = 1.0 / np.array([update_sigma(toy_state, toy_views, hyper, rng) for _ in range(6000)])
        assert precisions.mean() == pytest.approx(shape / rate, rel=0.03)

    def test_residuals_use_every_component(self, toy_state, toy_views):
        v = toy_views
        expected = (v.y - v.x_fe @ toy_state.beta
                    - np.sum(v.x_re * toy_state.eta[v.individual], axis=1)
                    - np.sum(v.x_int * toy_state.gamma[toy_state.alloc], axis=1))
        assert np.allclose(residuals(toy_state, v), expected)


class TestAssignmentParameters:
    """Test the conjugate update of the cluster covariate profiles."""

    def test_single_observation_location(self):
        hyper = Hyperparameters(lambda0=1.0, nu0=3.0, phi0=1.0).resolve(1, 1, 1)
        location, lambda_n, nu_n, phi_n = niw_posterior(1.0, np.array([2.0]), np.zeros((1, 1)), hyper)
        assert location == pytest.approx([1.0])
        assert (lambda_n, nu_n) == (2.0, 4.0)
        assert phi_n[0, 0] == pytest.approx(3.0)

    def test_posterior_matches_grid_integration(self):
        observations = np.array([0.5, 1.2, 0.8, 1.5, 1.0])
        hyper = Hyperparameters(lambda0=1.0, nu0=6.0, phi0=2.0).resolve(1, 1, 1)
        mean = observations.mean()
        scatter = np.array([[np.sum((observations - mean) ** 2)]])
        location, _, nu_n, phi_n = niw_posterior(observations.size, np.array([mean]), scatter, hyper)
        grid_mu, grid_var = niw_grid_moments(observations, 1.0, 6.0, 2.0)
        assert location[0] == pytest.approx(5.0 / 6.0)
        assert grid_mu == pytest.approx(location[0], abs=5e-3)
        assert phi_n[0, 0] / (nu_n - 2) == pytest.approx(0.3793, abs=1e-4)
        assert grid_var == pytest.approx(phi_n[0, 0] / (nu_n - 2), abs=5e-3)

    def test_sufficient_statistics(self, toy_state, toy_views):
        suff = ClusterSufficientStats.from_allocation(
            toy_views.u_cont, toy_views.u_cat, toy_views.n_categories, toy_state.alloc, 3)
        assert suff.counts.tolist() == [6.0, 6.0, 0.0]
        rows = toy_state.alloc == 1
        centered = toy_views.u_cont[rows] - toy_views.u_cont[rows].mean(axis=0)
        assert np.allclose(suff.means[1], toy_views.u_cont[rows].mean(axis=0))
        assert np.allclose(suff.scatter[1], centered.T @ centered)
        assert np.allclose(suff.means[2], 0.0) and np.allclose(suff.scatter[2], 0.0)
        assert suff.category_counts[0].sum(axis=1).tolist() == [6.0, 6.0, 0.0]

    def test_draws_center_on_posterior_location(self):
        rng = RngStream(8)
        u = np.array([[2.0], [2.2], [1.8], [2.1]])
        hyper = Hyperparameters(lambda0=1.0, phi0=1.0).resolve(1, 1, 1)
        suff = ClusterSufficientStats.from_allocation(u, np.zeros((4, 0), dtype=np.int64), [],
                                                      np.array([0, 0, 0, 0]), 2)
        draws = np.array([update_assignment_params(suff, hyper, rng).mu[:, 0] for _ in range(3000)])
        assert draws[:, 0].mean() == pytest.approx(4 * 2.025 / 5, abs=0.03)
        assert draws[:, 1].mean() == pytest.approx(0.0, abs=0.1)


class TestMixtureBlocks:
    """Test allocations, stick-breaking weights and the concentration."""

    def test_allocation_probabilities_match_densities(self, toy_state, toy_views):
        v, s = toy_views, toy_state
        base = v.y - v.x_fe @ s.beta - np.sum(v.x_re * s.eta[v.individual], axis=1)
        expected = np.zeros((v.n, s.C))
        for c in range(s.C):
            expected[:, c] = (np.log(s.weights[c])
                              + stats.norm.logpdf(base, v.x_int @ s.gamma[c], np.sqrt(s.sigma2))
                              + stats.multivariate_normal.logpdf(v.u_cont, s.mu[c], s.sigma_u[c])
                              + np.log(s.phi[0][c, v.u_cat[:, 0]]))
        expected = np.exp(expected - expected.max(axis=1, keepdims=True))
        expected /= expected.sum(axis=1, keepdims=True)
        assert np.allclose(allocation_probabilities(s, v), expected, atol=1e-10)

    def test_identical_clusters_give_prior_weights(self, toy_state, toy_views):
        state = toy_state.copy()
        state.gamma[:] = state.gamma[0]
        state.mu[:] = state.mu[0]
        state.sigma_u[:] = state.sigma_u[0]
        state.phi[0][:] = state.phi[0][0]
        probabilities = allocation_probabilities(state, toy_views)
        assert np.allclose(probabilities, state.weights[None, :])

    def test_allocation_draws_are_valid_labels(self, toy_state, toy_views):
        alloc = update_allocations(toy_state, toy_views, RngStream(4))
        assert alloc.shape == (toy_views.n,)
        assert alloc.min() >= 0 and alloc.max() < toy_state.C

    def test_weights_sum_to_one(self):
        sticks, weights = update_weights(np.array([0, 0, 0, 1]), 1.0, 3, RngStream(2))
        assert sticks[-1] == 1.0
        assert weights.sum() == pytest.approx(1.0)
        assert np.allclose(weights, stick_breaking(sticks))

    def test_stick_posterior_mean(self):
        rng = RngStream(13)
        alloc = np.array([0, 0, 0, 1])
        draws = np.array([update_weights(alloc, 1.0, 3, rng)[0] for _ in range(4000)])
        assert draws[:, 0].mean() == pytest.approx(4.0 / 6.0, abs=0.02)
        assert draws[:, 1].mean() == pytest.approx(2.0 / 3.0, abs=0.02)

    def test_concentration_posterior(self):
        hyper = Hyperparameters(a_zeta=2.0, b_zeta=1.0)
        shape, scale = concentration_posterior(np.array([0.5, 0.5, 1.0]), hyper, 3)
        assert shape == 4.0
        assert scale == pytest.approx(1.0 / (1.0 + 2.0 * np.log(2.0)))

    def test_concentration_draw_mean(self):
        hyper = Hyperparameters(a_zeta=2.0, b_zeta=1.0)
        sticks = np.array([0.5, 0.5, 1.0])
        shape, scale = concentration_posterior(sticks, hyper, 3)
        rng = RngStream(34)
        draws = np.array([update_concentration(sticks, hyper, rng, 3) for _ in range(6000)])
        assert draws.mean() == pytest.approx(shape * scale, rel=0.05)

    def test_prior_only_sticks_and_concentration_reproduce_prior(self):
        """With no observations the (V, zeta) Gibbs pair leaves the zeta prior invariant."""
        hyper = Hyperparameters(a_zeta=2.0, b_zeta=1.5)
        C = 5
        rng = RngStream(58)
        empty = np.zeros(0, dtype=np.int64)
        zeta = hyper.a_zeta * hyper.b_zeta
        draws = []
        for iteration in range(20000):
            sticks, _ = update_weights(empty, zeta, C, rng)
            zeta = update_concentration(sticks, hyper, rng, C)
            if iteration >= 500 and iteration % 10 == 0:
                draws.append(zeta)
        result = stats.kstest(draws, stats.gamma(hyper.a_zeta, scale=hyper.b_zeta).cdf)
        assert result.pvalue > 0.01

    def test_concentration_ignores_last_stick(self):
        hyper = Hyperparameters()
        assert concentration_posterior(np.array([0.3, 1.0]), hyper, 2) == concentration_posterior(
            np.array([0.3, 0.0]), hyper, 2)


class TestCovarianceUpdates:
    """Test the inverse-Wishart updates of the random-effect covariances."""

    def test_interaction_covariance_mean(self):
        hyper = Hyperparameters(psi_int=1.0, nu_int=3.0).resolve(1, 1, 1)
        gamma = np.array([[1.0], [2.0], [0.0]])
        rng = RngStream(17)
        draws = np.array([update_wint(gamma, hyper, rng)[0, 0] for _ in range(20000)])
        assert draws.mean() == pytest.approx(1.5, abs=0.06)

    def test_random_effect_covariance_mean(self):
        """Scale 1 + 1 + 4 with dof 3 + 2: inverse-gamma(2.5, 3) with mean 2."""
        hyper = Hyperparameters(psi_re=1.0, nu_re=3.0).resolve(1, 1, 1)
        eta = np.array([[1.0], [2.0]])
        rng = RngStream(18)
        draws = np.array([update_wre(eta, hyper, rng)[0, 0] for _ in range(20000)])
        assert draws.mean() == pytest.approx(2.0, abs=0.1)


class TestCompleteDataLikelihood:
    """Test the log-likelihood trace value."""

    def test_matches_scipy(self, toy_state, toy_views):
        v, s = toy_views, toy_state
        expected = stats.norm.logpdf(residuals(s, v), 0.0, np.sqrt(s.sigma2)).sum()
        for i in range(v.n):
            c = s.alloc[i]
            expected += stats.multivariate_normal.logpdf(v.u_cont[i], s.mu[c], s.sigma_u[c])
            expected += np.log(s.phi[0][c, v.u_cat[i, 0]])
        assert complete_data_loglik(s, v) == pytest.approx(expected, rel=1e-10)
