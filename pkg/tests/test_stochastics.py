"""
Tests for random streams, positive-definite helpers and variate samplers.
"""
import numpy as np
import pytest

from src.models.errors import FactorizationError, NumericalError, ParameterError
from src.stochastics.psd import PsdMatrix, cho_solve_batch, cholesky, inverse_pd, upper_solve_batch
from src.stochastics.rng import RngStream
from src.stochastics.samplers import (
    sample_beta,
    sample_categorical,
    sample_categorical_log,
    sample_dirichlet,
    sample_gamma,
    sample_inverse_wishart,
    sample_mvn,
    sample_mvn_batch,
    sample_mvn_precision,
    sample_mvn_precision_batch,
)


class TestRngStream:
    """Test reproducibility and independence of random streams."""

    def test_same_seed_same_sequence(self):
        a = RngStream(42).generator.standard_normal(5)
        b = RngStream(42).generator.standard_normal(5)
        assert np.array_equal(a, b)

    def test_stream_ids_and_children_differ(self):
        base = RngStream(42).generator.standard_normal(5)
        other_stream = RngStream(42, stream_id=1).generator.standard_normal(5)
        child = RngStream(42).child(0).generator.standard_normal(5)
        assert not np.array_equal(base, other_stream)
        assert not np.array_equal(base, child)

    def test_state_round_trip_continues_sequence(self):
        """Restoring a snapshot replays exactly the same continuation."""
        rng = RngStream(7, stream_id=3)
        rng.generator.random(10)
        state = rng.get_state()
        expected = rng.generator.random(4)
        restored = RngStream.from_state(state)
        assert np.array_equal(restored.generator.random(4), expected)

    def test_seed_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(2**64)


class TestPsdHelpers:
    """Test Cholesky-based positive-definiteness checks."""

    def test_factor_reconstructs_matrix(self):
        matrix = np.array([[4.0, 1.0], [1.0, 3.0]])
        factor = cholesky(matrix)
        assert np.allclose(factor @ factor.T, matrix)

    def test_zero_matrix_rejected_with_site(self):
        with pytest.raises(FactorizationError) as excinfo:
            cholesky(np.array([[0.0]]), site="W^Re")
        assert "W^Re" in str(excinfo.value)

    def test_indefinite_matrix_rejected(self):
        with pytest.raises(FactorizationError):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric_matrix_rejected(self):
        with pytest.raises(FactorizationError):
            cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_semidefinite_matrix_accepted_after_jitter(self):
        factor = cholesky(np.ones((2, 2)), site="jitter")
        assert np.all(np.isfinite(factor))

    def test_inverse_and_wrapper(self):
        matrix = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert np.allclose(inverse_pd(matrix) @ matrix, np.eye(2))
        wrapped = PsdMatrix.from_array(matrix)
        assert wrapped.dim == 2

    def test_batched_factor_solves(self):
        rng = np.random.default_rng(4)
        roots = rng.standard_normal((5, 3, 3))
        matrices = roots @ np.swapaxes(roots, 1, 2) + 3.0 * np.eye(3)
        factors = np.linalg.cholesky(matrices)
        rhs = rng.standard_normal((5, 3, 2))
        assert np.allclose(cho_solve_batch(factors, rhs), np.linalg.solve(matrices, rhs))
        vectors = rng.standard_normal((5, 3))
        upper = upper_solve_batch(factors, vectors)
        assert np.allclose(np.einsum("kji,kj->ki", factors, upper), vectors)


class TestGaussianSamplers:
    """Test multivariate normal draws in covariance and precision form."""

    def test_mvn_moments(self):
        rng = RngStream(1)
        cov = np.array([[2.0, 1.0], [1.0, 2.0]])
        draws = sample_mvn_batch(np.tile([1.0, 2.0], (100000, 1)), np.repeat(cov[None], 100000, axis=0), rng)
        assert np.allclose(draws.mean(axis=0), [1.0, 2.0], atol=0.03)
        assert np.allclose(np.cov(draws.T), cov, atol=0.05)

    def test_mvn_single_draw_dimension_check(self):
        with pytest.raises(ParameterError):
            sample_mvn([0.0, 0.0], np.eye(3), RngStream(1))

    def test_mvn_rejects_zero_covariance(self):
        with pytest.raises(FactorizationError):
            sample_mvn([5.0], [[0.0]], RngStream(1))

    def test_precision_form_mean(self):
        precision = np.array([[3.0, 1.0], [1.0, 2.0]])
        linear = np.array([1.0, -1.0])
        _, mean = sample_mvn_precision(linear, precision, RngStream(2))
        assert np.allclose(mean, np.linalg.solve(precision, linear))

    def test_precision_form_covariance(self):
        precision = np.array([[3.0, 1.0], [1.0, 2.0]])
        rng = RngStream(3)
        draws, means = sample_mvn_precision_batch(np.zeros((50000, 2)), np.repeat(precision[None], 50000, axis=0), rng)
        assert np.allclose(means, 0.0)
        assert np.allclose(np.cov(draws.T), np.linalg.inv(precision), atol=0.02)


class TestScalarSamplers:
    """Test gamma, beta, Dirichlet and categorical draws against their moments."""

    def test_gamma_mean_uses_rate(self):
        rng = RngStream(4)
        draws = [sample_gamma(3.5, 0.5, rng) for _ in range(20000)]
        assert np.mean(draws) == pytest.approx(7.0, rel=0.03)

    def test_gamma_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            sample_gamma(0.0, 1.0, RngStream(1))
        with pytest.raises(ParameterError):
            sample_gamma(1.0, -2.0, RngStream(1))

    def test_beta_vectorized_means(self):
        draws = sample_beta(np.full(100000, 1.0), np.full(100000, 9.0), RngStream(5))
        assert np.mean(draws) == pytest.approx(0.1, abs=0.003)
        variance = np.var(sample_beta(np.full(100000, 2.0), np.full(100000, 3.0), RngStream(6)))
        assert variance == pytest.approx(0.04, abs=0.002)

    def test_dirichlet_mean_and_simplex(self):
        rng = RngStream(7)
        draws = np.stack([sample_dirichlet([2.0, 6.0], rng) for _ in range(20000)])
        assert np.allclose(draws.sum(axis=1), 1.0)
        assert np.allclose(draws.mean(axis=0), [0.25, 0.75], atol=0.01)

    def test_categorical_degenerate_and_frequencies(self):
        rng = RngStream(8)
        assert all(sample_categorical([1.0, 0.0, 0.0], rng) == 0 for _ in range(100))
        counts = np.bincount([sample_categorical([2.0, 3.0, 5.0], rng) for _ in range(20000)], minlength=3)
        assert np.allclose(counts / counts.sum(), [0.2, 0.3, 0.5], atol=0.015)

    def test_categorical_rejects_zero_weights(self):
        with pytest.raises(ParameterError):
            sample_categorical([0.0, 0.0], RngStream(1))

    def test_log_weights_never_pick_impossible_column(self):
        log_weights = np.tile([np.log(0.5), -np.inf, np.log(0.5)], (5000, 1))
        draws = sample_categorical_log(log_weights, RngStream(9))
        assert not np.any(draws == 1)
        assert abs(np.mean(draws == 0) - 0.5) < 0.03

    def test_log_weights_all_impossible_names_observation(self):
        log_weights = np.array([[0.0, 0.0], [-np.inf, -np.inf]])
        with pytest.raises(NumericalError, match="observation 2"):
            sample_categorical_log(log_weights, RngStream(1))


class TestInverseWishart:
    """Test inverse-Wishart draws via the Bartlett decomposition."""

    def test_mean_matches_formula(self):
        rng = RngStream(10)
        draws = np.stack([sample_inverse_wishart(np.eye(2), 8.0, rng) for _ in range(20000)])
        assert np.allclose(draws.mean(axis=0), np.eye(2) / 5.0, atol=0.01)

    def test_scalar_case_is_inverse_gamma(self):
        rng = RngStream(11)
        draws = [sample_inverse_wishart(np.array([[4.0]]), 6.0, rng)[0, 0] for _ in range(20000)]
        assert np.mean(draws) == pytest.approx(1.0, rel=0.05)

    def test_draws_are_positive_definite(self):
        rng = RngStream(12)
        for _ in range(50):
            draw = sample_inverse_wishart(np.array([[2.0, 0.3], [0.3, 1.0]]), 4.0, rng)
            assert np.allclose(draw, draw.T)
            assert np.all(np.linalg.eigvalsh(draw) > 0)

    def test_dof_too_small_rejected(self):
        with pytest.raises(ParameterError):
            sample_inverse_wishart(np.eye(3), 1.5, RngStream(1))
