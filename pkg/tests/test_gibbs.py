"""
Tests for the Gibbs driver, chain persistence, resuming and trace diagnostics.
"""
import json

import numpy as np
import pytest

from src.core.initialization import init_state
from src.models.errors import DataError, SamplerError, SpecError
from src.models.model_spec import Hyperparameters, RunConfig
from src.sampler.chain_store import META_FILE, ChainMeta, ChainStore
from src.sampler.diagnostics import autocorrelation, diagnostics, effective_sample_size
from src.sampler.gibbs import BLOCK_ORDER, GibbsSampler, resume_chain, run_chain
from src.sampler.job_manager import ChainJobManager, pooled_zeta_agreement, run_chains
from src.stochastics.rng import RngStream
from src.testing.validators import validate_chain_directory


class TestGibbsSampler:
    """Test block ordering, overrides and error reporting."""

    def test_block_order(self):
        assert BLOCK_ORDER == ("assignment_params", "beta_gamma", "sigma", "random_effects", "wre", "wint",
                               "allocations", "weights", "concentration")

    def test_unknown_block_rejected(self, toy_views, hyper):
        with pytest.raises(SpecError, match="unknown Gibbs block"):
            GibbsSampler(toy_views, hyper, skip=["labels"])

    def test_skip_removes_block(self, toy_views, hyper):
        sampler = GibbsSampler(toy_views, hyper, skip=["allocations"])
        assert "allocations" not in sampler.block_names
        assert len(sampler.block_names) == len(BLOCK_ORDER) - 1

    def test_sweep_leaves_input_state_untouched(self, toy_views, toy_spec, hyper):
        rng = RngStream(3)
        state = init_state(toy_views, toy_spec, hyper, rng)
        before = state.copy()
        after = GibbsSampler(toy_views, hyper).sweep(state, rng, iteration=1)
        assert np.array_equal(state.beta, before.beta)
        assert np.array_equal(state.alloc, before.alloc)
        assert after.sticks[-1] == 1.0
        assert after.zeta > 0 and after.sigma2 > 0

    def test_failing_block_names_iteration_and_block(self, small_scenario, small_spec, hyper):
        _, data, _ = small_scenario

        def broken_sigma(state, views, hyper, rng):
            raise FloatingPointError("negative rate")

        with pytest.raises(SamplerError) as excinfo:
            run_chain(data, small_spec, hyper, RunConfig(iterations=5, burn_in=1, seed=1),
                      overrides={"sigma": broken_sigma})
        assert excinfo.value.iteration == 1
        assert excinfo.value.block == "sigma"
        assert "block 'sigma'" in str(excinfo.value)


class TestRunChain:
    """Test determinism, kept-draw bookkeeping and chain outputs."""

    def test_same_seed_same_chain(self, small_scenario, small_spec, hyper, short_run):
        _, data, _ = small_scenario
        first = run_chain(data, small_spec, hyper, short_run)
        second = run_chain(data, small_spec, hyper, short_run)
        for name in ("beta", "alloc", "gamma", "trace_zeta"):
            assert np.array_equal(first.array(name), second.array(name))

    def test_chain_id_changes_stream(self, small_scenario, small_spec, hyper, short_run):
        _, data, _ = small_scenario
        first = run_chain(data, small_spec, hyper, short_run, chain_id=0)
        other = run_chain(data, small_spec, hyper, short_run, chain_id=1)
        assert not np.array_equal(first.array("beta"), other.array("beta"))

    def test_kept_draws(self, small_scenario, small_spec, hyper):
        _, data, _ = small_scenario
        chain = run_chain(data, small_spec, hyper, RunConfig(iterations=10, burn_in=5, seed=2))
        assert len(chain) == 5
        assert chain.array("alloc").shape == (5, data.n)
        assert chain.array("gamma").shape == (5, small_spec.C, len(small_spec.int_cols))
        assert chain.meta.iterations_done == 10

    def test_thinning(self, small_scenario, small_spec, hyper):
        _, data, _ = small_scenario
        chain = run_chain(data, small_spec, hyper, RunConfig(iterations=20, burn_in=4, thin=4, seed=2))
        assert len(chain) == 4

    def test_draws_respect_invariants(self, fitted_chain, small_spec):
        sticks = np.asarray(fitted_chain.array("sticks"))
        assert np.all(sticks[:, -1] == 1.0)
        alloc = np.asarray(fitted_chain.array("alloc"))
        assert alloc.min() >= 0 and alloc.max() < small_spec.C
        assert np.all(np.asarray(fitted_chain.array("sigma2")) > 0)
        nclus = np.asarray(fitted_chain.array("trace_nclus"))
        assert np.array_equal(nclus, [np.unique(row).size for row in alloc])

    def test_fixed_allocation(self, small_scenario, small_spec, hyper, short_run):
        _, data, truth = small_scenario
        labels = truth.labels % small_spec.C
        chain = run_chain(data, small_spec, hyper, short_run, fixed_alloc=labels)
        assert np.all(np.asarray(chain.array("alloc")) == labels[None, :])

    def test_fixed_allocation_out_of_range(self, small_scenario, small_spec, hyper, short_run):
        _, data, _ = small_scenario
        with pytest.raises(SpecError):
            run_chain(data, small_spec, hyper, short_run, fixed_alloc=np.full(data.n, small_spec.C))

    def test_loglik_trace(self, small_scenario, small_spec, hyper):
        _, data, _ = small_scenario
        chain = run_chain(data, small_spec, hyper,
                          RunConfig(iterations=12, burn_in=2, seed=5, record_loglik=True))
        loglik = np.asarray(chain.traces["loglik"])
        assert loglik.shape == (10,)
        assert np.all(np.isfinite(loglik))


class TestChainPersistence:
    """Test the chain directory format, loading and resuming."""

    def test_save_and_load(self, fitted_chain, temp_output_dir):
        directory = fitted_chain.save(temp_output_dir / "chain_0", export_csv=True)
        assert validate_chain_directory(directory) == []
        loaded = ChainStore.load(directory)
        assert len(loaded) == len(fitted_chain)
        assert np.array_equal(loaded.array("alloc"), fitted_chain.array("alloc"))
        assert (directory / "csv" / "traces.csv").exists()
        with open(directory / META_FILE, encoding="utf-8") as f:
            assert json.load(f)["kept"] == len(fitted_chain)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DataError, match="no chain"):
            ChainStore.load(tmp_path / "absent")

    def test_truncated_array_detected(self, fitted_chain, temp_output_dir):
        directory = fitted_chain.save(temp_output_dir / "chain_0")
        np.save(directory / "beta.npy", np.zeros((1, 2)))
        assert validate_chain_directory(directory)
        with pytest.raises(DataError, match="beta.npy"):
            ChainStore.load(directory)

    def test_resume_matches_uninterrupted_run(self, small_scenario, small_spec, hyper, temp_output_dir):
        _, data, _ = small_scenario
        full = run_chain(data, small_spec, hyper, RunConfig(iterations=50, burn_in=10, seed=9))
        part = run_chain(data, small_spec, hyper, RunConfig(iterations=30, burn_in=10, seed=9))
        directory = part.save(temp_output_dir / "chain_0")
        resumed = resume_chain(directory, 20, data)
        assert len(resumed) == len(full) == 40
        for name in ("beta", "alloc", "sigma2", "trace_zeta"):
            assert np.allclose(resumed.array(name), full.array(name))

    def test_resume_with_thinning_keeps_same_iterations(self, small_scenario, small_spec, hyper, temp_output_dir):
        _, data, _ = small_scenario
        full_run = RunConfig(iterations=40, burn_in=7, thin=3, seed=4)
        full = run_chain(data, small_spec, hyper, full_run)
        part = run_chain(data, small_spec, hyper, RunConfig(iterations=19, burn_in=7, thin=3, seed=4))
        resumed = resume_chain(part.save(temp_output_dir / "chain_0"), 21, data)
        expected = sum(full_run.keeps(i) for i in range(1, 41))
        assert len(full) == len(resumed) == expected == full_run.kept_draws
        assert np.allclose(resumed.array("beta"), full.array("beta"))

    def test_resume_needs_iterations(self, fitted_chain, temp_output_dir, small_scenario):
        _, data, _ = small_scenario
        directory = fitted_chain.save(temp_output_dir / "chain_0")
        with pytest.raises(SpecError):
            resume_chain(directory, 0, data)


class TestDiagnostics:
    """Test autocorrelation, effective sample size and the chain report."""

    def test_iid_trace_has_full_ess(self):
        trace = np.random.default_rng(0).standard_normal(4000)
        assert effective_sample_size(trace) == pytest.approx(4000, rel=0.15)

    def test_ar1_trace(self):
        rng = np.random.default_rng(1)
        rho, n = 0.9, 20000
        trace = np.zeros(n)
        for t in range(1, n):
            trace[t] = rho * trace[t - 1] + rng.standard_normal()
        expected = n * (1 - rho) / (1 + rho)
        assert effective_sample_size(trace) == pytest.approx(expected, rel=0.25)
        assert autocorrelation(trace)[1] == pytest.approx(rho, abs=0.02)

    def test_constant_trace(self):
        assert effective_sample_size(np.full(50, 2.0)) == 50.0

    def test_report(self, fitted_chain):
        report = diagnostics(fitted_chain)
        assert {s.name for s in report.traces} == {"zeta", "nclus", "sigma2"}
        assert report["nclus"].length == len(fitted_chain)
        assert 1 <= report.final_nclus <= 8
        assert "sigma2" in report.table()

    def test_empty_chain(self, fitted_chain):
        empty = ChainStore(ChainMeta.from_dict({**fitted_chain.meta.as_dict(), "kept": 0}))
        with pytest.raises(DataError):
            diagnostics(empty)


class TestMultipleChains:
    """Test concurrent chains and the pooled concentration check."""

    def test_independent_chains(self, small_scenario, small_spec, hyper):
        _, data, _ = small_scenario
        chains = run_chains(data, small_spec, hyper, RunConfig(iterations=30, burn_in=10, seed=4, n_chains=2),
                            max_workers=2)
        assert [chain.meta.chain_id for chain in chains] == [0, 1]
        assert not np.array_equal(chains[0].array("trace_zeta"), chains[1].array("trace_zeta"))
        single = run_chain(data, small_spec, hyper, RunConfig(iterations=30, burn_in=10, seed=4), chain_id=1)
        assert np.array_equal(single.array("beta"), chains[1].array("beta"))
        agreement = pooled_zeta_agreement(chains)
        assert len(agreement.means) == 2
        assert np.isfinite(agreement.max_abs_z)

    def test_job_manager_returns_results_and_reraises(self):
        def square(value):
            if value < 0:
                raise SamplerError(1, "sigma", ValueError("negative input"))
            return value * value

        with ChainJobManager(max_workers=2) as manager:
            manager.submit_job("a", square, 3)
            manager.submit_job("b", square, -1)
            assert manager.result("a") == 9
            with pytest.raises(SamplerError, match="negative input"):
                manager.result("b")
