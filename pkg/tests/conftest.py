"""
pytest configuration and shared fixtures for the profile-LMM test-suite.
"""
import os
from pathlib import Path

import numpy as np
import pytest

from src.core.design import build_design_views
from src.models.dataset import LongitudinalDataset
from src.models.model_spec import INTERCEPT, Hyperparameters, ModelSpec, RunConfig
from src.sampler.gibbs import run_chain
from src.simulation.scenario import ScenarioConfig, generate_scenario, scenario_spec

SLOW_TESTS_ENV = "PROFILE_LMM_SLOW_TESTS"


def pytest_collection_modifyitems(config, items):
    """Skip tests marked slow unless explicitly requested."""
    if os.getenv(SLOW_TESTS_ENV) == "1":
        return
    skip_slow = pytest.mark.skip(reason=f"slow test; set {SLOW_TESTS_ENV}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def small_scenario():
    """Scenario-1 cohort of 40 individuals over 3 waves (120 observations)."""
    cfg = ScenarioConfig(m=40, waves=3, seed=7)
    data, truth = generate_scenario(cfg)
    return cfg, data, truth


@pytest.fixture(scope="session")
def small_spec(small_scenario) -> ModelSpec:
    cfg, _, _ = small_scenario
    return scenario_spec(cfg, C=8)


@pytest.fixture
def hyper() -> Hyperparameters:
    return Hyperparameters()


@pytest.fixture
def short_run() -> RunConfig:
    return RunConfig(iterations=40, burn_in=10, seed=11)


@pytest.fixture(scope="session")
def fitted_chain(small_scenario, small_spec):
    """Short chain on the small scenario; shared, do not mutate."""
    _, data, _ = small_scenario
    return run_chain(data, small_spec, Hyperparameters(), RunConfig(iterations=60, burn_in=20, seed=3))


@pytest.fixture
def toy_dataset() -> LongitudinalDataset:
    """Twelve observations of four individuals with one continuous and one categorical covariate."""
    rng = np.random.default_rng(5)
    n = 12
    individual = np.repeat(np.arange(4), 3)
    return LongitudinalDataset(
        y=rng.standard_normal(n), time=np.tile([1.0, 2.0, 3.0], 4), individual=individual,
        X=rng.standard_normal((n, 1)), x_names=["x1"],
        U_cont=rng.standard_normal((n, 2)), u_cont_names=["u1", "u2"],
        U_cat=rng.integers(0, 3, (n, 1)), u_cat_names=["c1"], n_categories=[3],
    )


@pytest.fixture
def toy_spec() -> ModelSpec:
    return ModelSpec(
        outcome="y", x_cols=["x1"], u_cont_cols=["u1", "u2"], u_cat_cols=["c1"],
        fe_cols=[INTERCEPT, "x1"], re_cols=[INTERCEPT, "x1"], int_cols=[INTERCEPT, "x1"],
        C=3, standardize=False,
    )


@pytest.fixture
def toy_views(toy_dataset, toy_spec):
    return build_design_views(toy_dataset, toy_spec)


@pytest.fixture
def temp_output_dir(tmp_path: Path) -> Path:
    """Create temporary directory for test outputs."""
    output_dir = tmp_path / "profile_lmm_output"
    output_dir.mkdir(exist_ok=True)
    return output_dir
