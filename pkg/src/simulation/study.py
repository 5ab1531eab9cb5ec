"""
Replication study: repeated scenario draws, profile-LMM fits and benchmark
comparisons, summarised per method and metric.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..models.errors import DataError, NumericalError, ParameterError, ProfileLMMError, SpecError
from ..models.model_spec import Hyperparameters, RunConfig
from ..postprocess.pam import representative_clustering
from ..postprocess.similarity import build_similarity, default_subset
from ..sampler.gibbs import run_chain
from ..sampler.job_manager import ChainJobManager
from ..stochastics.rng import RngStream
from .benchmarks import benchmark_true_assignment, benchmark_true_centroids, fit_with_labels, posterior_means
from .metrics import adjusted_rand_index, purity, relative_rmse
from .scenario import INTERACTING, NON_INTERACTING, ScenarioConfig, generate_scenario, replicate_config, scenario_spec

PROFILE = "profile-lmm"
TRUE_CENTROIDS = "true-centroids"
TRUE_ASSIGNMENT = "true-assignment"
QUANTILES = {"min": 0.0, "q25": 0.25, "median": 0.5, "q75": 0.75, "max": 1.0}


@dataclass
class StudySettings:
    C: int = 30
    subset_size: Optional[int] = 2000
    k_max: int = 30
    max_exact: int = 12000
    with_benchmarks: bool = True
    workers: int = 1


@dataclass
class StudyReport:
    rows: pd.DataFrame              # repetition, method, metric, value
    summary: pd.DataFrame           # method, metric, min, q25, median, q75, max
    settings: Dict[str, object] = field(default_factory=dict)

    @property
    def n_reps(self) -> int:
        return int(self.rows["repetition"].nunique()) if len(self.rows) else 0

    def median(self, method: str, metric: str) -> float:
        row = self.summary[(self.summary["method"] == method) & (self.summary["metric"] == metric)]
        return float(row["median"].iloc[0])


def _estimation_rows(repetition: int, method: str, beta: np.ndarray, wre: np.ndarray, truth, fe_cols) -> List[dict]:
    def group(names):
        return beta[[fe_cols.index(name) for name in names]]

    return [
        {"repetition": repetition, "method": method, "metric": "rrmse_beta_interacting",
         "value": relative_rmse(group(INTERACTING), truth.beta_group(INTERACTING))},
        {"repetition": repetition, "method": method, "metric": "rrmse_beta_non_interacting",
         "value": relative_rmse(group(NON_INTERACTING), truth.beta_group(NON_INTERACTING))},
        {"repetition": repetition, "method": method, "metric": "rrmse_wre",
         "value": relative_rmse(wre, truth.wre)},
    ]


def _clustering_rows(repetition: int, method: str, labels: np.ndarray, truth_labels: np.ndarray) -> List[dict]:
    return [
        {"repetition": repetition, "method": method, "metric": "ari",
         "value": adjusted_rand_index(labels, truth_labels)},
        {"repetition": repetition, "method": method, "metric": "purity", "value": purity(labels, truth_labels)},
        {"repetition": repetition, "method": method, "metric": "n_clusters",
         "value": float(np.unique(labels).size)},
    ]


def run_replication(cfg: ScenarioConfig, repetition: int, runcfg: RunConfig, hyper: Hyperparameters,
                    settings: StudySettings) -> List[dict]:
    """One repetition: simulate, fit, summarise, and score against the truth and the benchmarks."""
    logger = logging.getLogger(__name__)
    rep_cfg = replicate_config(cfg, repetition)
    rep_run = replace(runcfg, seed=RngStream(runcfg.seed).child(repetition).integer_seed(), n_chains=1)
    data, truth = generate_scenario(rep_cfg)
    spec = scenario_spec(rep_cfg, C=settings.C)

    chain = run_chain(data, spec, hyper, rep_run)
    subset = default_subset(data.n, settings.subset_size, RngStream(rep_run.seed, stream_id=1))
    similarity = build_similarity(chain, subset)
    clustering = representative_clustering(similarity.dissimilarity(), subset, k_max=settings.k_max,
                                           max_exact=settings.max_exact)
    truth_subset = truth.labels[subset]
    fe_cols = list(chain.meta.fe_cols)
    beta, wre = posterior_means(chain)
    rows = _clustering_rows(repetition, PROFILE, clustering.labels, truth_subset)
    rows += _estimation_rows(repetition, PROFILE, beta, wre, truth, fe_cols)
    logger.info(f"Repetition {repetition + 1}: k*={clustering.k}, ARI={rows[0]['value']:.3f}")

    if settings.with_benchmarks:
        for method, labels in ((TRUE_CENTROIDS, benchmark_true_centroids(data, truth)),
                               (TRUE_ASSIGNMENT, benchmark_true_assignment(truth))):
            rows += _clustering_rows(repetition, method, labels[subset], truth_subset)
            fit = fit_with_labels(data, labels, spec, hyper, rep_run)
            rows += _estimation_rows(repetition, method, fit.beta, fit.wre, truth, fe_cols)
    return rows


def summarize_rows(rows: pd.DataFrame) -> pd.DataFrame:
    """Boxplot-ready quantiles per (method, metric)."""
    grouped = rows.groupby(["method", "metric"], sort=True)["value"]
    summary = pd.concat({name: grouped.quantile(q) for name, q in QUANTILES.items()}, axis=1)
    summary["n"] = grouped.size()
    return summary.reset_index()


def _with_repetition(error: ProfileLMMError, repetition: int) -> ProfileLMMError:
    """Same error category, message prefixed with the 1-based repetition index."""
    for category in (SpecError, DataError, ParameterError, NumericalError):
        if isinstance(error, category):
            return category(f"repetition {repetition + 1}: {error}")
    return ProfileLMMError(f"repetition {repetition + 1}: {error}")


def run_replication_study(cfg: ScenarioConfig, n_reps: int, runcfg: RunConfig,
                          hyper: Optional[Hyperparameters] = None,
                          settings: Optional[StudySettings] = None) -> StudyReport:
    """
    Run ``n_reps`` independent repetitions; seeds derive from the scenario and run master seeds.

    Raises:
        ProfileLMMError: A failing repetition (same category), with its index in the message
        SpecError: If n_reps < 1
    """
    logger = logging.getLogger(__name__)
    hyper = hyper or Hyperparameters()
    settings = settings or StudySettings()
    if n_reps < 1:
        raise SpecError(f"n_reps must be >= 1, got {n_reps}")
    results: Dict[int, List[dict]] = {}
    with ChainJobManager(max_workers=max(1, min(settings.workers, n_reps))) as manager:
        for repetition in range(n_reps):
            manager.submit_job(f"rep-{repetition}", run_replication, cfg, repetition, runcfg, hyper, settings)
        for repetition in range(n_reps):
            try:
                results[repetition] = manager.result(f"rep-{repetition}")
            except ProfileLMMError as e:
                logger.error(f"Repetition {repetition + 1} failed: {e}")
                raise _with_repetition(e, repetition) from e
    rows = pd.DataFrame([row for repetition in range(n_reps) for row in results[repetition]],
                        columns=["repetition", "method", "metric", "value"])
    rows["repetition"] += 1
    summary = summarize_rows(rows)
    logger.info(f"Replication study finished: {n_reps} repetitions")
    return StudyReport(rows=rows, summary=summary,
                       settings={"n_reps": n_reps, "scenario": cfg.as_dict(), "C": settings.C,
                                 "subset_size": settings.subset_size, "k_max": settings.k_max})
