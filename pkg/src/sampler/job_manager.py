"""
Chain job manager.

Runs independent chains on a thread pool; each chain owns its state and its
own random stream (stream id = chain index).
"""

import logging
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from ..models.dataset import LongitudinalDataset
from ..models.model_spec import Hyperparameters, ModelSpec, RunConfig
from .chain_store import ChainStore
from .diagnostics import effective_sample_size
from .gibbs import run_chain
from .progress import ProgressReporter


class ChainJobManager:
    """Thread pool of named jobs; results are collected in submission order by the caller."""

    def __init__(self, max_workers: int = 4):
        self.executor = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="chain")
        self.jobs: Dict[str, Future] = {}

    def submit_job(self, job_id: str, func: Callable, *args, **kwargs) -> Future:
        self.jobs[job_id] = self.executor.submit(func, *args, **kwargs)
        return self.jobs[job_id]

    def result(self, job_id: str):
        """Block until ``job_id`` finishes; re-raises the job's exception."""
        return self.jobs[job_id].result()

    def __enter__(self) -> "ChainJobManager":
        return self

    def __exit__(self, *exc) -> None:
        self.executor.shutdown(wait=True)


def run_chains(data: LongitudinalDataset, spec: ModelSpec, hyper: Hyperparameters, runcfg: RunConfig,
               max_workers: int = 4,
               progress_factory: Optional[Callable[[int], ProgressReporter]] = None) -> List[ChainStore]:
    """
    Run ``runcfg.n_chains`` chains concurrently with independent streams.

    Returns:
        Chains ordered by chain index

    Raises:
        SamplerError: The first chain failure, after all chains have stopped
    """
    logger = logging.getLogger(__name__)
    single = replace(runcfg, n_chains=1)
    with ChainJobManager(max_workers=min(max_workers, runcfg.n_chains)) as manager:
        for chain_id in range(runcfg.n_chains):
            progress = progress_factory(chain_id) if progress_factory else None
            manager.submit_job(f"chain-{chain_id}", run_chain, data, spec, hyper, single,
                               chain_id=chain_id, progress=progress)
        chains = []
        for chain_id in range(runcfg.n_chains):
            job_id = f"chain-{chain_id}"
            try:
                chains.append(manager.result(job_id))
            except Exception as e:
                logger.error(f"Chain {chain_id} failed: {e}")
                raise
    return chains


@dataclass
class ZetaAgreement:
    means: List[float]
    standard_errors: List[float]
    pooled_mean: float
    max_abs_z: float

    @property
    def agree(self) -> bool:
        return self.max_abs_z < 3.0

    def as_dict(self) -> Dict[str, object]:
        return {"means": self.means, "standard_errors": self.standard_errors,
                "pooled_mean": self.pooled_mean, "max_abs_z": self.max_abs_z, "agree": self.agree}


def pooled_zeta_agreement(chains: List[ChainStore]) -> ZetaAgreement:
    """
    Compare per-chain posterior means of zeta with ESS-based standard errors.

    The z-score of each chain is its deviation from the mean of the other
    chains in units of the combined Monte Carlo standard error.
    """
    traces = [np.asarray(chain.array("trace_zeta"), dtype=float) for chain in chains]
    means = np.array([trace.mean() for trace in traces])
    errors = np.array([trace.std(ddof=1) / np.sqrt(max(effective_sample_size(trace), 1.0)) for trace in traces])
    worst = 0.0
    for k in range(len(traces)):
        others = np.delete(np.arange(len(traces)), k)
        if others.size == 0:
            continue
        other_mean = means[others].mean()
        other_se = np.sqrt(np.sum(errors[others] ** 2)) / others.size
        scale = np.hypot(errors[k], other_se)
        if scale > 0:
            worst = max(worst, abs(means[k] - other_mean) / scale)
    pooled = float(np.mean(np.concatenate(traces))) if traces else float("nan")
    return ZetaAgreement(means=means.tolist(), standard_errors=errors.tolist(),
                         pooled_mean=pooled, max_abs_z=float(worst))
