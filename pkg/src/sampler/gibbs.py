"""
Blocked Gibbs sampler for the profile-LMM.

One iteration runs, in order:
    a) assignment parameters
    b) beta/gamma jointly, sigma2, random effects, W^Re, W^Int
    c) allocations, stick-breaking weights, concentration

Each iteration operates on a copy of the state, so a failing block never
leaves a partially updated state behind.
"""

import logging
import time
from pathlib import Path
from typing import Callable, Dict, Iterable, Mapping, Optional

import numpy as np

from ..conditionals.assignment import update_assignment_params
from ..conditionals.likelihood import complete_data_loglik
from ..conditionals.mixture import update_allocations, update_concentration, update_weights
from ..conditionals.outcome import (
    update_beta_gamma_joint,
    update_random_effects,
    update_sigma,
    update_wint,
    update_wre,
)
from ..conditionals.stats import ClusterSufficientStats
from ..core.design import DesignViews, build_design_views
from ..core.initialization import init_state
from ..models.dataset import LongitudinalDataset
from ..models.errors import SamplerError, SpecError
from ..models.model_spec import Hyperparameters, ModelSpec, RunConfig
from ..models.parameter_state import ParameterState
from ..stochastics.rng import RngStream
from .chain_store import ChainMeta, ChainStore
from .progress import ProgressReporter, SilentProgress

logger = logging.getLogger(__name__)

Block = Callable[[ParameterState, DesignViews, Hyperparameters, RngStream], None]


def assignment_params_block(state, views, hyper, rng):
    stats = ClusterSufficientStats.from_allocation(views.u_cont, views.u_cat, views.n_categories,
                                                   state.alloc, state.C)
    theta = update_assignment_params(stats, hyper, rng)
    state.mu, state.sigma_u, state.phi = theta.mu, theta.sigma_u, theta.phi


def beta_gamma_block(state, views, hyper, rng):
    state.beta, state.gamma = update_beta_gamma_joint(state, views, hyper, rng)


def sigma_block(state, views, hyper, rng):
    state.sigma2 = update_sigma(state, views, hyper, rng)


def random_effects_block(state, views, hyper, rng):
    state.eta = update_random_effects(state, views, hyper, rng)


def wre_block(state, views, hyper, rng):
    state.wre = update_wre(state.eta, hyper, rng)


def wint_block(state, views, hyper, rng):
    state.wint = update_wint(state.gamma, hyper, rng)


def allocations_block(state, views, hyper, rng):
    state.alloc = update_allocations(state, views, rng)


def weights_block(state, views, hyper, rng):
    state.sticks, _ = update_weights(state.alloc, state.zeta, state.C, rng)


def concentration_block(state, views, hyper, rng):
    state.zeta = update_concentration(state.sticks, hyper, rng, state.C)


DEFAULT_BLOCKS: Dict[str, Block] = {
    "assignment_params": assignment_params_block,
    "beta_gamma": beta_gamma_block,
    "sigma": sigma_block,
    "random_effects": random_effects_block,
    "wre": wre_block,
    "wint": wint_block,
    "allocations": allocations_block,
    "weights": weights_block,
    "concentration": concentration_block,
}
BLOCK_ORDER = tuple(DEFAULT_BLOCKS)


class GibbsSampler:
    """
    Runs sweeps of the nine conditional blocks over fixed design views.

    Args:
        views: Design views of the data
        hyper: Resolved hyperparameters
        overrides: Replacement block functions keyed by block name
        skip: Block names left out of every sweep (e.g. ``allocations`` with frozen labels)
    """

    def __init__(self, views: DesignViews, hyper: Hyperparameters,
                 overrides: Optional[Mapping[str, Block]] = None, skip: Iterable[str] = ()):
        self.logger = logging.getLogger(self.__class__.__name__)
        overrides = dict(overrides or {})
        skip = set(skip)
        unknown = (set(overrides) | skip) - set(BLOCK_ORDER)
        if unknown:
            raise SpecError(f"unknown Gibbs block(s) {sorted(unknown)}; blocks are {list(BLOCK_ORDER)}")
        self.views = views
        self.hyper = hyper if hyper.is_resolved else hyper.resolve(views.p_re, views.p_int, views.q)
        self.blocks = [(name, overrides.get(name, DEFAULT_BLOCKS[name]))
                       for name in BLOCK_ORDER if name not in skip]

    @property
    def block_names(self):
        return [name for name, _ in self.blocks]

    def sweep(self, state: ParameterState, rng: RngStream, iteration: int = 0,
              views: Optional[DesignViews] = None) -> ParameterState:
        """
        One full Gibbs iteration, on ``views`` when given (same designs, new observations).

        Raises:
            SamplerError: Naming the iteration and block that failed
        """
        working = state.copy()
        for name, block in self.blocks:
            try:
                block(working, self.views if views is None else views, self.hyper, rng)
            except Exception as e:
                self.logger.error(f"Block '{name}' failed at iteration {iteration}: {e}")
                raise SamplerError(iteration, name, e) from e
        return working


def _chain_meta(views: DesignViews, spec: ModelSpec, hyper: Hyperparameters, runcfg: RunConfig,
                chain_id: int, data: LongitudinalDataset) -> ChainMeta:
    return ChainMeta(
        seed=runcfg.seed, chain_id=chain_id, spec_hash=spec.spec_hash(),
        burn_in=runcfg.burn_in, thin=runcfg.thin, C=spec.C, n=views.n, m=views.m,
        fe_cols=list(views.fe_cols), re_cols=list(views.re_cols), int_cols=list(views.int_cols),
        u_cont_names=list(data.u_cont_names), u_cat_names=list(data.u_cat_names),
        n_categories=list(views.n_categories), record_loglik=runcfg.record_loglik,
        standardizer=views.standardizer.as_dict(), spec=spec.as_dict(), hyper=hyper.as_dict(),
    )


def _advance(sampler: GibbsSampler, store: ChainStore, state: ParameterState, rng: RngStream,
             runcfg: RunConfig, first: int, progress: ProgressReporter) -> ParameterState:
    try:
        for iteration in range(first, runcfg.iterations + 1):
            state = sampler.sweep(state, rng, iteration)
            if runcfg.keeps(iteration):
                loglik = complete_data_loglik(state, sampler.views) if store.meta.record_loglik else None
                store.append(state, loglik)
            progress.update(iteration, state)
            store.meta.iterations_done = iteration
    finally:
        progress.close()
    store.meta.rng_state = rng.get_state()
    store.last_state = state
    return state


def run_chain(data: LongitudinalDataset, spec: ModelSpec, hyper: Hyperparameters, runcfg: RunConfig,
              chain_id: int = 0, progress: Optional[ProgressReporter] = None,
              overrides: Optional[Mapping[str, Block]] = None,
              fixed_alloc: Optional[np.ndarray] = None) -> ChainStore:
    """
    Run one chain and keep the post burn-in, thinned draws.

    Args:
        data: Longitudinal dataset
        spec: Model specification
        hyper: Hyperparameters
        runcfg: Iterations, burn-in, thinning and seed
        chain_id: Stream id of this chain's random stream
        progress: Progress reporter (silent by default)
        overrides: Replacement Gibbs blocks keyed by name
        fixed_alloc: Optional 0-based cluster labels held fixed (allocation block skipped)

    Returns:
        ChainStore with draws, traces and the final state

    Raises:
        SamplerError: If a block fails (names iteration and block)
    """
    started = time.time()
    views = build_design_views(data, spec)
    resolved = hyper.resolve(views.p_re, views.p_int, views.q)
    rng = RngStream(runcfg.seed, stream_id=chain_id)
    state = init_state(views, spec, resolved, rng)
    skip = ()
    if fixed_alloc is not None:
        fixed_alloc = np.asarray(fixed_alloc, dtype=np.int64)
        if fixed_alloc.shape != (views.n,) or fixed_alloc.min() < 0 or fixed_alloc.max() >= spec.C:
            raise SpecError(f"fixed allocation must hold {views.n} labels in 0..{spec.C - 1}")
        state.alloc = fixed_alloc.copy()
        skip = ("allocations",)
    sampler = GibbsSampler(views, resolved, overrides=overrides, skip=skip)
    store = ChainStore(_chain_meta(views, spec, resolved, runcfg, chain_id, data))
    logger.info(f"Chain {chain_id}: {runcfg.iterations} iterations, burn-in {runcfg.burn_in}, "
                f"thin {runcfg.thin}, C={spec.C}, seed {runcfg.seed}")
    _advance(sampler, store, state, rng, runcfg, 1, progress or SilentProgress())
    logger.info(f"Chain {chain_id} finished in {time.time() - started:.1f}s with {len(store)} kept draws")
    return store


def resume_chain(chain_dir: Path, iterations: int, data: LongitudinalDataset,
                 progress: Optional[ProgressReporter] = None) -> ChainStore:
    """
    Continue a persisted chain for ``iterations`` more iterations.

    The continuation uses the stored final state and random-stream state, so
    a run split in two keeps exactly the draws of one uninterrupted run.

    Raises:
        DataError: If the chain directory is incomplete
        SpecError: If ``iterations`` < 1
    """
    if iterations < 1:
        raise SpecError(f"resume needs at least one iteration, got {iterations}")
    store = ChainStore.load(chain_dir, mmap=False)
    meta = store.meta
    if meta.rng_state is None:
        raise SpecError(f"chain at {chain_dir} has no random-stream state to resume from")
    spec = ModelSpec.from_dict(meta.spec)
    hyper = Hyperparameters.from_dict(meta.hyper)
    views = build_design_views(data, spec)
    state = ChainStore.load_last_state(chain_dir)
    rng = RngStream.from_state(meta.rng_state)
    sampler = GibbsSampler(views, hyper)
    first = meta.iterations_done + 1
    logger.info(f"Resuming chain {meta.chain_id} at iteration {first} for {iterations} iterations")
    runcfg = RunConfig(iterations=meta.iterations_done + iterations, burn_in=meta.burn_in, thin=meta.thin,
                       seed=meta.seed, record_loglik=meta.record_loglik)
    _advance(sampler, store, state, rng, runcfg, first, progress or SilentProgress())
    return store
