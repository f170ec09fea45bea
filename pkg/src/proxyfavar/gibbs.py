"""The full sweep and the chain driver."""
from __future__ import annotations

import logging
import time
from typing import Callable

import numpy as np

from . import kernels
from .factor_sampler import (
    current_residuals,
    sample_factors,
    sample_horseshoe,
    sample_loadings,
    sample_stochastic_volatilities,
    sample_sv_initial,
)
from .model import (
    STEP_NAMES,
    DataSet,
    McmcState,
    ModelSpec,
    PosteriorDraws,
    PriorConfig,
    initialize_state,
    validate_spec,
)
from .svar_sampler import ImpactStats, sample_impact_matrix, sample_shrinkage, sample_var_coefficients

log = logging.getLogger(__name__)

PROGRESS_EVERY = 500


def step_generators(seed: int) -> dict[str, np.random.Generator]:
    """One independent stream per sampler step, in sweep order."""
    children = np.random.SeedSequence(seed).spawn(len(STEP_NAMES))
    return {name: np.random.default_rng(ss) for name, ss in zip(STEP_NAMES, children)}


def gibbs_sweep(spec: ModelSpec, state: McmcState, data: DataSet, priors: PriorConfig,
                rngs: dict[str, np.random.Generator], tags: np.ndarray,
                stats: ImpactStats | None = None) -> McmcState:
    sample_loadings(spec, state, data, priors, rngs["loadings"])
    sample_stochastic_volatilities(state, current_residuals(spec, state, data), rngs["sv"])
    sample_sv_initial(state, rngs["sv_initial"], priors.sv_initial_var)
    sample_horseshoe(state, rngs["horseshoe"])
    sample_var_coefficients(spec, state, data, priors, rngs["var"])
    sample_impact_matrix(spec, state, data, priors, rngs["impact"], stats, tags)
    sample_shrinkage(spec, state, priors, rngs["shrinkage"])
    sample_factors(spec, state, data, priors, rngs["factors"])
    return state


def run_chain(spec: ModelSpec, data: DataSet, priors: PriorConfig, seed: int, *,
              writer=None, keep: bool = True, init: McmcState | None = None,
              callback: Callable[[int, McmcState], None] | None = None) -> tuple[PosteriorDraws | None, dict]:
    """Run one chain; returns the retained draws (if kept) and run diagnostics.

    Retained sweeps are those with index > burn_in whose offset from burn_in
    is a multiple of ``thinning``.
    """
    bundle = validate_spec(spec, data, priors)
    state = init.copy() if init is not None else initialize_state(spec, data, priors, seed)
    rngs = step_generators(seed)
    stats = ImpactStats()
    mc = spec.mcmc
    kept: list[McmcState] = []
    index: list[int] = []
    t0 = time.perf_counter()
    for it in range(1, mc.total_iterations + 1):
        gibbs_sweep(spec, state, data, priors, rngs, bundle.tags, stats)
        if it > mc.burn_in and (it - mc.burn_in) % mc.thinning == 0:
            if writer is not None:
                writer.write(it, state)
            if keep:
                kept.append(state.copy())
                index.append(it)
        if callback is not None:
            callback(it, state)
        if it % PROGRESS_EVERY == 0:
            log.info("sweep %d/%d (%.1fs)", it, mc.total_iterations, time.perf_counter() - t0)
    info = {
        "wall_time_sec": time.perf_counter() - t0,
        "impact_acceptance": stats.summary(),
        "backend": kernels.BACKEND,
        "n_retained": len(index) if keep else (writer.count if writer is not None else 0),
    }
    draws = PosteriorDraws.from_states(kept, index, seed) if keep and kept else None
    return draws, info
