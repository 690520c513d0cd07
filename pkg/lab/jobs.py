"""
Single experiment jobs, executed inside joblib workers.

A job is one (algorithm, grid point, seed) triple. Everything it needs is rebuilt from the
experiment config and named random streams, so a job's result does not depend on which
worker runs it or in which order.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import envelope_report, pair_eff, width_scatter_rows
from .learners import Algorithm, OnlineConfig, compute_q_bound, run_learner
from .mdp import LayeredMdp, collect_dataset, generate_mdp, solve_optimal, uniform_policy
from .offline import OfflineConfig, compute_envelopes
from .streams import OFFLINE_DATA, OFFLINE_SPLIT, ONLINE_RUN, stream

logger = logging.getLogger(__name__)

K_SWEEP = 'k-sweep'
EXPANDING_RANGE = 'expanding-range'
SLIDING_RANGE = 'sliding-range'
SINGLE_RUN = 'single-run'
WIDTH_SWEEP = 'width-sweep'
EXPERIMENT_TAGS = (K_SWEEP, EXPANDING_RANGE, SLIDING_RANGE, SINGLE_RUN, WIDTH_SWEEP)
RANGE_TAGS = (EXPANDING_RANGE, SLIDING_RANGE)
SAMPLE_GRID_TAGS = (K_SWEEP, WIDTH_SWEEP)


@dataclass(frozen=True)
class Job:
    algorithm: str      # None for envelope-only jobs
    param_index: int    # None for the k-sweep baseline, which does not depend on K
    seed: int


@dataclass
class JobResult:
    job: Job
    param: float
    final_regret: float = 0.0
    r_max: float = 0.0
    d_max: float = 0.0
    sandwich_holds: bool = None
    pair_eff_size: int = None
    q_bound: float = None
    runtime: float = 0.0
    instantaneous: np.ndarray = None
    scatter: list = field(default_factory=list)


def reward_range(cfg, x):
    """[1 - x, 1] for the expanding range, [x, x + w] for the sliding range."""
    if cfg.tag == EXPANDING_RANGE:
        return 1.0 - x, 1.0
    return x, x + cfg.window


def build_mdp(cfg, job):
    """One MDP per seed for sample-size sweeps, one fixed MDP per grid point otherwise."""
    spec = cfg.mdp
    if isinstance(spec, LayeredMdp):
        return spec
    if cfg.tag in SAMPLE_GRID_TAGS:
        return generate_mdp(spec.with_seed(job.seed))
    if cfg.tag in RANGE_TAGS:
        r1, r2 = reward_range(cfg, cfg.grid[job.param_index])
        # x + w can overshoot 1 by rounding
        return generate_mdp(spec.with_range(max(r1, 0.0), min(r2, 1.0)))
    return generate_mdp(spec)


def samples_for(cfg, job):
    if cfg.tag in SAMPLE_GRID_TAGS:
        return int(cfg.grid[job.param_index])
    return cfg.samples


def param_for(cfg, job):
    if job.param_index is None:
        return None
    return float(cfg.grid[job.param_index])


def _stream_keys(cfg, job):
    # k-sweep learners share their online stream across K: common random numbers.
    if job.param_index is None or cfg.tag in SAMPLE_GRID_TAGS:
        return ()
    return (job.param_index,)


def build_envelope(cfg, job, mdp):
    index = job.param_index or 0
    data = collect_dataset(mdp, uniform_policy(mdp.shape), samples_for(cfg, job),
                           stream(job.seed, OFFLINE_DATA, index))
    return compute_envelopes(data, mdp, OfflineConfig(delta=cfg.delta),
                             stream(job.seed, OFFLINE_SPLIT, index))


def run_job(cfg, job):
    started = time.perf_counter()
    mdp = build_mdp(cfg, job)
    solution = solve_optimal(mdp)
    result = JobResult(job=job, param=param_for(cfg, job))

    if job.algorithm is None:
        envelope = build_envelope(cfg, job, mdp)
        report = envelope_report(mdp, solution, envelope)
        result.r_max, result.d_max = report.r_max, report.d_max
        result.sandwich_holds = report.sandwich_holds
        step = min(cfg.width_step, mdp.horizon - 1)
        result.scatter = width_scatter_rows(envelope, step)
        result.runtime = time.perf_counter() - started
        return result

    algorithm = Algorithm(job.algorithm)
    envelope = build_envelope(cfg, job, mdp) if algorithm.needs_envelope else None
    online = OnlineConfig(episodes=cfg.episodes, delta=cfg.delta, algorithm=algorithm)
    record = run_learner(mdp, envelope, online, stream(job.seed, ONLINE_RUN, *_stream_keys(cfg, job)),
                         solution=solution, seed=job.seed)
    result.final_regret = record.final_regret
    result.r_max, result.d_max = record.r_max, record.d_max
    result.instantaneous = record.instantaneous

    if envelope is not None:
        result.sandwich_holds = envelope_report(mdp, solution, envelope).sandwich_holds
        if algorithm is Algorithm.Q_SHAPING and cfg.episodes > 0:
            result.pair_eff_size = len(pair_eff(solution, envelope))
            shape = mdp.shape
            result.q_bound = compute_q_bound(
                cfg.episodes, shape.horizon, shape.num_states, shape.actions, cfg.delta,
                envelope.r_max, envelope.d_max, result.pair_eff_size).bound
    result.runtime = time.perf_counter() - started
    logger.debug('Job %s finished in %.2fs', job, result.runtime)
    return result
