"""
Experiment runner: plans jobs over (algorithm, grid point, seed), runs them on a bounded
joblib pool, aggregates the results and writes CSV, JSON and SVG artifacts.

Aggregation sorts by (algorithm, parameter, seed) before anything is written, so outputs
are byte-identical regardless of job order or pool size.
"""
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError
from joblib import Parallel, delayed

from .charts import emit_plots
from .jobs import (EXPANDING_RANGE, EXPERIMENT_TAGS, K_SWEEP, RANGE_TAGS, SAMPLE_GRID_TAGS,
                   SINGLE_RUN, SLIDING_RANGE, WIDTH_SWEEP, Job, run_job)
from .learners import Algorithm
from .mdp import LayeredMdp, MdpGenSpec
from .utils import document, ensure_output_dir, write_frame, write_json

logger = logging.getLogger(__name__)

DEFAULT_K_GRID = (250, 1000, 4000, 16000)
DEFAULT_GRID_POINTS = 11
# x = 0 is the degenerate range [1, 1] where every policy is optimal
SMALLEST_EXPANSION = 0.05
DEFAULT_ALGORITHMS = {
    K_SWEEP: ('ucbvi', 'q-shaping', 'v-shaping'),
    EXPANDING_RANGE: ('ucbvi', 'q-shaping', 'upper-bonus'),
    SLIDING_RANGE: ('ucbvi', 'q-shaping', 'upper-bonus'),
    SINGLE_RUN: ('ucbvi', 'q-shaping', 'v-shaping', 'upper-bonus'),
    WIDTH_SWEEP: (),
}
BASELINE = Algorithm.UCBVI.value
# wall-clock columns stay out of the CSVs so reruns are byte-identical
TIMING_COLUMNS = ['runtime']


def default_grid(tag, window=0.1):
    if tag in SAMPLE_GRID_TAGS:
        return tuple(float(k) for k in DEFAULT_K_GRID)
    if tag == EXPANDING_RANGE:
        rest = np.linspace(0.1, 1.0, DEFAULT_GRID_POINTS - 1).round(10)
        return (SMALLEST_EXPANSION,) + tuple(float(x) for x in rest)
    if tag == SLIDING_RANGE:
        return tuple(float(x) for x in np.linspace(0.0, 1.0 - window, DEFAULT_GRID_POINTS))
    return (0.0,)


@dataclass(frozen=True)
class ExperimentConfig:
    tag: str
    mdp: MdpGenSpec
    algorithms: tuple
    grid: tuple
    episodes: int
    seeds: tuple
    output_dir: str
    mdp_file: str = None
    delta: float = 0.1
    window: float = 0.1
    samples: int = 6000
    jobs: int = 1
    width_step: int = 1
    write_traces: bool = True
    chart_points: int = 200

    def validate(self):
        errors = []
        if self.tag not in EXPERIMENT_TAGS:
            errors.append(f'Unknown experiment tag {self.tag!r}.')
        if not self.seeds:
            errors.append('The seed list must not be empty.')
        if not 0.0 < self.window < 1.0:
            errors.append('The sliding window width must lie in (0, 1).')
        if not 0.0 < self.delta < 1.0:
            errors.append('delta must lie in (0, 1).')
        if self.episodes < 0:
            errors.append('T cannot be negative.')
        if self.jobs < 1:
            errors.append('The pool needs at least one worker.')
        if not self.grid:
            errors.append('The grid must not be empty.')
        for name in self.algorithms:
            if name not in {a.value for a in Algorithm}:
                errors.append(f'Unknown algorithm {name!r}.')
        if self.tag == EXPANDING_RANGE and any(not 0.0 <= x <= 1.0 for x in self.grid):
            errors.append('Expanding-range grid values must lie in [0, 1].')
        if self.tag == SLIDING_RANGE and any(not 0.0 <= x <= 1.0 - self.window + 1e-12
                                             for x in self.grid):
            errors.append('Sliding-range grid values must keep [x, x + w] inside [0, 1].')
        if isinstance(self.mdp, LayeredMdp) and self.tag in RANGE_TAGS:
            errors.append('Range experiments regenerate the MDP per grid point and need a '
                          'generation spec, not an MDP file.')
        H = self.mdp.horizon
        if self.tag in SAMPLE_GRID_TAGS and any(k < H or k != int(k) for k in self.grid):
            errors.append(f'K grid values must be integers >= H={H}.')
        if self.tag not in SAMPLE_GRID_TAGS and self.samples < H:
            errors.append(f'K={self.samples} must be at least H={H}.')
        if errors:
            raise ValidationError(errors)
        self.mdp.validate()

    @property
    def fixed_mdp(self):
        """True when every job shares one MDP loaded from a file."""
        return isinstance(self.mdp, LayeredMdp)

    @property
    def learners(self):
        """Configured learners with the UCBVI baseline always included."""
        if self.tag == WIDTH_SWEEP:
            return ()
        names = [BASELINE] + [a for a in self.algorithms if a != BASELINE]
        return tuple(names)

    def as_dict(self):
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        if self.fixed_mdp:
            del data['mdp']
        else:
            data['mdp'] = asdict(self.mdp)
            data['mdp']['reward_range'] = list(self.mdp.reward_range)
        data['algorithms'] = list(self.algorithms)
        data['grid'] = list(self.grid)
        data['seeds'] = list(self.seeds)
        data['output_dir'] = str(self.output_dir)
        return document('experiment-config', data)


def plan_jobs(cfg):
    jobs = []
    for seed in cfg.seeds:
        if cfg.tag == WIDTH_SWEEP:
            jobs.extend(Job(None, i, seed) for i in range(len(cfg.grid)))
            continue
        for algorithm in cfg.learners:
            if cfg.tag == K_SWEEP and algorithm == BASELINE:
                jobs.append(Job(algorithm, None, seed))
            else:
                jobs.extend(Job(algorithm, i, seed) for i in range(len(cfg.grid)))
    return jobs


def relative_improvement(regret_ucbvi, regret_algo):
    """(Regret_UCBVI - Regret_Algo) / Regret_UCBVI, or None when the baseline has no regret."""
    if regret_ucbvi <= 0:
        return None
    return (regret_ucbvi - max(regret_algo, 0.0)) / regret_ucbvi


# ==================== AGGREGATION ====================

@dataclass
class AggregateResult:
    tag: str
    runs: pd.DataFrame
    summary: pd.DataFrame
    curves: list = field(default_factory=list)
    width_scatter: pd.DataFrame = None
    labels: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def empty(self):
        return self.summary.empty and not self.curves

    @classmethod
    def from_dict(cls, data):
        """Rebuild the plottable part of an aggregate from aggregate.json."""
        return cls(tag=data['tag'], runs=pd.DataFrame(),
                   summary=pd.DataFrame.from_records(data.get('summary', [])),
                   curves=data.get('curves', []), labels=data.get('labels', {}))

    def as_dict(self):
        return document('aggregate', {
            'tag': self.tag,
            'labels': self.labels,
            'summary': json.loads(self.summary.to_json(orient='records')),
            'curves': self.curves,
        })


def _sort_key(result):
    param = -1.0 if result.param is None else result.param
    return (result.job.algorithm or '', param, result.job.seed)


def _runs_frame(cfg, results):
    baseline = {}
    for r in results:
        if r.job.algorithm == BASELINE:
            baseline[(r.param, r.job.seed)] = r.final_regret
    rows = []
    undefined = 0
    for r in results:
        row = {
            'algorithm': r.job.algorithm or 'envelope',
            'param': r.param,
            'seed': r.job.seed,
            'final_regret': r.final_regret,
            'r_max': r.r_max,
            'd_max': r.d_max,
            'sandwich_holds': r.sandwich_holds,
            'pair_eff_size': r.pair_eff_size,
            'q_bound': r.q_bound,
            'relative_improvement': None,
            'runtime': r.runtime,
        }
        if r.job.algorithm is not None:
            key = (None if cfg.tag == K_SWEEP else r.param, r.job.seed)
            if key in baseline:
                row['relative_improvement'] = relative_improvement(baseline[key], r.final_regret)
                undefined += row['relative_improvement'] is None
        rows.append(row)
    if undefined:
        logger.warning('Relative improvement undefined for %d runs (zero baseline regret)', undefined)
    return pd.DataFrame(rows, columns=list(rows[0]) if rows else None)


def _summary_frame(runs):
    if runs.empty:
        return pd.DataFrame(columns=['algorithm', 'param', 'n_seeds'])
    frame = runs.assign(param=runs['param'].astype(float))
    grouped = frame.groupby(['algorithm', 'param'], dropna=False, sort=True)
    summary = grouped.agg(
        n_seeds=('seed', 'count'),
        mean_regret=('final_regret', 'mean'),
        median_regret=('final_regret', 'median'),
        q25_regret=('final_regret', lambda x: float(np.percentile(x, 25))),
        q75_regret=('final_regret', lambda x: float(np.percentile(x, 75))),
        mean_d_max=('d_max', 'mean'),
        median_d_max=('d_max', 'median'),
        mean_r_max=('r_max', 'mean'),
        mean_improvement=('relative_improvement', lambda x: x.dropna().astype(float).mean()),
        median_improvement=('relative_improvement', lambda x: x.dropna().astype(float).median()),
    ).reset_index()
    return summary


def _mean_curves(results, points):
    groups = {}
    for r in results:
        if r.instantaneous is None or len(r.instantaneous) == 0:
            continue
        groups.setdefault((r.job.algorithm, r.param), []).append(np.cumsum(r.instantaneous))
    curves = []
    for algorithm, param in sorted(groups, key=lambda k: (k[0], -1.0 if k[1] is None else k[1])):
        mean = np.mean(groups[(algorithm, param)], axis=0)
        idx = np.unique(np.linspace(0, len(mean) - 1, max(points, 2)).round().astype(int))
        curves.append({'algorithm': algorithm, 'param': param,
                       'episodes': [int(i) + 1 for i in idx],
                       'mean_cumulative_regret': [float(mean[i]) for i in idx]})
    return curves


def aggregate(cfg, results):
    results = sorted(results, key=_sort_key)
    runs = _runs_frame(cfg, results)
    result = AggregateResult(
        tag=cfg.tag,
        runs=runs,
        summary=_summary_frame(runs),
        curves=_mean_curves(results, cfg.chart_points),
        labels={'param': 'K' if cfg.tag in SAMPLE_GRID_TAGS else 'x'},
    )
    if cfg.tag == WIDTH_SWEEP:
        rows = [dict(param=r.param, seed=r.job.seed, **point) for r in results for point in r.scatter]
        result.width_scatter = pd.DataFrame(rows, columns=['param', 'seed', 'state', 'width',
                                                           'layer_range'])
    return result


# ==================== RUNNING ====================

def execute_jobs(cfg, jobs):
    """Run jobs on a pool of cfg.jobs workers; 1 runs in-process."""
    if cfg.jobs == 1:
        return [run_job(cfg, job) for job in jobs]
    return Parallel(n_jobs=cfg.jobs, prefer='processes')(delayed(run_job)(cfg, job) for job in jobs)


def _write_traces(results, out_dir):
    trace_dir = ensure_output_dir(out_dir / 'runs')
    for r in results:
        if r.instantaneous is None:
            continue
        param = 'base' if r.param is None else f'{r.param:g}'
        frame = pd.DataFrame({
            'episode': np.arange(1, len(r.instantaneous) + 1),
            'inst_regret': r.instantaneous,
            'cum_regret': np.cumsum(r.instantaneous),
        })
        write_frame(frame, trace_dir / f'{r.job.algorithm}_p{param}_s{r.job.seed}.csv')


def run_experiment(cfg):
    """Run every job of `cfg`, then write the aggregate artifacts into cfg.output_dir."""
    cfg.validate()
    out_dir = ensure_output_dir(Path(cfg.output_dir))
    write_json(out_dir / 'config.json', cfg.as_dict())

    jobs = plan_jobs(cfg)
    logger.info('Experiment %s: %d jobs on %d worker(s)', cfg.tag, len(jobs), cfg.jobs)
    started = time.perf_counter()
    results = sorted(execute_jobs(cfg, jobs), key=_sort_key)
    runtime = time.perf_counter() - started

    result = aggregate(cfg, results)
    result.runtime = runtime
    write_frame(result.runs.drop(columns=TIMING_COLUMNS), out_dir / 'runs.csv')
    write_frame(result.summary, out_dir / 'aggregate.csv')
    write_json(out_dir / 'aggregate.json', result.as_dict())
    if result.width_scatter is not None:
        write_frame(result.width_scatter, out_dir / 'width_scatter.csv')
    if cfg.write_traces:
        _write_traces(results, out_dir)
    emit_plots(result, out_dir)
    write_json(out_dir / 'metadata.json', {
        'runtime_seconds': runtime,
        'jobs': len(jobs),
        'workers': cfg.jobs,
        'mdp_resampling': ('per seed' if cfg.tag in SAMPLE_GRID_TAGS and not cfg.fixed_mdp
                           else 'fixed across seeds'),
    })
    logger.info('Experiment %s written to %s in %.1fs', cfg.tag, out_dir, runtime)
    return result
