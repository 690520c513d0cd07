"""
Online learners: UCBVI, Q-shaping, V-shaping and Upper-Bonus Shaping.

All four share one optimistic backward value-iteration engine; they differ only in how the
exploration bonus is scaled (by which envelope) and where the estimates are clipped:

    ucbvi        width bonus of the trivial envelope, Q capped at H - h + 1
    q-shaping    width bonus of the learned envelope, Q clipped at highQ
    v-shaping    width bonus of the learned envelope, V clipped at highV
    upper-bonus  bonus from highV alone (lowV taken as 0), Q capped at H - h + 1

Regret is exact: every episode's greedy policy is evaluated against V* by dynamic
programming instead of by its sampled return.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from django.core.exceptions import ValidationError

from .exceptions import ConfigurationError, LabError, ShapeMismatchError
from .mdp import evaluate_policy, inverse_cdf, solve_optimal
from .offline import C1, C2, biased_variance, trivial_envelope

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    UCBVI = 'ucbvi'
    Q_SHAPING = 'q-shaping'
    V_SHAPING = 'v-shaping'
    UPPER_BONUS = 'upper-bonus'

    @property
    def needs_envelope(self):
        return self is not Algorithm.UCBVI


@dataclass(frozen=True)
class OnlineConfig:
    episodes: int
    delta: float = 0.1
    algorithm: Algorithm = Algorithm.Q_SHAPING
    c1: float = C1
    c2: float = C2

    def validate(self):
        if self.episodes < 0:
            raise ValidationError('The number of episodes T cannot be negative.')
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f'delta must lie in (0, 1), got {self.delta}.')

    def log_term(self, shape):
        """L = ln(8 |S| |A| H T / delta); a T = 0 run uses T = 1."""
        T = max(self.episodes, 1)
        return math.log(8 * shape.num_states * shape.actions * shape.horizon * T / self.delta)

    def as_dict(self):
        return {'episodes': self.episodes, 'delta': self.delta,
                'algorithm': self.algorithm.value, 'c1': self.c1, 'c2': self.c2}


@dataclass
class LearnerState:
    """Counts, empirical model and current optimistic tables of one learner."""
    shape: object
    rewards: tuple
    episode: int = 0
    counts: list = field(default_factory=list)
    transition_counts: list = field(default_factory=list)
    empirical: list = field(default_factory=list)
    q_hat: list = field(default_factory=list)
    v_hat: list = field(default_factory=list)
    bonus: list = field(default_factory=list)
    policy: list = field(default_factory=list)

    @classmethod
    def initial(cls, mdp):
        shape = mdp.shape
        state = cls(shape, mdp.rewards)
        for step, n in enumerate(shape.layer_sizes):
            n_next = shape.next_size(step)
            state.counts.append(np.zeros((n, shape.actions), dtype=np.int64))
            state.transition_counts.append(np.zeros((n, shape.actions, n_next), dtype=np.int64))
            state.empirical.append(np.full((n, shape.actions, n_next), 1.0 / n_next))
        state.v_hat = [None] * shape.horizon + [np.zeros(1)]
        state.q_hat = [None] * shape.horizon
        state.bonus = [None] * shape.horizon
        state.policy = [None] * shape.horizon
        return state

    def record(self, path):
        """Add one episode's (step, state, action, next state) visits; refresh only those rows."""
        for step, s, a, nxt in path:
            self.counts[step][s, a] += 1
            self.transition_counts[step][s, a, nxt] += 1
            self.empirical[step][s, a] = self.transition_counts[step][s, a] / self.counts[step][s, a]
        self.episode += 1


def shaping_envelope(algorithm, envelope, shape):
    """The envelope a learner shapes with: the trivial one for UCBVI."""
    if algorithm is Algorithm.UCBVI:
        if envelope is not None:
            logger.debug('UCBVI ignores the supplied envelope')
        return trivial_envelope(shape)
    if envelope is None:
        raise ConfigurationError(f'{algorithm.value} needs a value envelope.')
    if envelope.shape != shape:
        raise ShapeMismatchError('The envelope was computed for a different MDP shape.')
    return envelope


def bonus_scales(step, state, envelope, cfg):
    """sigma_{h+1} of every (s, a) under the empirical rows, and the range that caps the bonus."""
    rows = state.empirical[step]
    if cfg.algorithm is Algorithm.UPPER_BONUS:
        high = envelope.high_v[step + 1]
        sigma = 0.5 * np.sqrt(biased_variance(rows, high)) + 0.5 * np.sqrt(rows @ high ** 2)
        return sigma, max(float(high.max()), 0.0)
    sigma = (np.sqrt(biased_variance(rows, envelope.midpoints[step + 1]))
             + 0.5 * np.sqrt(rows @ envelope.widths[step + 1] ** 2))
    return sigma, float(envelope.layer_ranges[step + 1])


def online_bonus_table(step, state, envelope, cfg):
    """Exploration bonus of every (s, a) at `step` for the current counts."""
    n = state.counts[step]
    sigma, span = bonus_scales(step, state, envelope, cfg)
    log_term = cfg.log_term(state.shape)
    safe_n = np.maximum(n, 1)
    raw = cfg.c1 * sigma * np.sqrt(log_term / safe_n) + cfg.c2 * span * log_term / safe_n
    return np.where(n >= 2, np.minimum(raw, span), span)


def online_bonus(step, s, a, state, envelope, cfg):
    """Bonus of a single pair; `s` is the state's index within its layer."""
    return float(online_bonus_table(step, state, envelope, cfg)[s, a])


def backward_pass(state, envelope, cfg):
    """Recompute Q-hat, V-hat and the greedy policy of the coming episode."""
    shape = state.shape
    algorithm = cfg.algorithm
    v_next = state.v_hat[shape.horizon]
    for step in range(shape.horizon - 1, -1, -1):
        bonus = online_bonus_table(step, state, envelope, cfg)
        q = state.rewards[step] + state.empirical[step] @ v_next + bonus
        if algorithm in (Algorithm.UCBVI, Algorithm.Q_SHAPING):
            q = np.minimum(q, envelope.high_q[step])
        elif algorithm is Algorithm.UPPER_BONUS:
            q = np.minimum(q, float(shape.horizon - step))
        v = q.max(axis=1)
        if algorithm is Algorithm.V_SHAPING:
            v = np.minimum(v, envelope.high_v[step])
        state.bonus[step] = bonus
        state.q_hat[step] = q
        state.v_hat[step] = v
        state.policy[step] = q.argmax(axis=1)
        v_next = v
    return state


@dataclass
class RunRecord:
    algorithm: str
    seed: int
    config: dict
    instantaneous: np.ndarray
    final_counts: tuple
    wall_time: float
    r_max: float
    d_max: float

    @property
    def cumulative(self):
        return np.cumsum(self.instantaneous)

    @property
    def final_regret(self):
        return float(self.instantaneous.sum())

    @property
    def episodes(self):
        return len(self.instantaneous)


def run_learner(mdp, envelope, cfg, rng, solution=None, seed=None, on_episode=None):
    """
    Play T episodes and record the exact regret of every greedy policy.

    `on_episode(state, path)` is called after each rollout with the state used to act and the
    episode's (step, state, action, next state) visits, before the counts absorb them.
    """
    cfg.validate()
    shape = mdp.shape
    shaping = shaping_envelope(cfg.algorithm, envelope, shape)
    solution = solution if solution is not None else solve_optimal(mdp)
    state = LearnerState.initial(mdp)

    instantaneous = np.zeros(cfg.episodes)
    evaluated_policy, policy_values = None, None
    started = time.perf_counter()
    for t in range(cfg.episodes):
        backward_pass(state, shaping, cfg)
        if evaluated_policy is None or not all(
                np.array_equal(old, new) for old, new in zip(evaluated_policy, state.policy)):
            evaluated_policy = [p.copy() for p in state.policy]
            policy_values = evaluate_policy(mdp, evaluated_policy)

        s = first = int(inverse_cdf(mdp.initial_distribution, rng.random()))
        path = []
        for step in range(shape.horizon):
            a = int(evaluated_policy[step][s])
            nxt = int(inverse_cdf(mdp.transitions[step][s, a], rng.random()))
            path.append((step, s, a, nxt))
            s = nxt
        instantaneous[t] = solution.values[0][first] - policy_values[0][first]
        if on_episode is not None:
            on_episode(state, path)
        state.record(path)

    record = RunRecord(
        algorithm=cfg.algorithm.value,
        seed=seed,
        config=cfg.as_dict(),
        instantaneous=instantaneous,
        final_counts=tuple(c.copy() for c in state.counts),
        wall_time=time.perf_counter() - started,
        r_max=shaping.r_max,
        d_max=shaping.d_max,
    )
    logger.debug('%s finished %d episodes, regret %.4f', record.algorithm, cfg.episodes,
                 record.final_regret)
    return record


# ==================== REGRET BOUND ====================

@dataclass(frozen=True)
class QBound:
    gamma_r: float
    gamma_d: float
    bound: float


def compute_q_bound(T, horizon, num_states, num_actions, delta, r_max, d_max, pair_eff_size,
                    c1=C1, c2=C2):
    """High-probability Q-shaping regret bound R^max * Gamma_R + D^max * Gamma_D."""
    if T <= 0:
        raise LabError('The bound needs T >= 1 episodes.')
    if pair_eff_size > num_states * num_actions:
        raise LabError('|PairEff| cannot exceed |S||A|.')
    e = math.e
    S, A, H = num_states, num_actions, horizon
    L = math.log(8 * S * A * H * T / delta)
    L3 = math.log(T * S * A * H / delta)
    mixing = math.sqrt(2 * T * math.log(2 / delta))
    leading = 2 * e * c1 * math.sqrt(L) * math.sqrt(T * H * pair_eff_size)
    gamma_r = (leading + 4 * e * c2 * L * pair_eff_size * math.log1p(T)
               + e * (c1 * math.sqrt(L) + 2 * c2 * L) * mixing)
    gamma_d = (leading + 6 * e * S * H * pair_eff_size * L3 * math.log1p(T)
               + e * (c1 * math.sqrt(L) + 3 * S * H * L3) * mixing)
    return QBound(gamma_r, gamma_d, r_max * gamma_r + d_max * gamma_d)
