"""
Upper/lower value envelopes learned from a batch of trajectories.

The dataset is split H ways so that the counts used at each step come from trajectories
that no other step looks at; an optimistic and a pessimistic backward recursion then add
and subtract a Bernstein-style bonus around the same empirical backup.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from .exceptions import LabError, ShapeMismatchError
from .mdp import MdpShape, occupancy

logger = logging.getLogger(__name__)

C1 = 2.0
C2 = 14.0 / 3.0
SPLIT_ROUND_ROBIN = 'round-robin'


@dataclass(frozen=True)
class OfflineConfig:
    delta: float = 0.1
    c1: float = C1
    c2: float = C2
    split_strategy: str = SPLIT_ROUND_ROBIN

    def validate(self):
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f'delta must lie in (0, 1), got {self.delta}.')
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValidationError('Bonus constants must be positive.')
        if self.split_strategy != SPLIT_ROUND_ROBIN:
            raise ValidationError(f'Unknown split strategy {self.split_strategy!r}.')

    def log_term(self, shape):
        """L1 = ln(8 |S| |A| H / delta)."""
        return math.log(8 * shape.num_states * shape.actions * shape.horizon / self.delta)


def biased_variance(rows, values):
    """Variance of `values` under each probability row (all-zero rows give 0)."""
    mean = rows @ values
    return np.maximum(rows @ (values ** 2) - mean ** 2, 0.0)


# ==================== H-WAY SPLIT ====================

@dataclass(frozen=True, eq=False)
class SplitDataset:
    """Per-step counts and empirical rows, step h using only the h-th share of trajectories."""
    shape: MdpShape
    splits: tuple             # trajectory indices of each share
    counts: tuple             # N_h(s, a)
    transition_counts: tuple  # N_h(s, a, s')
    empirical: tuple          # P_h(s' | s, a); rows are zero where N_h(s, a) = 0

    @property
    def sizes(self):
        return tuple(len(idx) for idx in self.splits)


def split_dataset(data, shape, rng):
    """Shuffle trajectories with `rng`, deal them round-robin to the H steps and count."""
    H = shape.horizon
    K = len(data)
    if data.horizon != H:
        raise ShapeMismatchError(f'Dataset horizon {data.horizon} does not match H={H}.')
    if K < H:
        raise LabError(f'Cannot split K={K} trajectories into H={H} nonempty shares.')

    order = rng.permutation(K)
    splits = tuple(order[step::H] for step in range(H))
    counts, transition_counts, empirical = [], [], []
    for step, idx in enumerate(splits):
        n, n_next = shape.layer_sizes[step], shape.next_size(step)
        s = data.states[idx, step] - shape.offsets[step]
        a = data.actions[idx, step]
        if step + 1 < H:
            nxt = data.states[idx, step + 1] - shape.offsets[step + 1]
        else:
            nxt = np.zeros(len(idx), dtype=np.int64)
        n_sa = np.zeros((n, shape.actions), dtype=np.int64)
        n_sas = np.zeros((n, shape.actions, n_next), dtype=np.int64)
        np.add.at(n_sa, (s, a), 1)
        np.add.at(n_sas, (s, a, nxt), 1)
        counts.append(n_sa)
        transition_counts.append(n_sas)
        empirical.append(n_sas / np.maximum(n_sa, 1)[:, :, None])
    return SplitDataset(shape, splits, tuple(counts), tuple(transition_counts), tuple(empirical))


# ==================== ENVELOPES ====================

@dataclass(frozen=True, eq=False)
class ValueEnvelope:
    """
    lowQ/highQ tables for every step; everything else is derived from them.

    V-tables have H + 1 entries, the last being the terminal zero. widths (D), midpoints (M)
    and layer_ranges (R) follow the same indexing, so widths[step + 1] is the next layer.
    """
    low_q: tuple
    high_q: tuple
    shape: MdpShape
    delta: float = None
    samples: int = 0
    low_v: tuple = field(init=False)
    high_v: tuple = field(init=False)
    widths: tuple = field(init=False)
    midpoints: tuple = field(init=False)
    layer_ranges: np.ndarray = field(init=False)

    def __post_init__(self):
        low_q = tuple(np.array(q, dtype=float) for q in self.low_q)
        high_q = tuple(np.array(q, dtype=float) for q in self.high_q)
        if len(low_q) != self.shape.horizon or len(high_q) != self.shape.horizon:
            raise ShapeMismatchError('Envelope tables do not cover every step.')
        for step, (lo, hi) in enumerate(zip(low_q, high_q)):
            expected = (self.shape.layer_sizes[step], self.shape.actions)
            if lo.shape != expected or hi.shape != expected:
                raise ShapeMismatchError(f'Envelope tables of step {step} have the wrong shape.')
        terminal = np.zeros(1)
        low_v = tuple(q.max(axis=1) for q in low_q) + (terminal,)
        high_v = tuple(q.max(axis=1) for q in high_q) + (terminal,)
        widths = tuple(hi - lo for hi, lo in zip(high_v, low_v))
        midpoints = tuple((hi + lo) / 2.0 for hi, lo in zip(high_v, low_v))
        ranges = np.array([hi.max() - lo.min() for hi, lo in zip(high_v, low_v)])
        for name, value in (('low_q', low_q), ('high_q', high_q), ('low_v', low_v),
                            ('high_v', high_v), ('widths', widths), ('midpoints', midpoints),
                            ('layer_ranges', ranges)):
            object.__setattr__(self, name, value)

    @property
    def d_max(self):
        return float(max(w.max() for w in self.widths[:-1]))

    @property
    def r_max(self):
        return float(self.layer_ranges[:-1].max())


def oracle_envelope(solution, shape):
    """Width-zero envelope lowQ = highQ = Q*."""
    return ValueEnvelope(solution.q_values, solution.q_values, shape)


def trivial_envelope(shape):
    """lowQ = 0 and highQ = H - h + 1: the envelope that carries no information."""
    low = tuple(np.zeros((n, shape.actions)) for n in shape.layer_sizes)
    high = tuple(np.full((n, shape.actions), float(shape.horizon - step))
                 for step, n in enumerate(shape.layer_sizes))
    return ValueEnvelope(low, high, shape)


def scaled_envelope(solution, shape, low=1.0, high=1.0):
    """Envelope low * Q* <= Q* <= high * Q*, the multiplicative sandwich of shaping functions."""
    if not 0.0 <= low <= 1.0 <= high:
        raise ValidationError('A scaled envelope needs 0 <= low <= 1 <= high.')
    return ValueEnvelope(tuple(low * q for q in solution.q_values),
                         tuple(high * q for q in solution.q_values), shape)


def offline_bonus_table(step, split, high_next, low_next, cfg):
    """Offline bonus of every (s, a) at `step` given the step + 1 envelope values."""
    shape = split.shape
    span = float(shape.horizon - step - 1)
    n = split.counts[step]
    rows = split.empirical[step]
    log_term = cfg.log_term(shape)
    variance = np.maximum(biased_variance(rows, high_next), biased_variance(rows, low_next))
    safe_n = np.maximum(n, 1)
    raw = cfg.c1 * np.sqrt(variance * log_term / safe_n) + cfg.c2 * span * log_term / safe_n
    return np.where(n >= 2, np.minimum(raw, span), span)


def offline_bonus(step, state, action, split, high_next, low_next, cfg):
    """Offline bonus of a single pair; `state` is its index within the layer."""
    return float(offline_bonus_table(step, split, high_next, low_next, cfg)[state, action])


def compute_envelopes(data, mdp, cfg, rng):
    """
    Run the upper and lower offline recursions.

    Only the MDP's shape and its known reward tables are read; transitions come from data.
    Pairs absent from a step's share contribute no expectation term and get the full
    H - h bonus.
    """
    cfg.validate()
    shape = mdp.shape
    data.validate_against(mdp)
    split = split_dataset(data, shape, rng)

    high_next = low_next = np.zeros(1)
    low_q, high_q = [None] * shape.horizon, [None] * shape.horizon
    for step in range(shape.horizon - 1, -1, -1):
        bonus = offline_bonus_table(step, split, high_next, low_next, cfg)
        rows = split.empirical[step]
        r = mdp.rewards[step]
        high_q[step] = r + rows @ high_next + bonus
        low_q[step] = r + rows @ low_next - bonus
        high_next = high_q[step].max(axis=1)
        low_next = low_q[step].max(axis=1)

    envelope = ValueEnvelope(tuple(low_q), tuple(high_q), shape, cfg.delta, len(data))
    logger.info('Envelope from K=%d trajectories: D^max=%.4f R^max=%.4f',
                len(data), envelope.d_max, envelope.r_max)
    return envelope


# ==================== REPORTS ====================

@dataclass(frozen=True)
class WidthReport:
    holds: bool
    lhs: float
    rhs: float


def width_bound_check(envelope, K, d_b_min, delta, c1=C1, c2=C2):
    """Compare the first-step width with 2H^2[c1 sqrt(2H L1/(K d)) + c2 2H L1/(K d)]."""
    if d_b_min <= 0:
        raise LabError('d_b_min must be positive.')
    shape = envelope.shape
    H = shape.horizon
    log_term = OfflineConfig(delta, c1, c2).log_term(shape)
    scale = 2 * H * log_term / (K * d_b_min)
    rhs = 2 * H ** 2 * (c1 * math.sqrt(scale) + c2 * scale)
    lhs = float((envelope.high_v[0] - envelope.low_v[0]).max())
    return WidthReport(holds=lhs <= rhs, lhs=lhs, rhs=rhs)


@dataclass(frozen=True)
class CoverageReport:
    condition_met: bool
    d_b_min: float
    required_K: int
    uncovered: tuple  # (step, global state, action) with a reachable state but zero probability


def coverage_check(mdp, behavior_policy, K, delta):
    """Minimum-count condition floor(K/H) >= (8 / d_b_min) ln(H |S| |A| / delta)."""
    shape = mdp.shape
    H = shape.horizon
    d = occupancy(mdp, behavior_policy)
    positive = np.concatenate([x[x > 0] for x in d])
    d_b_min = float(positive.min())

    uncovered = []
    for step, table in enumerate(d):
        reachable = table.sum(axis=1) > 0
        for s, a in zip(*np.nonzero(reachable[:, None] & (table == 0))):
            uncovered.append((step, shape.offsets[step] + int(s), int(a)))

    threshold = (8.0 / d_b_min) * math.log(H * shape.num_states * shape.actions / delta)
    required_K = math.ceil(H * threshold)
    report = CoverageReport(K // H >= threshold, d_b_min, required_K, tuple(uncovered))
    if not report.condition_met:
        logger.warning('K=%d misses the coverage condition, required K=%d (d_b_min=%.4g)',
                       K, required_K, d_b_min)
    if uncovered:
        logger.warning('Behavior policy never plays %d reachable pairs', len(uncovered))
    return report
