"""
Analysis sets and scalars computed from the true MDP and an envelope.

PairEff is the set of pairs the Q-shaping learner may still play; PS / PPS / BPS are the
pseudo-suboptimal triples, the states only reachable through them and their intersection.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import LabError, ShapeMismatchError

logger = logging.getLogger(__name__)


def _check_shapes(solution, envelope):
    for step, q in enumerate(solution.q_values):
        if envelope.high_q[step].shape != q.shape:
            raise ShapeMismatchError(f'Envelope and solution disagree on the shape of step {step}.')
    if len(solution.q_values) != envelope.shape.horizon:
        raise ShapeMismatchError('Envelope and solution have different horizons.')


def pair_eff(solution, envelope):
    """Pairs (global state, action) with highQ_h(s, a) >= V*_h(s)."""
    _check_shapes(solution, envelope)
    offsets = envelope.shape.offsets
    pairs = set()
    for step, high in enumerate(envelope.high_q):
        states, actions = np.nonzero(high >= solution.values[step][:, None])
        pairs.update((offsets[step] + int(s), int(a)) for s, a in zip(states, actions))
    return frozenset(pairs)


@dataclass(frozen=True)
class EffectiveSets:
    gap: float
    pair_eff: frozenset
    ps: frozenset   # (global state, action, step)
    pps: frozenset  # global states
    bps: frozenset  # (global state, action, step)

    @property
    def cardinalities(self):
        return {'pair_eff': len(self.pair_eff), 'ps': len(self.ps),
                'pps': len(self.pps), 'bps': len(self.bps)}


def upper_backup(mdp, envelope):
    """Q^highV_h = r_h + <P_h, highV_{h+1}> under the true kernel."""
    return tuple(mdp.rewards[step] + mdp.transitions[step] @ envelope.high_v[step + 1]
                 for step in range(mdp.horizon))


def pseudo_sub_sets(mdp, solution, envelope, gap):
    """
    PS, PPS and BPS for threshold `gap`.

    A state stays out of PPS exactly when some positive-probability path from supp(rho)
    reaches it without playing a PS triple; states of supp(rho) are reached by the empty
    path. States no path reaches at all are therefore in PPS.
    """
    if gap <= 0:
        raise LabError('The gap threshold must be positive.')
    _check_shapes(solution, envelope)
    shape = mdp.shape
    offsets = shape.offsets
    q_high = upper_backup(mdp, envelope)
    ps_masks = [q_high[step] <= solution.values[step][:, None] - gap
                for step in range(shape.horizon)]

    avoiding = mdp.initial_distribution > 0
    pps = set(int(s) for s in np.nonzero(~avoiding)[0])
    for step in range(shape.horizon - 1):
        edges = mdp.transitions[step] > 0
        allowed = avoiding[:, None] & ~ps_masks[step]
        avoiding_next = np.any(edges & allowed[:, :, None], axis=(0, 1))
        pps.update(offsets[step + 1] + int(s) for s in np.nonzero(~avoiding_next)[0])
        avoiding = avoiding_next

    ps = set()
    for step, mask in enumerate(ps_masks):
        states, actions = np.nonzero(mask)
        ps.update((offsets[step] + int(s), int(a), step) for s, a in zip(states, actions))
    bps = {triple for triple in ps if triple[0] in pps}
    return EffectiveSets(gap, pair_eff(solution, envelope), frozenset(ps), frozenset(pps),
                         frozenset(bps))


@dataclass(frozen=True)
class EnvelopeReport:
    d_max: float
    r_max: float
    layer_ranges: tuple
    optimal_ranges: tuple
    sandwich_holds: bool
    violations: tuple  # (step, global state, action or None, table)

    def as_dict(self):
        return {
            'd_max': self.d_max,
            'r_max': self.r_max,
            'layer_ranges': list(self.layer_ranges),
            'optimal_ranges': list(self.optimal_ranges),
            'sandwich_holds': self.sandwich_holds,
            'violations': [{'step': step, 'state': s, 'action': a, 'table': table}
                           for step, s, a, table in self.violations],
        }


def sandwich_violations(solution, envelope):
    """Every entry where lowQ <= Q* <= highQ or lowV <= V* <= highV fails."""
    _check_shapes(solution, envelope)
    offsets = envelope.shape.offsets
    violations = []
    for step in range(envelope.shape.horizon):
        q_star, v_star = solution.q_values[step], solution.values[step]
        for table, bad in (('low_q', envelope.low_q[step] > q_star),
                           ('high_q', envelope.high_q[step] < q_star)):
            violations.extend((step, offsets[step] + int(s), int(a), table)
                              for s, a in zip(*np.nonzero(bad)))
        for table, bad in (('low_v', envelope.low_v[step] > v_star),
                           ('high_v', envelope.high_v[step] < v_star)):
            violations.extend((step, offsets[step] + int(s), None, table)
                              for s in np.nonzero(bad)[0])
    return tuple(violations)


def sandwich_holds(solution, envelope):
    return not sandwich_violations(solution, envelope)


def envelope_report(mdp, solution, envelope):
    violations = sandwich_violations(solution, envelope)
    if violations:
        logger.debug('Envelope sandwich fails at %d entries', len(violations))
    return EnvelopeReport(
        d_max=envelope.d_max,
        r_max=envelope.r_max,
        layer_ranges=tuple(float(r) for r in envelope.layer_ranges[:mdp.horizon]),
        optimal_ranges=tuple(float(r) for r in solution.ranges),
        sandwich_holds=not violations,
        violations=violations,
    )


def width_scatter_rows(envelope, step):
    """(state, D_h(s), R_h) rows of one layer, the raw material of the width-shrinkage plot."""
    offset = envelope.shape.offsets[step]
    layer_range = float(envelope.layer_ranges[step])
    return [{'state': offset + s, 'width': float(w), 'layer_range': layer_range}
            for s, w in enumerate(envelope.widths[step])]
