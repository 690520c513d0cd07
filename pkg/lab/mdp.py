"""
Layered tabular MDPs: the ground-truth environment of every experiment.

A layered MDP partitions its states by step: layer h only transitions into layer h+1,
and the last layer transitions into a single terminal symbol. States carry global ids,
layer h occupying a contiguous block; tables are stored per layer so every backup is a
small dense numpy product.

Steps are 0-based throughout the code (`step = h - 1` in the usual 1-based notation).
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from django.core.exceptions import ValidationError

from .exceptions import ShapeMismatchError
from .streams import MDP_GEN, stream

logger = logging.getLogger(__name__)

ROW_TOLERANCE = 1e-12

INTERMEDIATE_ZERO = 'zero'
INTERMEDIATE_UNIFORM = 'uniform'
INTERMEDIATE_CHOICES = (INTERMEDIATE_ZERO, INTERMEDIATE_UNIFORM)


def _frozen(array, dtype=float):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MdpShape:
    """Sizes of a layered MDP, without any dynamics."""
    horizon: int
    layer_sizes: tuple
    actions: int

    @property
    def num_states(self):
        return int(sum(self.layer_sizes))

    @property
    def offsets(self):
        return tuple(int(x) for x in np.concatenate([[0], np.cumsum(self.layer_sizes)[:-1]]))

    @property
    def terminal(self):
        """Global id of the terminal symbol."""
        return self.num_states

    @property
    def num_pairs(self):
        return self.num_states * self.actions

    def next_size(self, step):
        """Number of successor symbols of layer `step` (1 for the terminal)."""
        return self.layer_sizes[step + 1] if step + 1 < self.horizon else 1

    def layer(self, step):
        start = self.offsets[step]
        return list(range(start, start + self.layer_sizes[step]))

    def layer_of(self, state):
        if not 0 <= state < self.num_states:
            raise ValidationError(f'State {state} is not a non-terminal state of this MDP.')
        return int(np.searchsorted(np.cumsum(self.layer_sizes), state, side='right'))

    def local(self, state):
        """(step, index within layer) of a global state id."""
        step = self.layer_of(state)
        return step, state - self.offsets[step]

    def as_dict(self):
        return {'horizon': self.horizon, 'layer_sizes': list(self.layer_sizes), 'actions': self.actions}


@dataclass(frozen=True, eq=False)
class LayeredMdp:
    """
    Finite-horizon layered MDP with deterministic rewards.

    transitions[step] has shape (|S_step|, A, |S_step+1|) (a single terminal column for the
    last step), rewards[step] has shape (|S_step|, A), initial_distribution is over layer 0.
    """
    transitions: tuple
    rewards: tuple
    initial_distribution: np.ndarray
    shape: MdpShape = field(init=False)

    def __post_init__(self):
        transitions = tuple(_frozen(p) for p in self.transitions)
        rewards = tuple(_frozen(r) for r in self.rewards)
        object.__setattr__(self, 'transitions', transitions)
        object.__setattr__(self, 'rewards', rewards)
        object.__setattr__(self, 'initial_distribution', _frozen(self.initial_distribution))
        if not rewards:
            raise ValidationError('An MDP needs at least one step.')
        actions = rewards[0].shape[1] if rewards[0].ndim == 2 else 0
        shape = MdpShape(len(rewards), tuple(int(r.shape[0]) for r in rewards), int(actions))
        object.__setattr__(self, 'shape', shape)
        self.validate()

    @property
    def horizon(self):
        return self.shape.horizon

    @property
    def actions(self):
        return self.shape.actions

    @property
    def layers(self):
        return [self.shape.layer(step) for step in range(self.horizon)]

    def layer_of(self, state):
        return self.shape.layer_of(state)

    def validate(self):
        """Check every structural invariant; raises ValidationError on the first failure."""
        shape = self.shape
        if shape.actions < 1:
            raise ValidationError('The action set must be nonempty.')
        if len(self.transitions) != shape.horizon:
            raise ValidationError(
                f'Expected {shape.horizon} transition tensors, got {len(self.transitions)}.')
        for step in range(shape.horizon):
            size = shape.layer_sizes[step]
            if size < 1:
                raise ValidationError(f'Layer {step} is empty.')
            expected = (size, shape.actions, shape.next_size(step))
            p = self.transitions[step]
            if p.shape != expected:
                raise ValidationError(
                    f'Transition tensor of step {step} has shape {p.shape}, expected {expected}.')
            if self.rewards[step].shape != (size, shape.actions):
                raise ValidationError(f'Reward table of step {step} has the wrong shape.')
            if np.any(p < 0):
                raise ValidationError(f'Transition tensor of step {step} has negative entries.')
            worst = np.max(np.abs(p.sum(axis=2) - 1.0))
            if worst > ROW_TOLERANCE:
                raise ValidationError(
                    f'Transition rows of step {step} do not sum to 1 (max error {worst:.3e}).')
            r = self.rewards[step]
            if np.any(r < 0) or np.any(r > 1):
                raise ValidationError(f'Rewards of step {step} leave [0, 1].')
        rho = self.initial_distribution
        if rho.shape != (shape.layer_sizes[0],):
            raise ValidationError('The initial distribution must cover exactly layer 0.')
        if np.any(rho < 0) or abs(rho.sum() - 1.0) > ROW_TOLERANCE:
            raise ValidationError('The initial distribution is not a probability vector.')


@dataclass(frozen=True)
class MdpGenSpec:
    """Parameters of a random layered MDP."""
    horizon: int
    states_per_layer: int
    actions: int
    reward_range: tuple = (0.0, 1.0)
    intermediate_rewards: str = INTERMEDIATE_ZERO
    concentration: float = 1.0
    seed: int = 0

    def validate(self):
        errors = []
        for name in ('horizon', 'states_per_layer', 'actions'):
            if getattr(self, name) < 1:
                errors.append(f'{name} must be a positive integer.')
        r1, r2 = self.reward_range
        if not 0.0 <= r1 <= r2 <= 1.0:
            errors.append(f'Reward range [{r1}, {r2}] must satisfy 0 <= r1 <= r2 <= 1.')
        if self.intermediate_rewards not in INTERMEDIATE_CHOICES:
            errors.append(f'Unknown intermediate reward mode {self.intermediate_rewards!r}.')
        if not self.concentration > 0:
            errors.append('The Dirichlet concentration must be positive.')
        if errors:
            raise ValidationError(errors)

    def with_range(self, r1, r2):
        return replace(self, reward_range=(float(r1), float(r2)))

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


def generate_mdp(spec):
    """
    Draw a random layered MDP.

    Transition rows come from a symmetric Dirichlet, the initial distribution is uniform over
    layer 0 and last-step rewards are uniform on the requested reward range. The draw order
    (all transitions, then last-step uniforms, then intermediate rewards) makes instances
    that differ only in their reward range share dynamics and reward ranks.
    """
    spec.validate()
    rng = stream(spec.seed, MDP_GEN)
    n, A, H = spec.states_per_layer, spec.actions, spec.horizon
    alpha = spec.concentration

    transitions = []
    for step in range(H - 1):
        rows = rng.dirichlet(np.full(n, alpha), size=(n, A))
        transitions.append(rows / rows.sum(axis=2, keepdims=True))
    transitions.append(np.ones((n, A, 1)))

    r1, r2 = spec.reward_range
    terminal = r1 + (r2 - r1) * rng.random((n, A))
    rewards = []
    for step in range(H - 1):
        if spec.intermediate_rewards == INTERMEDIATE_UNIFORM:
            rewards.append(rng.random((n, A)))
        else:
            rewards.append(np.zeros((n, A)))
    rewards.append(np.clip(terminal, r1, r2))

    mdp = LayeredMdp(tuple(transitions), tuple(rewards), np.full(n, 1.0 / n))
    logger.debug('Generated MDP H=%d |S_h|=%d A=%d range=[%s, %s] seed=%d',
                 H, n, A, r1, r2, spec.seed)
    return mdp


# ==================== DYNAMIC-PROGRAMMING ORACLE ====================

@dataclass(frozen=True, eq=False)
class OptimalSolution:
    """V*, Q*, the greedy optimal policy and Range(V*_h) per layer."""
    values: tuple       # H + 1 arrays, the last one the terminal zero
    q_values: tuple     # H arrays of shape (|S_h|, A)
    policy: tuple       # H int arrays
    ranges: np.ndarray  # Range(V*_h) = max_s V*_h - min_s V*_h

    def initial_value(self, mdp):
        return float(mdp.initial_distribution @ self.values[0])


def solve_optimal(mdp):
    """Exact backward induction; greedy ties go to the lowest action index."""
    H = mdp.horizon
    values = [None] * (H + 1)
    q_values = [None] * H
    policy = [None] * H
    values[H] = np.zeros(1)
    for step in range(H - 1, -1, -1):
        q = mdp.rewards[step] + mdp.transitions[step] @ values[step + 1]
        q_values[step] = q
        values[step] = q.max(axis=1)
        policy[step] = q.argmax(axis=1)
    ranges = np.array([v.max() - v.min() for v in values[:H]])
    return OptimalSolution(tuple(values), tuple(q_values), tuple(policy), ranges)


def _check_policy(mdp, policy):
    if len(policy) != mdp.horizon:
        raise ValidationError(
            f'Policy covers {len(policy)} steps, the MDP has {mdp.horizon}.')
    checked = []
    for step, actions in enumerate(policy):
        actions = np.asarray(actions)
        if actions.shape != (mdp.shape.layer_sizes[step],):
            raise ValidationError(f'Policy is partial at step {step}.')
        if np.any(actions < 0) or np.any(actions >= mdp.actions):
            raise ValidationError(f'Policy uses an unknown action at step {step}.')
        checked.append(actions.astype(int))
    return checked


def evaluate_policy(mdp, policy):
    """Exact value tables of a deterministic per-(step, state) action table."""
    policy = _check_policy(mdp, policy)
    H = mdp.horizon
    values = [None] * (H + 1)
    values[H] = np.zeros(1)
    for step in range(H - 1, -1, -1):
        idx = np.arange(mdp.shape.layer_sizes[step])
        a = policy[step]
        values[step] = mdp.rewards[step][idx, a] + mdp.transitions[step][idx, a] @ values[step + 1]
    return tuple(values)


# ==================== POLICIES ====================

def uniform_policy(shape):
    """Behavior policy that picks every action with probability 1/A."""
    return tuple(np.full((n, shape.actions), 1.0 / shape.actions) for n in shape.layer_sizes)


def as_stochastic(shape, policy):
    """One-hot action distributions of a deterministic policy."""
    rows = []
    for step, actions in enumerate(policy):
        one_hot = np.zeros((shape.layer_sizes[step], shape.actions))
        one_hot[np.arange(shape.layer_sizes[step]), np.asarray(actions, dtype=int)] = 1.0
        rows.append(one_hot)
    return tuple(rows)


def occupancy(mdp, policy_rows):
    """Exact state-action occupancies d_h(s, a) of a stochastic policy, by forward propagation."""
    state_dist = np.asarray(mdp.initial_distribution, dtype=float)
    result = []
    for step in range(mdp.horizon):
        d = state_dist[:, None] * np.asarray(policy_rows[step])
        result.append(d)
        state_dist = np.einsum('sa,san->n', d, mdp.transitions[step])
    return tuple(result)


# ==================== SAMPLING ====================

@dataclass(frozen=True)
class Trajectory:
    """One episode: H (state, action, reward) triples plus the terminal symbol."""
    states: tuple
    actions: tuple
    rewards: tuple
    terminal: int

    def __len__(self):
        return len(self.states)


@dataclass(frozen=True, eq=False)
class Dataset:
    """K trajectories stored as (K, H) arrays of global states, actions and rewards."""
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    terminal: int
    behavior_policy: str = 'uniform'

    def __post_init__(self):
        object.__setattr__(self, 'states', _frozen(self.states, dtype=np.int64).reshape(-1, np.shape(self.states)[-1]))
        object.__setattr__(self, 'actions', _frozen(self.actions, dtype=np.int64).reshape(self.states.shape))
        object.__setattr__(self, 'rewards', _frozen(self.rewards).reshape(self.states.shape))

    def __len__(self):
        return self.states.shape[0]

    def __getitem__(self, k):
        return Trajectory(tuple(int(s) for s in self.states[k]),
                          tuple(int(a) for a in self.actions[k]),
                          tuple(float(r) for r in self.rewards[k]),
                          self.terminal)

    @property
    def horizon(self):
        return self.states.shape[1]

    @classmethod
    def from_trajectories(cls, trajectories, behavior_policy='uniform'):
        trajectories = list(trajectories)
        if not trajectories:
            raise ValidationError('A dataset needs at least one trajectory.')
        return cls(np.array([t.states for t in trajectories]),
                   np.array([t.actions for t in trajectories]),
                   np.array([t.rewards for t in trajectories]),
                   trajectories[0].terminal, behavior_policy)

    def validate_against(self, mdp):
        """Layer consistency and reward agreement with the generating MDP."""
        shape = mdp.shape
        if self.horizon != shape.horizon or self.terminal != shape.terminal:
            raise ShapeMismatchError('Dataset horizon or terminal symbol does not match the MDP.')
        for step in range(shape.horizon):
            local = self.states[:, step] - shape.offsets[step]
            if np.any(local < 0) or np.any(local >= shape.layer_sizes[step]):
                raise ShapeMismatchError(f'Dataset has a state outside layer {step} at step {step}.')
            a = self.actions[:, step]
            if np.any(a < 0) or np.any(a >= shape.actions):
                raise ShapeMismatchError(f'Dataset has an unknown action at step {step}.')
            if not np.allclose(self.rewards[:, step], mdp.rewards[step][local, a], atol=1e-12):
                raise ShapeMismatchError(f'Dataset rewards disagree with the MDP at step {step}.')


def inverse_cdf(probabilities, u):
    """Index of the first cumulative weight exceeding u, row by row."""
    u = np.asarray(u)
    cdf = np.cumsum(probabilities, axis=-1)
    idx = (u[..., None] >= cdf).sum(axis=-1)
    return np.minimum(idx, probabilities.shape[-1] - 1)


def sample_trajectory(mdp, policy_rows, rng):
    """Roll one episode of a stochastic policy through the true kernel."""
    shape = mdp.shape
    states, actions, rewards = [], [], []
    s = int(inverse_cdf(mdp.initial_distribution, rng.random()))
    for step in range(shape.horizon):
        a = int(inverse_cdf(np.asarray(policy_rows[step][s]), rng.random()))
        states.append(shape.offsets[step] + s)
        actions.append(a)
        rewards.append(float(mdp.rewards[step][s, a]))
        s = int(inverse_cdf(mdp.transitions[step][s, a], rng.random()))
    return Trajectory(tuple(states), tuple(actions), tuple(rewards), shape.terminal)


def collect_dataset(mdp, behavior_policy, K, rng, policy_id='uniform'):
    """K independent trajectories of the behavior policy, sampled one layer at a time."""
    if K < 1:
        raise ValidationError('A dataset needs K >= 1 trajectories.')
    shape = mdp.shape
    states = np.empty((K, shape.horizon), dtype=np.int64)
    actions = np.empty((K, shape.horizon), dtype=np.int64)
    rewards = np.empty((K, shape.horizon))
    s = inverse_cdf(np.broadcast_to(mdp.initial_distribution, (K, shape.layer_sizes[0])), rng.random(K))
    for step in range(shape.horizon):
        a = inverse_cdf(np.asarray(behavior_policy[step])[s], rng.random(K))
        states[:, step] = shape.offsets[step] + s
        actions[:, step] = a
        rewards[:, step] = mdp.rewards[step][s, a]
        s = inverse_cdf(mdp.transitions[step][s, a], rng.random(K))
    logger.debug('Collected %d trajectories under the %s behavior policy', K, policy_id)
    return Dataset(states, actions, rewards, shape.terminal, policy_id)


def monte_carlo_value(mdp, policy_rows, episodes, rng):
    """Mean return from the initial distribution and its standard error."""
    data = collect_dataset(mdp, policy_rows, episodes, rng)
    returns = data.rewards.sum(axis=1)
    return float(returns.mean()), float(returns.std(ddof=1) / np.sqrt(episodes)) if episodes > 1 else 0.0
