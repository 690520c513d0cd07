"""Small hand-built MDPs shared by the test modules."""
import numpy as np

from lab.mdp import LayeredMdp, MdpGenSpec, generate_mdp


def bandit(rewards=(0.2, 0.7)):
    """H = 1, a single state, one arm per reward."""
    rewards = np.array([rewards], dtype=float)
    return LayeredMdp((np.ones((1, rewards.shape[1], 1)),), (rewards,), np.array([1.0]))


def deterministic_chain():
    """
    H = 3, two states per layer, two actions; action a moves to state a of the next layer.
    Only layer-0 state 0 is initial. Last-step rewards: state 4 pays 1 for both actions,
    state 5 pays 0 or 0.5.
    """
    move = np.zeros((2, 2, 2))
    move[:, 0, 0] = 1.0
    move[:, 1, 1] = 1.0
    transitions = (move, move.copy(), np.ones((2, 2, 1)))
    rewards = (np.zeros((2, 2)), np.zeros((2, 2)), np.array([[1.0, 1.0], [0.0, 0.5]]))
    return LayeredMdp(transitions, rewards, np.array([1.0, 0.0]))


def sparse_mdp(seed, horizon=3, states=3, actions=2):
    """Random layered MDP whose transition rows have random zero entries."""
    rng = np.random.default_rng(seed)
    transitions = []
    for step in range(horizon):
        if step == horizon - 1:
            transitions.append(np.ones((states, actions, 1)))
            continue
        rows = np.zeros((states, actions, states))
        for s in range(states):
            for a in range(actions):
                support = rng.random(states) < 0.5
                support[rng.integers(states)] = True
                weights = rng.random(states) * support
                rows[s, a] = weights / weights.sum()
        transitions.append(rows)
    rewards = tuple(rng.random((states, actions)) for _ in range(horizon))
    rho = np.zeros(states)
    rho[:2] = 0.5
    return LayeredMdp(tuple(transitions), rewards, rho)


def small_mdp(seed=0, horizon=3, states=3, actions=3, **kwargs):
    return generate_mdp(MdpGenSpec(horizon, states, actions, seed=seed, **kwargs))
