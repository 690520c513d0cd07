import itertools

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from lab.exceptions import ShapeMismatchError
from lab.mdp import (Dataset, LayeredMdp, MdpGenSpec, as_stochastic, collect_dataset,
                     evaluate_policy, generate_mdp, inverse_cdf, monte_carlo_value, occupancy,
                     sample_trajectory, solve_optimal, uniform_policy)
from lab.streams import MDP_GEN, OFFLINE_DATA, stream

from .fixtures import bandit, deterministic_chain, small_mdp


class GenerateMdpTests(SimpleTestCase):

    def test_sizes_follow_the_generation_parameters(self):
        mdp = generate_mdp(MdpGenSpec(horizon=4, states_per_layer=3, actions=3))
        self.assertEqual(mdp.shape.num_states, 12)
        self.assertEqual(mdp.shape.num_pairs, 36)
        self.assertEqual(mdp.shape.terminal, 12)
        self.assertEqual(mdp.layers[1], [3, 4, 5])

    def test_rewards_only_at_the_last_step(self):
        mdp = small_mdp(seed=3, reward_range=(0.2, 0.6))
        for step in range(mdp.horizon - 1):
            self.assertTrue(np.all(mdp.rewards[step] == 0))
        last = mdp.rewards[-1]
        self.assertTrue(np.all((last >= 0.2) & (last <= 0.6)))

    def test_uniform_intermediate_rewards(self):
        mdp = small_mdp(seed=3, intermediate_rewards='uniform')
        self.assertTrue(np.any(mdp.rewards[0] > 0))

    def test_zero_range_gives_zero_values(self):
        mdp = small_mdp(seed=1, reward_range=(0.0, 0.0))
        solution = solve_optimal(mdp)
        for values in solution.values:
            self.assertTrue(np.all(values == 0))

    def test_values_stay_inside_the_reward_range(self):
        mdp = small_mdp(seed=5, horizon=3, reward_range=(0.4, 0.5))
        solution = solve_optimal(mdp)
        for values in solution.values[:-1]:
            self.assertTrue(np.all(values >= 0.4 - 1e-12))
            self.assertTrue(np.all(values <= 0.5 + 1e-12))

    def test_generation_is_deterministic(self):
        a, b = small_mdp(seed=9), small_mdp(seed=9)
        for p, q in zip(a.transitions, b.transitions):
            np.testing.assert_array_equal(p, q)
        np.testing.assert_array_equal(a.rewards[-1], b.rewards[-1])

    def test_reward_range_does_not_change_dynamics(self):
        narrow = small_mdp(seed=4, reward_range=(0.3, 0.4))
        wide = small_mdp(seed=4, reward_range=(0.0, 1.0))
        for p, q in zip(narrow.transitions, wide.transitions):
            np.testing.assert_array_equal(p, q)
        np.testing.assert_array_equal(np.argsort(narrow.rewards[-1], axis=None),
                                      np.argsort(wide.rewards[-1], axis=None))

    def test_invalid_spec_is_rejected(self):
        with self.assertRaises(ValidationError):
            generate_mdp(MdpGenSpec(3, 3, 3, reward_range=(0.6, 0.4)))
        with self.assertRaises(ValidationError):
            generate_mdp(MdpGenSpec(3, 0, 3))


class LayeredMdpValidationTests(SimpleTestCase):

    def test_rows_must_sum_to_one(self):
        rows = np.full((1, 2, 1), 0.9)
        with self.assertRaises(ValidationError):
            LayeredMdp((rows,), (np.zeros((1, 2)),), np.array([1.0]))

    def test_rewards_must_lie_in_unit_interval(self):
        with self.assertRaises(ValidationError):
            LayeredMdp((np.ones((1, 2, 1)),), (np.array([[0.5, 1.5]]),), np.array([1.0]))

    def test_initial_distribution_must_be_normalized(self):
        with self.assertRaises(ValidationError):
            LayeredMdp((np.ones((2, 1, 1)),), (np.zeros((2, 1)),), np.array([0.5, 0.6]))

    def test_layer_lookup(self):
        mdp = small_mdp(horizon=3, states=3)
        self.assertEqual(mdp.layer_of(0), 0)
        self.assertEqual(mdp.layer_of(4), 1)
        self.assertEqual(mdp.shape.local(8), (2, 2))
        with self.assertRaises(ValidationError):
            mdp.layer_of(9)


class SolveOptimalTests(SimpleTestCase):

    def test_one_step_maximization(self):
        solution = solve_optimal(bandit((0.2, 0.7)))
        self.assertAlmostEqual(solution.values[0][0], 0.7)
        self.assertEqual(solution.policy[0][0], 1)

    def test_ties_go_to_the_lowest_action(self):
        solution = solve_optimal(small_mdp(seed=2, reward_range=(0.0, 0.0)))
        for actions in solution.policy:
            self.assertTrue(np.all(actions == 0))

    def test_matches_policy_enumeration(self):
        for seed in range(50):
            mdp = small_mdp(seed=seed, horizon=3, states=2, actions=2)
            solution = solve_optimal(mdp)
            best = np.full(2, -np.inf)
            for choice in itertools.product(range(2), repeat=6):
                policy = [np.array(choice[2 * step:2 * step + 2]) for step in range(3)]
                best = np.maximum(best, evaluate_policy(mdp, policy)[0])
            np.testing.assert_allclose(solution.values[0], best, atol=1e-10)

    def test_no_policy_beats_the_optimum(self):
        mdp = small_mdp(seed=12, horizon=4)
        solution = solve_optimal(mdp)
        rng = np.random.default_rng(12)
        for _ in range(100):
            policy = [rng.integers(mdp.actions, size=n) for n in mdp.shape.layer_sizes]
            for values, best in zip(evaluate_policy(mdp, policy), solution.values):
                self.assertTrue(np.all(values <= best + 1e-12))

    def test_optimal_policy_reaches_the_optimum(self):
        mdp = small_mdp(seed=13, horizon=4, intermediate_rewards='uniform')
        solution = solve_optimal(mdp)
        for values, best in zip(evaluate_policy(mdp, solution.policy), solution.values):
            np.testing.assert_allclose(values, best, rtol=0, atol=1e-12)

    def test_bellman_optimality_and_bounds(self):
        mdp = small_mdp(seed=7, horizon=4)
        solution = solve_optimal(mdp)
        for step in range(mdp.horizon):
            q = mdp.rewards[step] + mdp.transitions[step] @ solution.values[step + 1]
            np.testing.assert_allclose(solution.values[step], q.max(axis=1), atol=1e-10)
            self.assertTrue(np.all(solution.values[step] <= mdp.horizon - step))
            self.assertAlmostEqual(solution.ranges[step],
                                   solution.values[step].max() - solution.values[step].min())

    def test_partial_policy_is_rejected(self):
        mdp = small_mdp(horizon=2)
        with self.assertRaises(ValidationError):
            evaluate_policy(mdp, [np.zeros(3, dtype=int)])
        with self.assertRaises(ValidationError):
            evaluate_policy(mdp, [np.zeros(3, dtype=int), np.zeros(2, dtype=int)])


class SamplingTests(SimpleTestCase):

    def test_inverse_cdf(self):
        probabilities = np.array([0.2, 0.3, 0.5])
        self.assertEqual(inverse_cdf(probabilities, 0.1), 0)
        self.assertEqual(inverse_cdf(probabilities, 0.25), 1)
        self.assertEqual(inverse_cdf(probabilities, 0.999), 2)

    def test_named_streams_are_independent_and_reproducible(self):
        self.assertEqual(stream(0, MDP_GEN).random(), stream(0, MDP_GEN).random())
        self.assertNotEqual(stream(0, MDP_GEN).random(), stream(0, OFFLINE_DATA).random())
        self.assertNotEqual(stream(0, OFFLINE_DATA, 1).random(), stream(0, OFFLINE_DATA, 2).random())

    def test_dataset_is_layer_consistent(self):
        mdp = small_mdp(seed=1, horizon=4)
        data = collect_dataset(mdp, uniform_policy(mdp.shape), 500, stream(1, OFFLINE_DATA))
        self.assertEqual(len(data), 500)
        self.assertEqual(data.horizon, 4)
        data.validate_against(mdp)
        for step in range(4):
            self.assertTrue(set(data.states[:, step]) <= set(mdp.layers[step]))

    def test_second_layer_frequencies_follow_the_kernel(self):
        mdp = small_mdp(seed=14, horizon=3)
        behavior = uniform_policy(mdp.shape)
        K = 20000
        data = collect_dataset(mdp, behavior, K, stream(14, OFFLINE_DATA))
        expected = np.einsum('s,sa,san->n', mdp.initial_distribution, behavior[0], mdp.transitions[0])
        frequency = np.bincount(data.states[:, 1] - mdp.shape.offsets[1], minlength=3) / K
        stderr = np.sqrt(expected * (1 - expected) / K)
        self.assertTrue(np.all(np.abs(frequency - expected) <= 4 * stderr), (frequency, expected))

    def test_deterministic_chain_repeats_one_trajectory(self):
        mdp = deterministic_chain()
        policy = as_stochastic(mdp.shape, solve_optimal(mdp).policy)
        first = sample_trajectory(mdp, policy, stream(0, OFFLINE_DATA))
        for seed in range(1, 6):
            self.assertEqual(sample_trajectory(mdp, policy, stream(seed, OFFLINE_DATA)), first)
        data = collect_dataset(mdp, policy, 20, stream(9, OFFLINE_DATA))
        self.assertTrue(all(data[k] == first for k in range(20)))

    def test_trajectory_rewards_match_the_mdp(self):
        mdp = small_mdp(seed=2, intermediate_rewards='uniform')
        trajectory = sample_trajectory(mdp, uniform_policy(mdp.shape), stream(0, OFFLINE_DATA))
        self.assertEqual(len(trajectory), mdp.horizon)
        self.assertEqual(trajectory.terminal, mdp.shape.terminal)
        for step, (s, a, r) in enumerate(zip(trajectory.states, trajectory.actions, trajectory.rewards)):
            self.assertEqual(mdp.layer_of(s), step)
            self.assertEqual(r, mdp.rewards[step][s - mdp.shape.offsets[step], a])

    def test_foreign_dataset_is_rejected(self):
        mdp = small_mdp(seed=2, horizon=3)
        other = small_mdp(seed=2, horizon=2)
        data = collect_dataset(other, uniform_policy(other.shape), 10, stream(0, OFFLINE_DATA))
        with self.assertRaises(ShapeMismatchError):
            data.validate_against(mdp)

    def test_dataset_from_trajectories(self):
        mdp = small_mdp(seed=4)
        rng = stream(4, OFFLINE_DATA)
        trajectories = [sample_trajectory(mdp, uniform_policy(mdp.shape), rng) for _ in range(5)]
        data = Dataset.from_trajectories(trajectories)
        self.assertEqual(len(data), 5)
        self.assertEqual(data[3], trajectories[3])

    def test_occupancy_is_a_distribution_per_step(self):
        mdp = small_mdp(seed=6, horizon=4)
        for table in occupancy(mdp, uniform_policy(mdp.shape)):
            self.assertAlmostEqual(table.sum(), 1.0)

    def test_monte_carlo_agrees_with_exact_evaluation(self):
        mdp = small_mdp(seed=8, horizon=3, intermediate_rewards='uniform')
        solution = solve_optimal(mdp)
        mean, stderr = monte_carlo_value(mdp, as_stochastic(mdp.shape, solution.policy), 20000,
                                         stream(8, OFFLINE_DATA))
        self.assertLess(abs(mean - solution.initial_value(mdp)), 5 * stderr + 1e-9)
