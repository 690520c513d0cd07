import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag

from lab.diagnostics import pair_eff, sandwich_holds
from lab.exceptions import ConfigurationError, LabError, ShapeMismatchError
from lab.learners import (Algorithm, LearnerState, OnlineConfig, bonus_scales, compute_q_bound,
                          online_bonus_table, run_learner)
from lab.mdp import collect_dataset, evaluate_policy, solve_optimal, uniform_policy
from lab.offline import (C1, C2, OfflineConfig, ValueEnvelope, compute_envelopes, oracle_envelope,
                         scaled_envelope)
from lab.streams import OFFLINE_DATA, OFFLINE_SPLIT, ONLINE_RUN, stream

from .fixtures import bandit, small_mdp


def learned_envelope(mdp, K=2000, seed=0):
    data = collect_dataset(mdp, uniform_policy(mdp.shape), K, stream(seed, OFFLINE_DATA))
    return compute_envelopes(data, mdp, OfflineConfig(), stream(seed, OFFLINE_SPLIT))


def play(mdp, envelope, algorithm, episodes, seed=0, **kwargs):
    cfg = OnlineConfig(episodes=episodes, algorithm=algorithm)
    return run_learner(mdp, envelope, cfg, stream(seed, ONLINE_RUN), seed=seed, **kwargs)


class RunLearnerTests(SimpleTestCase):

    def setUp(self):
        self.mdp = small_mdp(seed=1, horizon=3)
        self.envelope = learned_envelope(self.mdp)

    def test_zero_episodes(self):
        record = play(self.mdp, self.envelope, Algorithm.Q_SHAPING, 0)
        self.assertEqual(record.episodes, 0)
        self.assertEqual(record.final_regret, 0.0)
        self.assertEqual(len(record.cumulative), 0)

    def test_every_learner_is_exact_on_a_bandit(self):
        mdp = bandit((0.1, 0.9, 0.4))
        envelope = oracle_envelope(solve_optimal(mdp), mdp.shape)
        for algorithm in Algorithm:
            record = play(mdp, envelope, algorithm, 20)
            self.assertEqual(record.final_regret, 0.0, algorithm)

    def test_regret_is_nonnegative_and_counts_every_episode(self):
        for algorithm in Algorithm:
            record = play(self.mdp, self.envelope, algorithm, 50, seed=3)
            self.assertTrue(np.all(record.instantaneous >= -1e-10), algorithm)
            self.assertTrue(np.all(np.diff(record.cumulative) >= -1e-10))
            for counts in record.final_counts:
                self.assertEqual(int(counts.sum()), 50)

    def test_runs_are_reproducible(self):
        first = play(self.mdp, self.envelope, Algorithm.V_SHAPING, 40, seed=5)
        second = play(self.mdp, self.envelope, Algorithm.V_SHAPING, 40, seed=5)
        np.testing.assert_array_equal(first.instantaneous, second.instantaneous)

    def test_ucbvi_ignores_the_envelope(self):
        plain = play(self.mdp, None, Algorithm.UCBVI, 40, seed=2)
        shaped = play(self.mdp, self.envelope, Algorithm.UCBVI, 40, seed=2)
        np.testing.assert_array_equal(plain.instantaneous, shaped.instantaneous)
        self.assertEqual(plain.d_max, float(self.mdp.horizon))

    def test_shaping_needs_a_matching_envelope(self):
        with self.assertRaises(ConfigurationError):
            play(self.mdp, None, Algorithm.Q_SHAPING, 5)
        other = small_mdp(seed=1, horizon=2)
        with self.assertRaises(ShapeMismatchError):
            play(other, self.envelope, Algorithm.UPPER_BONUS, 5)
        with self.assertRaises(ValidationError):
            play(self.mdp, self.envelope, Algorithm.Q_SHAPING, -1)

    def test_estimates_stay_under_the_envelope(self):
        def check_q(state, path):
            for step in range(self.mdp.horizon):
                self.assertTrue(np.all(state.q_hat[step] <= self.envelope.high_q[step] + 1e-12))

        def check_v(state, path):
            for step in range(self.mdp.horizon):
                self.assertTrue(np.all(state.v_hat[step] <= self.envelope.high_v[step] + 1e-12))
            self.assertEqual([visit[0] for visit in path], list(range(self.mdp.horizon)))

        play(self.mdp, self.envelope, Algorithm.Q_SHAPING, 30, on_episode=check_q)
        play(self.mdp, self.envelope, Algorithm.V_SHAPING, 30, on_episode=check_v)


    def test_sigma_never_exceeds_the_next_range(self):
        def check(state, path):
            for step in range(self.mdp.horizon):
                sigma, span = bonus_scales(step, state, self.envelope, cfg)
                self.assertTrue(np.all(sigma <= span + 1e-9), step)

        for algorithm in (Algorithm.Q_SHAPING, Algorithm.V_SHAPING):
            cfg = OnlineConfig(episodes=30, algorithm=algorithm)
            run_learner(self.mdp, self.envelope, cfg, stream(1, ONLINE_RUN), on_episode=check)

    def test_counts_stay_consistent(self):
        def check(state, path):
            for step in range(self.mdp.horizon):
                np.testing.assert_array_equal(state.transition_counts[step].sum(axis=2), state.counts[step])
                self.assertEqual(int(state.counts[step].sum()), state.episode)

        for algorithm in Algorithm:
            play(self.mdp, self.envelope, algorithm, 25, seed=4, on_episode=check)

    def test_ucbvi_bonus_is_capped_by_the_remaining_steps(self):
        def check(state, path):
            for step in range(self.mdp.horizon):
                self.assertTrue(np.all(state.bonus[step] <= self.mdp.horizon - step - 1))

        play(self.mdp, None, Algorithm.UCBVI, 40, seed=6, on_episode=check)


class OptimismTests(SimpleTestCase):

    def setUp(self):
        self.mdp = small_mdp(seed=1, horizon=3)
        self.solution = solve_optimal(self.mdp)
        self.envelope = scaled_envelope(self.solution, self.mdp.shape, 0.8, 1.2)

    def test_v_shaping_values_stay_above_the_optimum(self):
        self.assertTrue(sandwich_holds(self.solution, self.envelope))

        def check(state, path):
            for step in range(self.mdp.horizon):
                self.assertTrue(np.all(state.v_hat[step] >= self.solution.values[step] - 1e-9),
                                (state.episode, step))

        for seed in range(3):
            play(self.mdp, self.envelope, Algorithm.V_SHAPING, 40, seed=seed, on_episode=check)

    def test_q_shaping_only_plays_effective_pairs(self):
        allowed = pair_eff(self.solution, self.envelope)
        offsets = self.mdp.shape.offsets

        def check(state, path):
            for step, s, a, _ in path:
                self.assertIn((offsets[step] + s, a), allowed)

        for seed in range(3):
            play(self.mdp, self.envelope, Algorithm.Q_SHAPING, 40, seed=seed, on_episode=check)

    def test_oracle_envelope_acts_optimally_from_the_first_episode(self):
        oracle = oracle_envelope(self.solution, self.mdp.shape)
        first = []

        def check(state, path):
            if state.episode == 0:
                first.append(evaluate_policy(self.mdp, state.policy)[0])

        record = play(self.mdp, oracle, Algorithm.Q_SHAPING, 5, on_episode=check)
        np.testing.assert_allclose(first[0], self.solution.values[0], atol=1e-10)
        self.assertAlmostEqual(record.instantaneous[0], 0.0, places=10)


class OnlineBonusTests(SimpleTestCase):

    def test_fresh_pairs_get_the_next_layer_range(self):
        mdp = small_mdp(seed=4, horizon=3)
        envelope = learned_envelope(mdp, seed=4)
        state = LearnerState.initial(mdp)
        cfg = OnlineConfig(episodes=10)
        for step in range(mdp.horizon):
            bonus = online_bonus_table(step, state, envelope, cfg)
            self.assertTrue(np.all(bonus == envelope.layer_ranges[step + 1]))

    def test_upper_bonus_span_comes_from_high_v(self):
        mdp = small_mdp(seed=4, horizon=3)
        envelope = learned_envelope(mdp, seed=4)
        state = LearnerState.initial(mdp)
        cfg = OnlineConfig(episodes=10, algorithm=Algorithm.UPPER_BONUS)
        bonus = online_bonus_table(0, state, envelope, cfg)
        self.assertTrue(np.all(bonus == max(envelope.high_v[1].max(), 0.0)))

    def test_constant_envelope_closed_form(self):
        mdp = small_mdp(seed=0, horizon=3)
        shape = mdp.shape
        c, N = 0.5, 10000
        envelope = ValueEnvelope(tuple(np.zeros((n, shape.actions)) for n in shape.layer_sizes),
                                 tuple(np.full((n, shape.actions), c) for n in shape.layer_sizes), shape)
        state = LearnerState.initial(mdp)
        state.counts[0][:] = N
        cfg = OnlineConfig(episodes=100)
        sigma, span = bonus_scales(0, state, envelope, cfg)
        np.testing.assert_allclose(sigma, c / 2, atol=1e-8)
        self.assertEqual(span, c)
        log_term = cfg.log_term(shape)
        expected = c * math.sqrt(log_term / N) + C2 * c * log_term / N
        self.assertLess(expected, c)
        np.testing.assert_allclose(online_bonus_table(0, state, envelope, cfg), expected, atol=1e-8)

    def test_oracle_envelope_gives_the_bernstein_bonus(self):
        mdp = small_mdp(seed=5, horizon=3)
        shape = mdp.shape
        solution = solve_optimal(mdp)
        envelope = oracle_envelope(solution, shape)
        state = LearnerState.initial(mdp)
        data = collect_dataset(mdp, uniform_policy(shape), 20000, stream(5, OFFLINE_DATA))
        for k in range(len(data)):
            local = [s - shape.offsets[step] for step, s in enumerate(data.states[k])] + [0]
            state.record([(step, local[step], int(data.actions[k, step]), local[step + 1])
                          for step in range(shape.horizon)])
        cfg = OnlineConfig(episodes=300, algorithm=Algorithm.Q_SHAPING)
        bonus = online_bonus_table(0, state, envelope, cfg)

        v_next = solution.values[1]
        span = v_next.max() - v_next.min()
        self.assertTrue(np.all(bonus < span))
        log_term = cfg.log_term(shape)
        for s in range(shape.layer_sizes[0]):
            for a in range(shape.actions):
                n = state.counts[0][s, a]
                p = state.empirical[0][s, a]
                std = math.sqrt(p @ (v_next - p @ v_next) ** 2)
                expected = span
                if n >= 2:
                    expected = min(C1 * std * math.sqrt(log_term / n) + C2 * span * log_term / n, span)
                self.assertAlmostEqual(bonus[s, a], expected, places=7)

    def test_log_term_uses_one_episode_when_t_is_zero(self):
        shape = small_mdp().shape
        self.assertEqual(OnlineConfig(episodes=0).log_term(shape), OnlineConfig(episodes=1).log_term(shape))


class QBoundTests(SimpleTestCase):

    def test_bound_combines_both_factors(self):
        bound = compute_q_bound(1000, 3, 9, 3, 0.1, r_max=0.5, d_max=0.2, pair_eff_size=12)
        self.assertAlmostEqual(bound.bound, 0.5 * bound.gamma_r + 0.2 * bound.gamma_d)
        self.assertGreater(bound.gamma_r, 0)
        self.assertGreater(bound.gamma_d, 0)

    def test_bound_grows_with_width_and_episodes(self):
        base = compute_q_bound(1000, 3, 9, 3, 0.1, 0.5, 0.2, 12).bound
        self.assertLess(base, compute_q_bound(1000, 3, 9, 3, 0.1, 0.5, 0.4, 12).bound)
        self.assertLess(base, compute_q_bound(4000, 3, 9, 3, 0.1, 0.5, 0.2, 12).bound)
        self.assertLess(compute_q_bound(1000, 3, 9, 3, 0.1, 0.5, 0.2, 6).bound, base)

    def test_invalid_arguments(self):
        with self.assertRaises(LabError):
            compute_q_bound(0, 3, 9, 3, 0.1, 0.5, 0.2, 12)
        with self.assertRaises(LabError):
            compute_q_bound(100, 3, 9, 3, 0.1, 0.5, 0.2, 28)


class ShapingBenefitTests(SimpleTestCase):

    @tag('slow')
    def test_tight_envelope_beats_ucbvi(self):
        mdp = small_mdp(seed=11, horizon=3)
        envelope = oracle_envelope(solve_optimal(mdp), mdp.shape)
        shaped = sum(play(mdp, envelope, Algorithm.Q_SHAPING, 300, seed).final_regret
                     for seed in range(3))
        baseline = sum(play(mdp, None, Algorithm.UCBVI, 300, seed).final_regret for seed in range(3))
        self.assertLess(shaped, baseline)
