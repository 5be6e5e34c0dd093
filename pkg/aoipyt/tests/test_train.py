from aoipyt.config import parse_config
from aoipyt.env import AoIEnv, EnvConfig, RateModel
from aoipyt.errors import ConfigurationError, UsageError
from aoipyt.metrics import evaluate_policy
from aoipyt.net import NetArch, NetParams, Gradients, init_params, forward, backward, _unpack
from aoipyt.policy import LearnedPolicy, MODE_SAMPLE
from aoipyt.train import (TrainConfig, Transition, GlobalParams, advantage, entropy_weight, collect_rollout,
                          compute_update, apply_update, train, AdvantageNormalizer, default_reward_scale)
from dataclasses import replace
import numpy as np
import threading
import unittest

ARCH = NetArch(n_sensors=2, history_len=6, conv_filters=4, conv_kernel=3, hidden_units=16)
ENV = EnvConfig.from_lists([10, 20], [20, 40], [1000, 500], success_prob=0.8,
                           rate_model=RateModel.uniform(5, 15), history_len=6, horizon=50)
FAST = TrainConfig(n_workers=1, episodes=3, episode_len=30, update_period=10, reward_scale=0.01,
                   max_grad_norm=5.0, seed=7)


class AdvantageTest(unittest.TestCase):

    def test_advantage(self):
        err_msg = "Wrong one-step TD advantage"
        np.testing.assert_allclose(advantage(-5, -100, -90, 0.99, False), -14.0, rtol=1e-12, err_msg=err_msg)
        for next_value in (-1e6, 0.0, 42.0):
            assert advantage(-5, next_value, -5, 0.7, True) == 0.0, err_msg
        assert advantage(0, 3.25, 3.25, 1.0, False) == 0.0, err_msg

    def test_entropy_weight(self):
        err_msg = "Wrong entropy schedule"
        config = TrainConfig(episodes=10, episode_len=100)
        assert entropy_weight(0, config) == 5.0, err_msg
        assert entropy_weight(1000, config) == 0.0, err_msg
        assert entropy_weight(500, config) == 2.5, err_msg
        assert entropy_weight(5000, config) == 0.0, err_msg
        weights = [entropy_weight(s, config) for s in range(0, 1200, 7)]
        assert all(a >= b for a, b in zip(weights, weights[1:])), err_msg
        assert entropy_weight(50, replace(config, entropy_decay_steps=100)) == 2.5, err_msg
        with self.assertRaises(UsageError):
            entropy_weight(-1, config)

    def test_config_validation(self):
        err_msg = "Invalid training configuration accepted"
        for changes, key in (({'discount': 1.5}, 'train.discount'), ({'actor_lr': -0.1}, 'train.actor_lr'),
                             ({'n_workers': 0}, 'train.n_workers'), ({'update_period': 0}, 'train.update_period'),
                             ({'reward_scale': 0.0}, 'train.reward_scale'),
                             ({'max_grad_norm': 0.0}, 'train.max_grad_norm'), ({'seed': -1}, 'train.seed')):
            with self.assertRaises(ConfigurationError, msg=err_msg) as cm:
                replace(FAST, **changes).validate()
            assert cm.exception.key == key, err_msg
        replace(FAST, actor_lr=0.0, critic_lr=0.0).validate()


class AdvantageNormalizerTest(unittest.TestCase):

    def test_scale(self):
        err_msg = "Wrong running advantage scale"
        normalizer = AdvantageNormalizer()
        assert normalizer.scale == 1.0 and normalizer.normalize(0.25) == 0.25, err_msg
        np.testing.assert_allclose(normalizer.update([2.0]), 2.0, rtol=1e-12, err_msg=err_msg)
        np.testing.assert_allclose(normalizer.normalize(1.0), 0.5, rtol=1e-12, err_msg=err_msg)
        normalizer = AdvantageNormalizer(decay=0.9)
        normalizer.update([3.0, -3.0] * 50)
        np.testing.assert_allclose(normalizer.scale, 3.0, rtol=1e-12, err_msg=err_msg)

    def test_clip(self):
        err_msg = "Normalized advantages must be clipped"
        normalizer = AdvantageNormalizer(clip=5.0)
        normalizer.update([0.01])
        assert normalizer.normalize(100.0) == 5.0 and normalizer.normalize(-100.0) == -5.0, err_msg
        normalizer = AdvantageNormalizer(floor=1e-6)
        normalizer.update([0.0] * 10)
        assert normalizer.scale == 1e-6, err_msg

    def test_default_reward_scale(self):
        err_msg = "Wrong scenario-derived reward scale"
        config = TrainConfig(discount=0.99, episode_len=50)
        np.testing.assert_allclose(default_reward_scale(ENV, config), 1 / (2 * 40 * 50), rtol=1e-12, err_msg=err_msg)
        np.testing.assert_allclose(default_reward_scale(ENV, replace(config, episode_len=1000)), 1 / (2 * 40 * 100),
                                   rtol=1e-12, err_msg=err_msg)
        np.testing.assert_allclose(default_reward_scale(ENV, replace(config, discount=1.0)), 1 / (2 * 40 * 50),
                                   rtol=1e-12, err_msg=err_msg)


class RolloutTest(unittest.TestCase):
    def setUp(self):
        """Call before every test case."""
        self.params = init_params(ARCH, seed=1)

    def test_empty_rollout(self):
        env = AoIEnv(ENV, seed=0)
        assert collect_rollout(env, self.params, 0, np.random.default_rng(0)) == []
        with self.assertRaises(UsageError):
            compute_update([], self.params, FAST)

    def test_one_hot_policy(self):
        err_msg = "Deterministic policy must repeat its action"
        theta = self.params.theta.copy()
        views = _unpack(ARCH, theta)
        views['policy_w'][...] = 0.0
        views['policy_b'][...] = [0.0, 1000.0]
        params = NetParams(ARCH, theta)
        rollout = collect_rollout(AoIEnv(ENV, seed=0), params, 20, np.random.default_rng(0))
        assert len(rollout) == 20, err_msg
        assert all(t.action == 1 for t in rollout), err_msg

    def test_rollout_contents(self):
        err_msg = "Wrong rollout"
        runs = []
        for _ in range(2):
            env = AoIEnv(ENV, seed=3)
            runs.append(collect_rollout(env, self.params, 15, np.random.default_rng(4)))
        assert [t.action for t in runs[0]] == [t.action for t in runs[1]], err_msg
        assert [t.reward for t in runs[0]] == [t.reward for t in runs[1]], err_msg
        for t in runs[0]:
            assert t.value == forward(self.params, t.obs).value, err_msg
            assert t.next_value == forward(self.params, t.next_obs).value, err_msg
        for a, b in zip(runs[0], runs[0][1:]):
            np.testing.assert_array_equal(a.next_obs, b.obs, err_msg=err_msg)

    def test_rollout_stops_at_done(self):
        err_msg = "Rollout must end with the episode"
        env = AoIEnv(replace(ENV, horizon=5), seed=0)
        rollout = collect_rollout(env, self.params, 10, np.random.default_rng(0))
        assert len(rollout) == 5 and rollout[-1].done, err_msg
        assert not any(t.done for t in rollout[:-1]), err_msg
        assert collect_rollout(env, self.params, 10, np.random.default_rng(0)) == [], err_msg


class UpdateTest(unittest.TestCase):
    def setUp(self):
        """Call before every test case."""
        self.params = init_params(ARCH, seed=2)
        env = AoIEnv(ENV, seed=5)
        self.rollout = collect_rollout(env, self.params, 2, np.random.default_rng(6))
        self.config = replace(FAST, max_grad_norm=None, reward_scale=1.0)

    def per_step(self, transition, rho):
        d = advantage(transition.reward, transition.next_value, transition.value, self.config.discount,
                      transition.done)
        return backward(self.params, forward(self.params, transition.obs), transition.action, d, d, rho)

    def test_single_and_sum(self):
        err_msg = "Update must be the sum of per-step gradients"
        rho = entropy_weight(0, self.config)
        single = compute_update(self.rollout[:1], self.params, self.config)
        expected = self.per_step(self.rollout[0], rho)
        np.testing.assert_allclose(single.actor, expected.actor, rtol=1e-12, atol=1e-15, err_msg=err_msg)
        np.testing.assert_allclose(single.critic, expected.critic, rtol=1e-12, atol=1e-15, err_msg=err_msg)
        both = compute_update(self.rollout, self.params, self.config)
        expected = self.per_step(self.rollout[0], rho) + self.per_step(self.rollout[1], rho)
        np.testing.assert_allclose(both.actor, expected.actor, rtol=1e-12, atol=1e-12, err_msg=err_msg)
        np.testing.assert_allclose(both.critic, expected.critic, rtol=1e-12, atol=1e-12, err_msg=err_msg)

    def test_zero_advantage(self):
        err_msg = "Zero advantages without entropy must give a zero actor gradient"
        obs = np.zeros(ARCH.obs_size)
        value = forward(self.params, obs).value
        transitions = [Transition(obs=obs, action=a, reward=value, next_obs=obs, value=value,
                                  next_value=123.0, done=True) for a in (0, 1)]
        grads = compute_update(transitions, self.params, replace(self.config, entropy_start=0.0))
        np.testing.assert_array_equal(grads.actor, 0.0, err_msg=err_msg)
        np.testing.assert_array_equal(grads.critic, 0.0, err_msg=err_msg)

    def test_apply_update(self):
        err_msg = "Wrong parameter update"
        shared = GlobalParams(self.params)
        version = apply_update(shared, Gradients.zeros(ARCH), self.config)
        params, current = shared.snapshot()
        assert version == 1 and current == 1, err_msg
        np.testing.assert_array_equal(params.theta, self.params.theta, err_msg=err_msg)

        actor = np.zeros(ARCH.n_params)
        actor[0] = 2.0
        apply_update(shared, Gradients(actor, np.zeros(ARCH.n_params)), self.config)
        params, _ = shared.snapshot()
        np.testing.assert_allclose(params.theta[0], self.params.theta[0] + 0.02, rtol=1e-12, err_msg=err_msg)
        np.testing.assert_array_equal(params.theta[1:], self.params.theta[1:], err_msg=err_msg)

        bad = Gradients(np.full(ARCH.n_params, np.inf), np.zeros(ARCH.n_params))
        with self.assertWarns(UserWarning):
            assert apply_update(shared, bad, self.config) is None, err_msg
        assert shared.version == 2, err_msg
        assert shared.snapshot()[0].is_finite(), err_msg

    def test_normalized_actor_advantage(self):
        err_msg = "Actor must see normalized advantages and the critic raw TD errors"
        rho = entropy_weight(0, self.config)
        normalizer = AdvantageNormalizer()
        grads = compute_update(self.rollout, self.params, self.config, normalizer=normalizer)
        deltas = [advantage(t.reward, t.next_value, t.value, self.config.discount, t.done) for t in self.rollout]
        reference = AdvantageNormalizer()
        reference.update(deltas)
        assert normalizer.scale == reference.scale and normalizer.scale != 1.0, err_msg
        expected = Gradients.zeros(ARCH)
        for t, d in zip(self.rollout, deltas):
            expected = expected + backward(self.params, forward(self.params, t.obs), t.action,
                                           reference.normalize(d), d, rho)
        np.testing.assert_allclose(grads.actor, expected.actor, rtol=1e-12, atol=1e-12, err_msg=err_msg)
        np.testing.assert_allclose(grads.critic, expected.critic, rtol=1e-12, atol=1e-12, err_msg=err_msg)
        plain = compute_update(self.rollout, self.params, self.config)
        np.testing.assert_allclose(grads.critic, plain.critic, rtol=1e-12, atol=1e-12, err_msg=err_msg)

    def test_overflowing_update(self):
        err_msg = "An update that overflows the parameters must be dropped"
        shared = GlobalParams(self.params)
        huge = Gradients(np.full(ARCH.n_params, 1e308), np.full(ARCH.n_params, 1e308))
        assert huge.is_finite(), err_msg
        with self.assertWarns(UserWarning):
            version = apply_update(shared, huge, replace(self.config, actor_lr=1.0, critic_lr=1.0))
        assert version is None and shared.version == 0, err_msg
        np.testing.assert_array_equal(shared.snapshot()[0].theta, self.params.theta, err_msg=err_msg)

    def test_concurrent_commits(self):
        err_msg = "Concurrent commits lost an update"
        config = replace(self.config, actor_lr=0.5, critic_lr=0.25)
        shared = GlobalParams(self.params)
        grads = Gradients(np.ones(ARCH.n_params), np.ones(ARCH.n_params))
        start = threading.Barrier(2)

        def commit():
            start.wait()
            for _ in range(100):
                apply_update(shared, grads, config)

        threads = [threading.Thread(target=commit) for _ in range(2)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        theta = self.params.theta
        for _ in range(200):
            theta = theta + 0.5 * grads.actor + 0.25 * grads.critic
        params, version = shared.snapshot()
        assert version == 200, err_msg
        np.testing.assert_array_equal(params.theta, theta, err_msg=err_msg)


class TrainTest(unittest.TestCase):

    def test_minimal_loop(self):
        err_msg = "One task with one worker must commit exactly one update"
        model, stats = train(ENV, ARCH, TrainConfig(n_workers=1, episodes=1, episode_len=1))
        assert model.version == 1, err_msg
        assert len(stats.records) == 1 and stats.records[0].steps == 1, err_msg

    def test_single_worker_determinism(self):
        err_msg = "Single-worker training is not reproducible"
        first, stats = train(ENV, ARCH, FAST)
        second, _ = train(ENV, ARCH, FAST)
        np.testing.assert_array_equal(first.params.theta, second.params.theta, err_msg=err_msg)
        assert first.version == second.version == 9, err_msg
        frame = stats.to_frame()
        assert list(frame.episode) == [0, 1, 2], err_msg
        assert frame.entropy_weight.iloc[0] == 5.0, err_msg
        assert np.all(np.isfinite(frame.objective)), err_msg
        third, _ = train(ENV, ARCH, replace(FAST, seed=8))
        assert not np.array_equal(first.params.theta, third.params.theta), err_msg

    def test_zero_learning_rates(self):
        err_msg = "Parameters changed with zero learning rates"
        model, _ = train(ENV, ARCH, replace(FAST, actor_lr=0.0, critic_lr=0.0, episodes=4))
        np.testing.assert_array_equal(model.params.theta, init_params(ARCH, FAST.seed).theta, err_msg=err_msg)
        assert model.version == 12, err_msg

    def test_multiple_workers(self):
        err_msg = "Wrong multi-worker training"
        model, stats = train(ENV, ARCH, replace(FAST, n_workers=3, episodes=6))
        assert model.version == 18, err_msg
        assert sorted(r.episode for r in stats.records) == list(range(6)), err_msg
        assert {r.worker for r in stats.records} == {0, 1, 2}, err_msg
        assert model.params.is_finite(), err_msg
        probs = forward(model.params, np.zeros(ARCH.obs_size)).probs
        assert np.all(probs > 0), err_msg

    def test_reward_scale_resolution(self):
        err_msg = "An unset reward scale must be derived from the scenario"
        model, _ = train(ENV, ARCH, replace(FAST, reward_scale=None, episodes=1))
        assert model.config.reward_scale == default_reward_scale(ENV, FAST), err_msg
        model, _ = train(ENV, ARCH, replace(FAST, episodes=1))
        assert model.config.reward_scale == 0.01, err_msg

    def test_abort(self):
        err_msg = "Abort must stop at an episode boundary"
        stop = threading.Event()
        stop.set()
        model, stats = train(ENV, ARCH, FAST, stop_event=stop)
        assert stats.aborted and stats.records == [] and model.version == 0, err_msg

    def test_mismatched_arch(self):
        with self.assertRaises(ConfigurationError):
            train(ENV, replace(ARCH, n_sensors=3), FAST)


class LearningTest(unittest.TestCase):
    def setUp(self):
        """Call before every test case."""
        self.config = parse_config('two_sensors.cfg')
        self.train_config = replace(self.config.train, n_workers=1, episodes=500, episode_len=50)

    def evaluate(self, params):
        return evaluate_policy(LearnedPolicy(params, MODE_SAMPLE), self.config.env, episodes=5, horizon=200,
                               seed=100).objective

    def test_beats_initial_policy(self):
        err_msg = "Training did not improve on the initial random policy"
        for seed in range(5):
            model, stats = train(self.config.env, self.config.arch, replace(self.train_config, seed=seed))
            assert stats.rejected_updates == 0 and model.params.is_finite(), err_msg
            initial = self.evaluate(init_params(self.config.arch, seed))
            trained = self.evaluate(model.params)
            assert trained < initial, f'{err_msg} (seed {seed}: {trained:.4f} >= {initial:.4f})'


if __name__ == "__main__":
    unittest.main()  # run all tests
