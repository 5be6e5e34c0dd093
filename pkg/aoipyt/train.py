# -*- coding: utf-8 -*-
"""
   Asynchronous advantage actor-critic training.

   n_workers workers each own an environment and a parameter snapshot and
   loop collect_rollout -> compute_update -> apply_update -> refresh
   snapshot. The only shared object is GlobalParams, which offers an
   atomic snapshot read and an atomic gradient commit.

   Advantage (one-step TD):  D = c R + gamma V(s') (1 - done) - V(s)
   Actor:   theta   += alpha   * sum_i [grad log pi(s_i, a_i) D_i / sigma + rho grad H(pi(s_i, .))]
   Critic:  theta_v += alpha_v * sum_i 2 D_i grad V(s_i)   (descent on D_i^2)

   c is the reward scale (``reward_scale``, derived from the scenario when
   unset) and sigma the running RMS of D kept by each worker's
   AdvantageNormalizer (1 when ``normalize_advantage`` is off).
"""
from dataclasses import dataclass, field, replace
import threading
import warnings
import logging
import json

import numpy as np
import pandas as pd

from aoipyt.env import AoIEnv, TRAIN_STREAMS, episode_seeds
from aoipyt.errors import ConfigurationError, UsageError, DimensionError
from aoipyt.metrics import Trace, objective
from aoipyt.net import Gradients, NetParams, init_params, forward, backward
from aoipyt.policy import sample_categorical

logger = logging.getLogger(__name__)
progress_logger = logging.getLogger('aoipyt.train.progress')


@dataclass(frozen=True)
class TrainConfig:
    actor_lr: float = 0.01
    critic_lr: float = 0.01
    discount: float = 0.99
    entropy_start: float = 5.0
    entropy_decay_steps: int = None
    n_workers: int = 4
    episodes: int = 100
    episode_len: int = 1000
    update_period: int = None
    seed: int = 0
    max_grad_norm: float = None
    reward_scale: float = None
    normalize_advantage: bool = True

    def validate(self):
        if not 0 <= self.discount <= 1:
            raise ConfigurationError('train.discount', f'must lie in [0, 1], got {self.discount}')
        # zero rates are accepted: they freeze the parameters
        for key in ('actor_lr', 'critic_lr', 'entropy_start'):
            if getattr(self, key) < 0:
                raise ConfigurationError(f'train.{key}', f'must be >= 0, got {getattr(self, key)}')
        for key in ('n_workers', 'episodes', 'episode_len'):
            if getattr(self, key) < 1:
                raise ConfigurationError(f'train.{key}', f'must be >= 1, got {getattr(self, key)}')
        if self.update_period is not None and self.update_period < 1:
            raise ConfigurationError('train.update_period', f'must be >= 1, got {self.update_period}')
        if self.entropy_decay_steps is not None and self.entropy_decay_steps < 1:
            raise ConfigurationError('train.entropy_decay_steps', f'must be >= 1, got {self.entropy_decay_steps}')
        if self.max_grad_norm is not None and not self.max_grad_norm > 0:
            raise ConfigurationError('train.max_grad_norm', f'must be > 0, got {self.max_grad_norm}')
        if self.reward_scale is not None and not self.reward_scale > 0:
            raise ConfigurationError('train.reward_scale', f'must be > 0, got {self.reward_scale}')
        if self.seed < 0:
            raise ConfigurationError('train.seed', f'must be >= 0, got {self.seed}')
        return self

    @property
    def total_steps(self):
        return self.episodes * self.episode_len

    @property
    def decay_steps(self):
        return self.entropy_decay_steps or self.total_steps

    @property
    def period(self):
        return self.update_period or self.episode_len


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    value: float
    next_value: float
    done: bool
    ages: np.ndarray = None
    cached: object = None


class GlobalParams:
    """ Authoritative parameters plus an update counter.

    ``snapshot`` returns a committed (params, version) pair; ``apply``
    commits under a lock, so concurrent commits are serialized and none
    is lost. A step whose result is not finite is dropped: ``apply``
    returns None and the parameters and version stay as they were.
    """

    def __init__(self, params):
        self._params = params.copy()
        self._version = 0
        self._lock = threading.Lock()

    @property
    def version(self):
        with self._lock:
            return self._version

    def snapshot(self):
        with self._lock:
            return self._params, self._version

    def apply(self, grads, actor_lr, critic_lr):
        with self._lock:
            with np.errstate(over='ignore', invalid='ignore'):
                theta = self._params.theta + actor_lr * grads.actor + critic_lr * grads.critic
            if not np.all(np.isfinite(theta)):
                return None
            self._params = NetParams(self._params.arch, theta)
            self._version += 1
            return self._version


@dataclass
class TrainedModel:
    params: NetParams
    version: int
    config: TrainConfig


@dataclass
class EpisodeRecord:
    episode: int
    worker: int
    mean_reward: float
    entropy_weight: float
    objective: float
    version: int
    steps: int


@dataclass
class TrainingStats:
    records: list = field(default_factory=list)
    aborted: bool = False
    rejected_updates: int = 0

    def to_frame(self):
        """Per-episode curves ordered by episode index."""
        frame = pd.DataFrame([vars(r) for r in self.records],
                             columns=['episode', 'worker', 'mean_reward', 'entropy_weight',
                                      'objective', 'version', 'steps'])
        return frame.sort_values('episode').reset_index(drop=True)


def advantage(reward, next_value, value, discount, done):
    return reward + discount * next_value * (1.0 - float(done)) - value


def default_reward_scale(env_config, config):
    """ 1 / (N * max(beta) * H) with H = min(1 / (1 - gamma), episode_len).

    A task that leaves every age at the largest AoI threshold then earns a
    scaled reward of -1 / H, and the discounted values of policies that
    keep the ages near their thresholds lie around [-1, 0].

    :param env_config: scenario
    :type env_config: EnvConfig
    :param config: training settings
    :type config: TrainConfig
    :rtype: float
    """
    horizon = float(config.episode_len)
    if config.discount < 1:
        horizon = min(1.0 / (1.0 - config.discount), horizon)
    return 1.0 / (env_config.n_sensors * float(np.max(env_config.thresholds)) * horizon)


class AdvantageNormalizer:
    """ Exponential moving RMS of the TD error, bias-corrected for its
    zero start.

    ``normalize`` divides an advantage by the current RMS and clips the
    result to ``[-clip, clip]``; the actor then sees unit-scale advantages,
    the scale in which the entropy weight is expressed.
    """

    def __init__(self, decay=0.999, clip=5.0, floor=1e-12):
        self.decay = decay
        self.clip = clip
        self.floor = floor
        self._mean_square = 0.0
        self._weight = 0.0

    @property
    def scale(self):
        if self._weight == 0.0:
            return 1.0
        return max(float(np.sqrt(self._mean_square / self._weight)), self.floor)

    def update(self, deltas):
        for d in deltas:
            self._mean_square = self.decay * self._mean_square + (1.0 - self.decay) * d * d
            self._weight = self.decay * self._weight + (1.0 - self.decay)
        return self.scale

    def normalize(self, value):
        return float(np.clip(value / self.scale, -self.clip, self.clip))


def entropy_weight(step, config):
    """ Linear decay from ``entropy_start`` to exactly 0 after
    ``config.decay_steps`` environment steps; clamped at 0 afterwards.

    Example:

    >>> entropy_weight(0, TrainConfig())
    5.0
    """
    if step < 0:
        raise UsageError(f'step must be >= 0, got {step}')
    remaining = 1.0 - step / config.decay_steps
    return config.entropy_start * max(0.0, remaining)


def collect_rollout(worker_env, local_params, length, rng):
    """ Up to ``length`` transitions with actions sampled from pi(s, .);
    stops early at the end of the episode.

    :rtype: list of Transition
    """
    rollout = []
    if length <= 0 or worker_env.done:
        return rollout
    obs = worker_env.build_observation()
    out = forward(local_params, obs)
    for _ in range(length):
        action = sample_categorical(out.probs, rng)
        step = worker_env.step(action)
        next_out = forward(local_params, step.observation)
        rollout.append(Transition(obs=obs, action=action, reward=step.reward,
                                  next_obs=step.observation, value=out.value,
                                  next_value=next_out.value, done=step.done,
                                  ages=step.ages, cached=out))
        if step.done:
            break
        obs, out = step.observation, next_out
    return rollout


def compute_update(rollout, local_params, config, step=0, normalizer=None):
    """ Sums per-transition actor and critic gradients over a rollout.

    The entropy weight is the one at ``step`` (the global step index of the
    first transition). Rewards are multiplied by ``config.reward_scale``
    (1 when unset). With a ``normalizer`` the rollout's TD errors first
    update it and the actor receives the normalized advantages; the critic
    always receives the raw TD errors. An optional max-norm clip is applied
    to each summed direction.

    :param normalizer: running advantage scale of the calling worker
    :type normalizer: AdvantageNormalizer, optional
    :rtype: Gradients
    """
    if not rollout:
        raise UsageError('cannot compute an update from an empty rollout')
    rho = entropy_weight(step, config)
    scale = 1.0 if config.reward_scale is None else config.reward_scale
    deltas = [advantage(scale * t.reward, t.next_value, t.value, config.discount, t.done) for t in rollout]
    if normalizer is not None:
        normalizer.update(deltas)
    grads = Gradients.zeros(local_params.arch)
    for transition, d in zip(rollout, deltas):
        cached = transition.cached
        if cached is None or cached.params is not local_params:
            cached = forward(local_params, transition.obs)
        actor_d = d if normalizer is None else normalizer.normalize(d)
        grads = grads + backward(local_params, cached, transition.action, actor_d, d, rho)
    if config.max_grad_norm is not None:
        grads = grads.clipped(config.max_grad_norm)
    return grads


def apply_update(global_params, grads, config):
    """ theta += actor_lr * actor; theta += critic_lr * critic; atomic commit.

    Non-finite gradients, and finite gradients whose step would overflow
    the parameters, are rejected with a warning; nothing is committed and
    None is returned.

    :rtype: int
    """
    if not grads.is_finite():
        msg = 'Rejected update with non-finite gradients.'
        warnings.warn(msg)
        logger.warning(msg)
        return None
    params, _ = global_params.snapshot()
    if grads.actor.shape != params.theta.shape or grads.critic.shape != params.theta.shape:
        raise DimensionError(f'gradient shape {grads.actor.shape} does not match parameters {params.theta.shape}')
    version = global_params.apply(grads, config.actor_lr, config.critic_lr)
    if version is None:
        msg = 'Rejected update that would make the parameters non-finite.'
        warnings.warn(msg)
        logger.warning(msg)
    return version


class _Worker:

    def __init__(self, worker_id, global_params, env_config, config, stats, lock, stop_event):
        self.worker_id = worker_id
        self.global_params = global_params
        self.env_config = env_config
        self.env = AoIEnv(replace(env_config, horizon=config.episode_len))
        self.config = config
        self.stats = stats
        self.lock = lock
        self.stop_event = stop_event
        self.normalizer = AdvantageNormalizer() if config.normalize_advantage else None
        self.error = None

    def run(self):
        try:
            cfg = self.config
            for episode in range(self.worker_id, cfg.episodes, cfg.n_workers):
                if self.stop_event is not None and self.stop_event.is_set():
                    with self.lock:
                        self.stats.aborted = True
                    break
                self.run_episode(episode)
        except Exception as e:
            self.error = e
            logger.exception(f'Worker {self.worker_id} failed.')

    def run_episode(self, episode):
        cfg = self.config
        env_seed, policy_seed = episode_seeds(cfg.seed, episode, TRAIN_STREAMS)
        self.env.reset(seed=env_seed)
        rng = np.random.default_rng(policy_seed)
        step = episode * cfg.episode_len
        first_step = step
        local, version = self.global_params.snapshot()
        rewards, ages = [], []
        rejected = 0
        while not self.env.done:
            rollout = collect_rollout(self.env, local, cfg.period, rng)
            grads = compute_update(rollout, local, cfg, step, self.normalizer)
            committed = apply_update(self.global_params, grads, cfg)
            if committed is None:
                rejected += 1
            local, version = self.global_params.snapshot()
            step += len(rollout)
            rewards.extend(t.reward for t in rollout)
            ages.extend(t.ages for t in rollout)

        trace = Trace.from_ages(np.array(ages))
        record = EpisodeRecord(episode=episode, worker=self.worker_id,
                               mean_reward=float(np.mean(rewards)),
                               entropy_weight=entropy_weight(first_step, cfg),
                               objective=objective(trace, self.env_config),
                               version=version, steps=len(rewards))
        with self.lock:
            self.stats.records.append(record)
            self.stats.rejected_updates += rejected
        progress_logger.info(json.dumps(vars(record), sort_keys=True))


def train(env_config, arch, train_config, stop_event=None):
    """ Trains the scheduler.

    With ``n_workers == 1`` the single worker runs in the calling thread and
    training is fully deterministic given ``train_config.seed``. Setting
    ``stop_event`` stops every worker at its next episode boundary.

    :param env_config: scenario
    :type env_config: EnvConfig
    :param arch: network architecture
    :type arch: NetArch
    :param train_config: training settings
    :type train_config: TrainConfig
    :param stop_event: abort flag checked between episodes
    :type stop_event: threading.Event, optional
    :return: (TrainedModel, TrainingStats)
    :rtype: tuple
    """
    env_config.validate()
    arch.validate()
    train_config.validate()
    if (arch.n_sensors, arch.history_len) != (env_config.n_sensors, env_config.history_len):
        raise ConfigurationError('arch.n_sensors', f'network built for {arch.n_sensors} sensors / history '
                                                   f'{arch.history_len}, scenario has {env_config.n_sensors} / '
                                                   f'{env_config.history_len}')
    if train_config.reward_scale is None:
        train_config = replace(train_config, reward_scale=default_reward_scale(env_config, train_config))
        logger.info(f'Reward scale derived from the scenario: {train_config.reward_scale:.6g}.')

    global_params = GlobalParams(init_params(arch, train_config.seed))
    stats = TrainingStats()
    lock = threading.Lock()
    workers = [_Worker(w, global_params, env_config, train_config, stats, lock, stop_event)
               for w in range(min(train_config.n_workers, train_config.episodes))]
    logger.info(f'Training with {len(workers)} worker(s), {train_config.episodes} episodes '
                f'of {train_config.episode_len} tasks.')

    if len(workers) == 1:
        workers[0].run()
    else:
        threads = [threading.Thread(target=w.run, name=f'aoipyt-worker-{w.worker_id}') for w in workers]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()

    for worker in workers:
        if worker.error is not None:
            raise worker.error
    stats.records.sort(key=lambda r: r.episode)

    params, version = global_params.snapshot()
    return TrainedModel(params=params, version=version, config=train_config), stats
