# -*- coding: utf-8 -*-
"""
   Task-indexed environment of the N-sensor remote-monitoring network.

   In every task the controller selects exactly one sensor. The sensor
   samples fresh data (generate-at-will) and transmits it over a lossy
   link until the controller receives it; each attempt succeeds with
   probability p and is sent at a rate drawn from a RateModel.

   Age recursion for a task that selects sensor m with duration d:

       A_m(i+1) = d
       A_n(i+1) = A_n(i) + d            for n != m

   Reward of the task, evaluated on the updated ages:

       R_i = -sum_n A_n(i+1) - sum_n delta_n * 1{A_n(i+1) > beta_n}

   Units: milliseconds for ages and durations, bytes for packet
   lengths, bytes/ms for rates.

   Observation layout (length N + 1 + j):

       [ages / max(beta) (N values),
        last_tx_time / max(beta) (1 value),
        throughput history / rate_model.mean (j values, oldest first)]
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from aoipyt.errors import ConfigurationError, DomainError, ActionError, LifecycleError

logger = logging.getLogger(__name__)

RATE_CONSTANT = 'constant'
RATE_UNIFORM = 'uniform'
RATE_KINDS = (RATE_CONSTANT, RATE_UNIFORM)

TRAIN_STREAMS = 0
EVAL_STREAMS = 1


@dataclass(frozen=True)
class SensorSpec:
    """Packet length L_n (bytes), AoI threshold beta_n (ms), penalty weight delta_n."""
    packet_len: float
    aoi_threshold: float
    penalty_weight: float

    def validate(self, key='sensor'):
        if not self.packet_len > 0:
            raise ConfigurationError(f'{key}.packet_len', f'must be > 0, got {self.packet_len}')
        if not self.aoi_threshold > 0:
            raise ConfigurationError(f'{key}.aoi_threshold', f'must be > 0, got {self.aoi_threshold}')
        if not self.penalty_weight >= 0:
            raise ConfigurationError(f'{key}.penalty_weight', f'must be >= 0, got {self.penalty_weight}')


@dataclass(frozen=True)
class RateModel:
    """Per-attempt transmission rate lambda_k(i) in bytes/ms.

    ``constant`` always returns ``rate`` and does not consume the RNG;
    ``uniform`` draws independently from ``[low, high)`` for every attempt.
    """
    kind: str = RATE_CONSTANT
    rate: float = 10.0
    low: float = None
    high: float = None

    @classmethod
    def constant(cls, rate=10.0):
        return cls(kind=RATE_CONSTANT, rate=float(rate))

    @classmethod
    def uniform(cls, low, high):
        return cls(kind=RATE_UNIFORM, rate=None, low=float(low), high=float(high))

    def validate(self, key='rate'):
        if self.kind == RATE_CONSTANT:
            if self.rate is None or not self.rate > 0:
                raise ConfigurationError(f'{key}.rate', f'must be > 0, got {self.rate}')
        elif self.kind == RATE_UNIFORM:
            if self.low is None or self.high is None:
                raise ConfigurationError(f'{key}.low', 'uniform rate model needs low and high')
            if not 0 < self.low <= self.high:
                raise ConfigurationError(f'{key}.low', f'need 0 < low <= high, got {self.low}, {self.high}')
        else:
            raise ConfigurationError(f'{key}.kind', f'unknown rate model {self.kind!r}; use one of {RATE_KINDS}')

    @property
    def mean(self):
        if self.kind == RATE_CONSTANT:
            return self.rate
        return 0.5 * (self.low + self.high)

    def sample(self, rng, size):
        if self.kind == RATE_CONSTANT:
            return np.full(size, self.rate, dtype=float)
        return rng.uniform(self.low, self.high, size=size)


@dataclass(frozen=True)
class EnvConfig:
    sensors: tuple
    success_prob: float = 0.9
    rate_model: RateModel = field(default_factory=RateModel)
    horizon: int = 1000
    rng_seed: int = 0
    history_len: int = 10

    def __post_init__(self):
        object.__setattr__(self, 'sensors', tuple(self.sensors))

    @classmethod
    def from_lists(cls, packet_len, aoi_threshold, penalty_weight, **kwargs):
        """Builds a config from three per-sensor lists of equal length."""
        if not len(packet_len) == len(aoi_threshold) == len(penalty_weight):
            raise ConfigurationError('env.sensors', 'packet_len, aoi_threshold and penalty_weight '
                                                    'must have the same length')
        sensors = tuple(SensorSpec(float(L), float(b), float(d))
                        for L, b, d in zip(packet_len, aoi_threshold, penalty_weight))
        return cls(sensors=sensors, **kwargs)

    def validate(self):
        if len(self.sensors) < 2:
            raise ConfigurationError('env.sensors', f'need at least 2 sensors, got {len(self.sensors)}')
        for n, sensor in enumerate(self.sensors):
            sensor.validate(key=f'env.sensors[{n}]')
        if not 0 < self.success_prob <= 1:
            raise ConfigurationError('env.success_prob', f'must lie in (0, 1], got {self.success_prob}')
        self.rate_model.validate(key='rate')
        if int(self.horizon) < 1:
            raise ConfigurationError('env.horizon', f'must be >= 1, got {self.horizon}')
        if int(self.history_len) < 1:
            raise ConfigurationError('env.history_len', f'must be >= 1, got {self.history_len}')
        return self

    @property
    def n_sensors(self):
        return len(self.sensors)

    @property
    def packet_lens(self):
        return np.array([s.packet_len for s in self.sensors], dtype=float)

    @property
    def thresholds(self):
        return np.array([s.aoi_threshold for s in self.sensors], dtype=float)

    @property
    def penalty_weights(self):
        return np.array([s.penalty_weight for s in self.sensors], dtype=float)

    @property
    def observation_size(self):
        return self.n_sensors + 1 + int(self.history_len)


def reference_sensors(n_sensors=10):
    """Sensor grid of the reference scenario: L_n = 10(n+1) B, beta_n = 20(n+1) ms,
    delta_n = 1000 (N - n) / N."""
    return tuple(SensorSpec(10.0 * (n + 1), 20.0 * (n + 1), 1000.0 * (n_sensors - n) / n_sensors)
                 for n in range(n_sensors))


def episode_seeds(seed, episode, streams):
    """ Seed sequences of one episode: (channel, action sampling).

    Both are children of ``SeedSequence(seed)`` under the spawn key
    ``(streams, episode, k)``, so training (``TRAIN_STREAMS``) and
    evaluation (``EVAL_STREAMS``) never share draws with each other or with
    a generator seeded by ``seed`` alone.

    :param seed: non-negative run seed
    :type seed: int
    :param episode: episode index
    :type episode: int
    :param streams: ``TRAIN_STREAMS`` or ``EVAL_STREAMS``
    :type streams: int
    :rtype: tuple of numpy.random.SeedSequence
    """
    if int(seed) < 0:
        raise DomainError(f'seed must be >= 0, got {seed}')
    return tuple(np.random.SeedSequence(int(seed), spawn_key=(int(streams), int(episode), k)) for k in (0, 1))


@dataclass
class EnvState:
    ages: np.ndarray
    last_tx_time: float
    tput_history: np.ndarray
    task_index: int = 0
    selections: np.ndarray = None

    def copy(self):
        return EnvState(self.ages.copy(), self.last_tx_time, self.tput_history.copy(),
                        self.task_index, self.selections.copy())


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    tx_duration: float
    attempts: int
    done: bool
    action: int
    ages: np.ndarray
    rates: np.ndarray


def sample_attempts(success_prob, rng):
    """Number of attempts until the first success, k >= 1 with
    Pr[k] = (1 - p)^(k - 1) p.

    :param success_prob: per-attempt success probability p in (0, 1]
    :type success_prob: float
    :param rng: random generator
    :type rng: numpy.random.Generator
    :return: number of attempts
    :rtype: int
    """
    if not 0 < success_prob <= 1:
        raise DomainError(f'success probability must lie in (0, 1], got {success_prob}')
    return int(rng.geometric(success_prob))


def transmission_time(packet_len, attempts, rate_model, rng):
    """Duration of a task: sum over attempts of L_n / lambda_k.

    Rates are drawn from ``rate_model`` one per attempt and are returned
    for the throughput history.

    :return: (duration in ms, drawn rates)
    :rtype: tuple
    """
    if attempts < 1:
        raise DomainError(f'attempts must be >= 1, got {attempts}')
    rates = rate_model.sample(rng, attempts)
    if np.any(rates <= 0):
        raise DomainError('rate model produced a non-positive rate')
    duration = 0.0
    # sequential sum keeps the result bit-identical to a per-attempt loop
    for rate in rates:
        duration += packet_len / rate
    return duration, rates


def compute_reward(ages, thresholds, penalty_weights):
    violations = ages > thresholds
    return float(-np.sum(ages) - np.sum(penalty_weights[violations]))


def build_observation(state, config):
    scale = float(np.max(config.thresholds))
    return np.concatenate((state.ages / scale,
                           [state.last_tx_time / scale],
                           state.tput_history / config.rate_model.mean))


class AoIEnv:
    """ Remote-monitoring network with one transmitter per task.

    Example:

    >>> from aoipyt.env import AoIEnv, EnvConfig, reference_sensors
    >>> env = AoIEnv(EnvConfig(reference_sensors()), seed=7)
    >>> out = env.step(0)
    >>> out.ages, out.reward
    """

    def __init__(self, config, seed=None):
        self.config = config.validate()
        self._L = config.packet_lens
        self._beta = config.thresholds
        self._delta = config.penalty_weights
        self.rng = None
        self.state = None
        self.reset(config.rng_seed if seed is None else seed)

    @property
    def n_sensors(self):
        return self.config.n_sensors

    @property
    def done(self):
        return self.state.task_index >= self.config.horizon

    @property
    def observation_size(self):
        return self.config.observation_size

    def reset(self, seed=None):
        """ Zero ages, zero-filled throughput history, task index 0.

        ``seed`` may be an int or a ``numpy.random.SeedSequence`` such as
        the ones from ``episode_seeds``; the same seed reproduces the same
        trajectory under the same actions.
        """
        if seed is None:
            seed = self.config.rng_seed
        self.rng = np.random.default_rng(seed)
        N = self.n_sensors
        self.state = EnvState(ages=np.zeros(N),
                              last_tx_time=0.0,
                              tput_history=np.zeros(int(self.config.history_len)),
                              task_index=0,
                              selections=np.zeros(N, dtype=int))
        return self.state

    def transmission_time(self, n, attempts):
        return transmission_time(self._L[n], attempts, self.config.rate_model, self.rng)

    def step(self, action):
        if self.state is None:
            raise LifecycleError('environment has not been reset')
        if self.done:
            raise LifecycleError(f'step after done (horizon {self.config.horizon} reached)')
        if isinstance(action, (bool, np.bool_)) or not isinstance(action, (int, np.integer)):
            raise ActionError(f'action must be an integer node index, got {action!r}')
        action = int(action)
        if not 0 <= action < self.n_sensors:
            raise ActionError(f'action {action} outside [0, {self.n_sensors})')

        state = self.state
        attempts = sample_attempts(self.config.success_prob, self.rng)
        duration, rates = self.transmission_time(action, attempts)

        ages = state.ages + duration
        ages[action] = duration
        state.ages = ages
        state.last_tx_time = duration
        throughput = attempts * self._L[action] / duration
        state.tput_history = np.append(state.tput_history[1:], throughput)
        state.selections[action] += 1
        state.task_index += 1

        reward = compute_reward(ages, self._beta, self._delta)
        return StepOutcome(observation=self.build_observation(),
                           reward=reward,
                           tx_duration=duration,
                           attempts=attempts,
                           done=self.done,
                           action=action,
                           ages=ages.copy(),
                           rates=rates)

    def build_observation(self, state=None):
        return build_observation(self.state if state is None else state, self.config)
