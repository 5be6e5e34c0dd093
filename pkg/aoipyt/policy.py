# -*- coding: utf-8 -*-
"""
   Schedulers: the inverse-threshold randomized benchmark, greedy
   max-age, round-robin and the learned actor-critic policy.

   Every policy answers ``decide(state, observation, rng)`` with one node
   index in ``[0, N)``. Ties are broken by the lowest index everywhere.
"""
import logging

import numpy as np

from aoipyt.errors import DomainError, UsageError
from aoipyt.net import forward

logger = logging.getLogger(__name__)

BENCHMARK = 'benchmark'
ROUND_ROBIN = 'round_robin'
MAX_AGE = 'max_age'
LEARNED = 'learned'
POLICY_NAMES = (BENCHMARK, ROUND_ROBIN, MAX_AGE, LEARNED)

MODE_ARGMAX = 'argmax'
MODE_SAMPLE = 'sample'


def check_prob_vector(probs, atol=1e-9):
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise DomainError('probability vector must be a non-empty 1-D array')
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise DomainError('probability vector has negative or non-finite entries')
    if abs(probs.sum() - 1.0) > atol:
        raise DomainError(f'probability vector sums to {probs.sum()!r}, not 1')
    return probs


def benchmark_probs(thresholds):
    """ Selection probabilities inversely proportional to the AoI thresholds,
    probs[n] = (1 / beta_n) / sum_m (1 / beta_m).

    Example:

    >>> benchmark_probs([10, 20])
    array([0.66666667, 0.33333333])
    """
    beta = np.asarray(thresholds, dtype=float)
    if beta.size == 0 or np.any(beta <= 0) or not np.all(np.isfinite(beta)):
        raise DomainError(f'AoI thresholds must be finite and > 0, got {thresholds}')
    inv = 1.0 / beta
    return inv / inv.sum()


def sample_categorical(probs, rng):
    cdf = np.cumsum(probs)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side='right'))
    return min(index, len(cdf) - 1)


def max_age_policy(state):
    return int(np.argmax(state.ages))


def round_robin_policy(task_index, n_sensors):
    if n_sensors < 1:
        raise DomainError(f'need at least one sensor, got {n_sensors}')
    return int(task_index) % int(n_sensors)


class Policy:
    name = None

    def reset(self):
        """Called at the start of every episode."""

    def decide(self, state, observation, rng):
        raise NotImplementedError


class BenchmarkPolicy(Policy):
    """Static randomized scheduler; probabilities are not renormalized per task."""
    name = BENCHMARK

    def __init__(self, thresholds):
        self.probs = check_prob_vector(benchmark_probs(thresholds))

    def decide(self, state, observation, rng):
        return sample_categorical(self.probs, rng)


class RoundRobinPolicy(Policy):
    name = ROUND_ROBIN

    def __init__(self, n_sensors):
        self.n_sensors = int(n_sensors)
        self.counter = 0

    def reset(self):
        self.counter = 0

    def decide(self, state, observation, rng):
        index = round_robin_policy(self.counter, self.n_sensors)
        self.counter += 1
        return index


class MaxAgePolicy(Policy):
    name = MAX_AGE

    def decide(self, state, observation, rng):
        return max_age_policy(state)


class LearnedPolicy(Policy):
    """ Actor of a trained network.

    ``argmax`` picks the maximum element of the policy vector (exploitation);
    ``sample`` draws from it as during training.
    """
    name = LEARNED

    def __init__(self, params, mode=MODE_ARGMAX):
        if mode not in (MODE_ARGMAX, MODE_SAMPLE):
            raise UsageError(f'unknown learned-policy mode {mode!r}')
        self.params = params
        self.mode = mode

    def decide(self, state, observation, rng):
        probs = forward(self.params, observation).probs
        if self.mode == MODE_ARGMAX:
            return int(np.argmax(probs))
        return sample_categorical(probs, rng)


def make_policy(name, env_config, params=None, mode=MODE_ARGMAX):
    """ Builds a policy by its configuration name.

    :param name: one of ``benchmark``, ``round_robin``, ``max_age``, ``learned``
    :type name: str
    :param env_config: scenario the policy schedules
    :type env_config: EnvConfig
    :param params: network parameters, required for ``learned``
    :type params: NetParams, optional
    :param mode: evaluation mode of the learned policy
    :type mode: str
    :rtype: Policy
    """
    if name == BENCHMARK:
        return BenchmarkPolicy(env_config.thresholds)
    if name == ROUND_ROBIN:
        return RoundRobinPolicy(env_config.n_sensors)
    if name == MAX_AGE:
        return MaxAgePolicy()
    if name == LEARNED:
        if params is None:
            raise UsageError('the learned policy needs trained parameters')
        if (params.arch.n_sensors, params.arch.history_len) != (env_config.n_sensors, env_config.history_len):
            raise UsageError(f'network expects {params.arch.n_sensors} sensors and a history of '
                             f'{params.arch.history_len}, scenario has {env_config.n_sensors} and '
                             f'{env_config.history_len}')
        return LearnedPolicy(params, mode=mode)
    raise UsageError(f'unknown policy {name!r}; use one of {POLICY_NAMES}')
