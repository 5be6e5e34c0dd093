# -*- coding: utf-8 -*-
"""
   Evaluation harness: per-node average AoI, violation probabilities,
   the weighted objective, empirical CDFs and policy comparison tables.

   Ages are sampled at task boundaries (the ages after each task). The
   reported objective is

       J = (1 / (T N)) sum_n sum_i A_n(i) + sum_n delta_n * P_Vn

   where P_Vn is the empirical frequency of A_n(i) > beta_n.
"""
from dataclasses import dataclass, replace
import logging
import json
import os

import numpy as np
import pandas as pd

from aoipyt.env import AoIEnv, EVAL_STREAMS, episode_seeds
from aoipyt.errors import UsageError
from aoipyt.values import AoIValues

logger = logging.getLogger(__name__)


@dataclass
class Trace:
    """One record per task: action, ages after the task, reward, duration."""
    task_index: np.ndarray
    action: np.ndarray
    ages: np.ndarray
    reward: np.ndarray
    tx_duration: np.ndarray
    attempts: np.ndarray = None

    @classmethod
    def from_ages(cls, ages, action=None):
        """Trace holding only an age matrix (T x N), for hand-built checks."""
        ages = np.atleast_2d(np.asarray(ages, dtype=float))
        T = ages.shape[0]
        return cls(task_index=np.arange(T),
                   action=np.zeros(T, dtype=int) if action is None else np.asarray(action, dtype=int),
                   ages=ages, reward=np.zeros(T), tx_duration=np.zeros(T), attempts=np.ones(T, dtype=int))

    @classmethod
    def concatenate(cls, traces):
        return cls(task_index=np.concatenate([t.task_index for t in traces]),
                   action=np.concatenate([t.action for t in traces]),
                   ages=np.vstack([t.ages for t in traces]),
                   reward=np.concatenate([t.reward for t in traces]),
                   tx_duration=np.concatenate([t.tx_duration for t in traces]),
                   attempts=np.concatenate([t.attempts for t in traces]))

    def __len__(self):
        return int(self.ages.shape[0]) if self.ages.size else 0

    @property
    def n_sensors(self):
        return int(self.ages.shape[1])


def _require(trace):
    if trace is None or len(trace) == 0:
        raise UsageError('trace is empty')


def _sensor_arrays(sensors):
    if hasattr(sensors, 'sensors'):
        sensors = sensors.sensors
    thresholds = np.array([s.aoi_threshold for s in sensors], dtype=float)
    weights = np.array([s.penalty_weight for s in sensors], dtype=float)
    return thresholds, weights


def average_aoi(trace):
    _require(trace)
    return trace.ages.mean(axis=0)


def violation_prob(trace, thresholds):
    _require(trace)
    return np.mean(trace.ages > np.asarray(thresholds, dtype=float), axis=0)


def objective(trace, sensors):
    """ Weighted objective: across-node mean AoI plus weighted violation frequencies.

    :param trace: evaluated trace
    :type trace: Trace
    :param sensors: sensor specs (or an EnvConfig)
    :type sensors: list of SensorSpec or EnvConfig
    :rtype: float
    """
    _require(trace)
    thresholds, weights = _sensor_arrays(sensors)
    return float(trace.ages.mean() + np.sum(weights * violation_prob(trace, thresholds)))


def empirical_cdf(trace, node, grid):
    """ F(a) = fraction of tasks with A_n <= a, on each grid point.

    Example:

    >>> empirical_cdf(Trace.from_ages([[1], [2], [3], [4]]), 0, [2.5])
    [(2.5, 0.5)]
    """
    _require(trace)
    ages = np.sort(trace.ages[:, node])
    grid = np.asarray(grid, dtype=float)
    counts = np.searchsorted(ages, grid, side='right')
    return [(float(a), float(c) / ages.size) for a, c in zip(grid, counts)]


def default_cdf_grid(trace, step=1.0):
    upper = np.ceil(trace.ages.max() / step) * step
    return np.arange(0.0, upper + 0.5 * step, step)


def run_episode(env, policy, rng):
    """ Runs ``env`` from its current state to its horizon under ``policy``.

    :rtype: Trace
    """
    policy.reset()
    T = env.config.horizon - env.state.task_index
    N = env.n_sensors
    actions = np.zeros(T, dtype=int)
    ages = np.zeros((T, N))
    rewards, durations = np.zeros(T), np.zeros(T)
    attempts = np.zeros(T, dtype=int)
    index = np.arange(env.state.task_index, env.config.horizon)
    observation = env.build_observation()
    for t in range(T):
        action = policy.decide(env.state, observation, rng)
        out = env.step(action)
        actions[t], ages[t], rewards[t] = out.action, out.ages, out.reward
        durations[t], attempts[t] = out.tx_duration, out.attempts
        observation = out.observation
    return Trace(index, actions, ages, rewards, durations, attempts)


@dataclass
class Report:
    policy: str
    avg_aoi: np.ndarray
    violation_prob: np.ndarray
    objective: float
    cdf: list
    episodes: int
    horizon: int
    seed: int
    selection_freq: np.ndarray = None
    peak_aoi: np.ndarray = None
    objective_stderr: float = 0.0
    config_hash: str = ''
    units: str = 'ms'

    @property
    def n_sensors(self):
        return len(self.avg_aoi)

    def metadata(self):
        return {'policy': self.policy, 'config_hash': self.config_hash, 'seed': self.seed,
                'episodes': self.episodes, 'horizon': self.horizon, 'units': self.units}

    def to_values(self):
        return AoIValues(Policy=self.policy, Objective=self.objective, ObjectiveStdErr=self.objective_stderr,
                         AverageAoI=self.avg_aoi, ViolationProbability=self.violation_prob,
                         SelectionFrequency=self.selection_freq, PeakAoI=self.peak_aoi,
                         Episodes=self.episodes, Horizon=self.horizon, Seed=self.seed,
                         ConfigHash=self.config_hash, Units=self.units)

    def disp(self):
        self.to_values().disp()

    def to_excel(self, filename=None):
        return self.to_values().to_excel(filename)

    def cdf_frame(self, node):
        return pd.DataFrame(self.cdf[node], columns=['age_ms', 'cdf'])

    def write_summary(self, path):
        """Structured-text summary: metadata, objective and per-node metrics."""
        summary = dict(self.metadata())
        summary.update(objective=self.objective,
                       objective_stderr=self.objective_stderr,
                       nodes=[{'node': n,
                               'avg_aoi_ms': float(self.avg_aoi[n]),
                               'violation_prob': float(self.violation_prob[n]),
                               'peak_aoi_ms': float(self.peak_aoi[n]),
                               'selection_freq': float(self.selection_freq[n])}
                              for n in range(self.n_sensors)])
        with open(path, 'w') as f:
            json.dump(summary, f, indent=2, sort_keys=True)
        return path

    def write_cdf_tables(self, directory):
        """One ``cdf_node<n>.csv`` per node with columns age_ms, cdf."""
        paths = []
        for n in range(self.n_sensors):
            path = os.path.join(directory, f'cdf_node{n}.csv')
            write_table(self.cdf_frame(n), path, self.metadata(), index=False)
            paths.append(path)
        return paths


def write_table(frame, path, metadata, index=True):
    """Delimited text with ``# key=value`` header lines."""
    with open(path, 'w', newline='') as f:
        for key in sorted(metadata):
            f.write(f'# {key}={metadata[key]}\n')
        frame.to_csv(f, index=index, float_format='%.10g')
    return path


def evaluate_policy(policy, env_config, episodes, horizon, seed, cdf_step=1.0, config_hash=''):
    """ Runs ``episodes`` independently seeded episodes of ``horizon`` tasks and
    aggregates all tasks into one Report.

    Episode ``e`` draws its channel and its policy randomness from
    ``episode_seeds(seed, e, EVAL_STREAMS)``, so every policy sees the same
    channel draws and none of them replays a training episode.

    :rtype: Report
    """
    if episodes < 1 or horizon < 1:
        raise UsageError(f'need episodes >= 1 and horizon >= 1, got {episodes}, {horizon}')
    if int(seed) < 0:
        raise UsageError(f'seed must be >= 0, got {seed}')
    env = AoIEnv(replace(env_config, horizon=int(horizon)))
    traces, objectives = [], []
    for episode in range(int(episodes)):
        env_seed, policy_seed = episode_seeds(seed, episode, EVAL_STREAMS)
        env.reset(seed=env_seed)
        rng = np.random.default_rng(policy_seed)
        trace = run_episode(env, policy, rng)
        traces.append(trace)
        objectives.append(objective(trace, env_config))
    trace = Trace.concatenate(traces)
    grid = default_cdf_grid(trace, cdf_step)
    N = env_config.n_sensors
    stderr = float(np.std(objectives, ddof=1) / np.sqrt(len(objectives))) if len(objectives) > 1 else 0.0
    report = Report(policy=getattr(policy, 'name', None) or type(policy).__name__,
                    avg_aoi=average_aoi(trace),
                    violation_prob=violation_prob(trace, env_config.thresholds),
                    objective=objective(trace, env_config),
                    cdf=[empirical_cdf(trace, n, grid) for n in range(N)],
                    episodes=int(episodes), horizon=int(horizon), seed=seed,
                    selection_freq=np.bincount(trace.action, minlength=N) / len(trace),
                    peak_aoi=trace.ages.max(axis=0),
                    objective_stderr=stderr,
                    config_hash=config_hash)
    logger.info(f'Evaluated {report.policy}: objective {report.objective:.4f} '
                f'over {episodes} x {horizon} tasks.')
    return report


def compare(reports):
    """ Side-by-side comparison table.

    Rows: raw objective, objective normalized by the best (lowest) one,
    its across-episode standard error, P_Vn per node and average AoI per
    node. Columns: policy names.

    :param reports: named reports, as a dict or a list of (name, Report)
    :rtype: pandas.DataFrame
    """
    items = list(reports.items()) if isinstance(reports, dict) else list(reports)
    if len(items) < 2:
        raise UsageError(f'need at least 2 reports to compare, got {len(items)}')
    names = [name for name, _ in items]
    if len(set(names)) != len(names):
        raise UsageError(f'report names must be unique, got {names}')
    first = items[0][1]
    for name, report in items[1:]:
        for key in ('config_hash', 'seed', 'episodes', 'horizon', 'n_sensors'):
            if getattr(report, key) != getattr(first, key):
                raise UsageError(f'report {name!r} differs in {key}: '
                                 f'{getattr(report, key)!r} vs {getattr(first, key)!r}')

    objectives = np.array([report.objective for _, report in items])
    best = objectives.min()
    if best > 0:
        normalized = objectives / best
    else:
        normalized = np.where(objectives == best, 1.0, np.inf)

    N = first.n_sensors
    rows = ['Objective', 'Normalized objective', 'Objective std. error']
    rows += [f'P_V{n}' for n in range(N)]
    rows += [f'Average AoI (n={n}) [ms]' for n in range(N)]
    table = pd.DataFrame(index=rows, columns=names, dtype=float)
    for k, (name, report) in enumerate(items):
        table[name] = np.concatenate(([report.objective, normalized[k], report.objective_stderr],
                                      report.violation_prob, report.avg_aoi))
    table.attrs.update(first.metadata())
    table.attrs.pop('policy', None)
    return table
