# -*- coding: utf-8 -*-
"""
   AoI-Python Toolkit (aoipyt): age-of-information aware sensor scheduling

   How to run:

   from aoipyt import aoinet

   d = aoinet('table1.cfg')

   A remote-monitoring network of N sensors shares one wireless link with
   a controller. In every task the controller polls one sensor, which
   transmits a fresh sample until it is received. This toolkit simulates
   the network, trains an actor-critic scheduler that minimizes the
   average age of information (AoI) plus weighted threshold violations,
   and evaluates it against baseline schedulers.

   AoI-Python Toolkit Licence:

   Licensed under the EUPL, Version 1.2 or - as soon they will be
   approved by the European Commission - subsequent versions of the
   EUPL (the "Licence") You may not use this work except in
   compliance with the Licence. You may obtain a copy of the Licence
   at:

   https://joinup.ec.europa.eu/collection/eupl/eupl-text-eupl-12

   Unless required by applicable law or agreed to in writing, software
   distributed under the Licence is distributed on an "AS IS" basis,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
   implied. See the Licence for the specific language governing
   permissions and limitations under the Licence.
"""
from dataclasses import replace
import warnings
import logging
import os

import numpy as np

from aoipyt import __version__, __lastupdate__
from aoipyt.config import parse_config, locate_scenario, config_hash, DEFAULT_SCENARIO
from aoipyt.env import AoIEnv, EVAL_STREAMS, RATE_CONSTANT, RATE_UNIFORM, episode_seeds
from aoipyt.errors import UsageError
from aoipyt.metrics import evaluate_policy, run_episode, compare
from aoipyt.net import save_checkpoint, load_checkpoint
from aoipyt.policy import (Policy, make_policy, benchmark_probs, BENCHMARK, ROUND_ROBIN, MAX_AGE, LEARNED,
                           MODE_ARGMAX, MODE_SAMPLE)
from aoipyt.train import train, TrainedModel
from aoipyt.values import AoIValues, isList

logger = logging.getLogger(__name__)

CHECKPOINT_PREFIX = 'checkpoint:'


class SchedulerConstants:
    def __init__(self):
        pass

    # Policies
    BENCHMARK = BENCHMARK
    ROUND_ROBIN = ROUND_ROBIN
    MAX_AGE = MAX_AGE
    LEARNED = LEARNED

    # Learned-policy evaluation modes
    MODE_ARGMAX = MODE_ARGMAX
    MODE_SAMPLE = MODE_SAMPLE

    # Rate models
    RATE_CONSTANT = RATE_CONSTANT
    RATE_UNIFORM = RATE_UNIFORM

    # Units
    AGE_UNITS = 'ms'
    LENGTH_UNITS = 'B'
    RATE_UNITS = 'B/ms'


class aoinet:
    """ AoI-Python Toolkit main class.

    Sensor indices are zero-based, as in the scheduling decisions.

    Example:

    >>> from aoipyt import aoinet
    >>> d = aoinet('table1.cfg')
    >>> d.getSensorCount()
    10
    """

    def __init__(self, scenario=DEFAULT_SCENARIO, display_msg=True):
        self.TYPEPOLICY = [BENCHMARK, ROUND_ROBIN, MAX_AGE, LEARNED]
        self.TYPEMODE = [MODE_ARGMAX, MODE_SAMPLE]
        self.TYPERATE = [RATE_CONSTANT, RATE_UNIFORM]
        self.SchedulerConstants = SchedulerConstants()

        self.classversion = __version__
        self.display_msg = display_msg
        if self.display_msg:
            print(f'aoipyt v{self.classversion} loaded (Last Update: {__lastupdate__}).')

        self.ScenarioFile = locate_scenario(scenario)
        self.config = parse_config(self.ScenarioFile)
        self.scenarioName = os.path.basename(self.ScenarioFile)
        self.model = None
        self.TrainingStats = None
        if self.display_msg:
            print(f'Scenario {self.scenarioName} loaded successfully.\n')

    def getVersion(self):
        """ Retrieves the toolkit version.

        Example:

        >>> d.getVersion()
        """
        return self.classversion

    def getConfigHash(self):
        """ Retrieves the 12-digit hash written into every result file.

        Example:

        >>> d.getConfigHash()

        See also getSensorsInfo.
        """
        return config_hash(self.config)

    def getSensorCount(self):
        """ Retrieves the number of sensors.

        Example:

        >>> d.getSensorCount()
        """
        return self.config.env.n_sensors

    def getSensorPacketLength(self, *argv):
        """ Retrieves the packet length of all sensors, in bytes.

        Example:

        >>> d.getSensorPacketLength()          # Retrieves the packet lengths of all sensors
        >>> d.getSensorPacketLength(0)         # Retrieves the packet length of the first sensor
        >>> d.getSensorPacketLength([1, 2])    # Retrieves the packet lengths of the 2nd and 3rd sensors

        See also getSensorAoIThreshold, getSensorsInfo.
        """
        return self.__getSensorInfo('packet_len', *argv)

    def getSensorAoIThreshold(self, *argv):
        """ Retrieves the AoI threshold of all sensors, in ms.

        Example:

        >>> d.getSensorAoIThreshold()
        >>> d.getSensorAoIThreshold(9)

        See also setSensorAoIThreshold, getSensorPenaltyWeight.
        """
        return self.__getSensorInfo('aoi_threshold', *argv)

    def getSensorPenaltyWeight(self, *argv):
        """ Retrieves the threshold-violation penalty weight of all sensors.

        Example:

        >>> d.getSensorPenaltyWeight()
        >>> d.getSensorPenaltyWeight(0)

        See also setSensorPenaltyWeight, getSensorAoIThreshold.
        """
        return self.__getSensorInfo('penalty_weight', *argv)

    def getSensorsInfo(self):
        """ Retrieves sensors info (packet lengths, AoI thresholds, penalty weights).

        Example:

        >>> d.getSensorsInfo().disp()

        See also getSensorPacketLength, getSensorAoIThreshold, getSensorPenaltyWeight.
        """
        value = AoIValues()
        value.SensorCount = self.getSensorCount()
        value.SensorPacketLength = self.getSensorPacketLength()
        value.SensorAoIThreshold = self.getSensorAoIThreshold()
        value.SensorPenaltyWeight = self.getSensorPenaltyWeight()
        value.SuccessProbability = self.getSuccessProbability()
        return value

    def getSuccessProbability(self):
        """ Retrieves the per-attempt success probability p.

        Example:

        >>> d.getSuccessProbability()
        0.9
        """
        return self.config.env.success_prob

    def setSuccessProbability(self, value):
        """ Sets the per-attempt success probability p in (0, 1].

        Example:

        >>> d.setSuccessProbability(0.5)
        >>> d.getSuccessProbability()
        0.5
        """
        self.__setEnv(success_prob=float(value))

    def setSensorPacketLength(self, value, *argv):
        """ Sets the packet length of sensors.

        Example 1:

        >>> d.setSensorPacketLength(0, 15)               # Sets the packet length of the first sensor

        Example 2:

        >>> lengths = d.getSensorPacketLength()
        >>> d.setSensorPacketLength(lengths * 2)         # Sets the packet lengths of all sensors

        See also getSensorPacketLength.
        """
        self.__setSensorEval('packet_len', value, *argv)

    def setSensorAoIThreshold(self, value, *argv):
        """ Sets the AoI threshold of sensors.

        Example 1:

        >>> d.setSensorAoIThreshold(0, 25)               # Sets the threshold of the first sensor to 25 ms

        Example 2:

        >>> d.setSensorAoIThreshold([20, 40, 60, 80, 100, 120, 140, 160, 180, 200])

        See also getSensorAoIThreshold, getBenchmarkProbabilities.
        """
        self.__setSensorEval('aoi_threshold', value, *argv)

    def setSensorPenaltyWeight(self, value, *argv):
        """ Sets the threshold-violation penalty weight of sensors.

        Example:

        >>> d.setSensorPenaltyWeight(np.zeros(d.getSensorCount()))   # Objective becomes the average AoI

        See also getSensorPenaltyWeight.
        """
        self.__setSensorEval('penalty_weight', value, *argv)

    def getBenchmarkProbabilities(self):
        """ Retrieves the selection probabilities of the benchmark scheduler,
        inversely proportional to the AoI thresholds.

        Example:

        >>> d.getBenchmarkProbabilities()[0]           # 1 / H_10 for the reference scenario
        """
        return benchmark_probs(self.config.env.thresholds)

    def getComputedTimeSeries(self, policy=BENCHMARK, horizon=None, seed=None):
        """ Simulates one episode and retrieves all task time-series.

        Data that is computed:
          1) Time         (cumulative ms at the end of each task)
          2) Action       (selected sensor)
          3) Age          (tasks x sensors, ms)
          4) Reward
          5) TxDuration   (ms)
          6) Attempts

        Example:

        >>> res = d.getComputedTimeSeries('max_age', horizon=100, seed=3)
        >>> res.Age[:, 0]

        See also evaluatePolicy.
        """
        horizon = self.config.eval.horizon if horizon is None else int(horizon)
        seed = self.config.eval.seed if seed is None else seed
        policy = self.__policy(policy)
        env_seed, policy_seed = episode_seeds(seed, 0, EVAL_STREAMS)
        env = AoIEnv(replace(self.config.env, horizon=horizon), seed=env_seed)
        trace = run_episode(env, policy, np.random.default_rng(policy_seed))
        value = AoIValues()
        value.Time = np.cumsum(trace.tx_duration)
        value.Action = trace.action
        value.Age = trace.ages
        value.Reward = trace.reward
        value.TxDuration = trace.tx_duration
        value.Attempts = trace.attempts
        return value

    def trainScheduler(self, stop_event=None, **overrides):
        """ Trains the actor-critic scheduler on the loaded scenario.

        Keyword arguments override the [train] settings of the scenario.

        Example:

        >>> model = d.trainScheduler(episodes=20, n_workers=1, seed=3)
        >>> d.TrainingStats.to_frame()

        See also saveScheduler, evaluatePolicy.
        """
        train_config = replace(self.config.train, **overrides).validate()
        self.model, self.TrainingStats = train(self.config.env, self.config.arch, train_config,
                                               stop_event=stop_event)
        if self.TrainingStats.aborted:
            warnings.warn('Training was aborted; the scheduler is partially trained.')
        return self.model

    def saveScheduler(self, path):
        """ Saves the trained scheduler as a checkpoint file.

        Example:

        >>> d.saveScheduler('checkpoint.json')

        See also loadScheduler.
        """
        if self.model is None:
            raise UsageError('no trained scheduler; call trainScheduler or loadScheduler first')
        return save_checkpoint(path, self.model.params,
                               metadata={'config_hash': self.getConfigHash(), 'seed': self.model.config.seed,
                                         'version': self.model.version})

    def loadScheduler(self, path):
        """ Loads a scheduler checkpoint for the current scenario.

        Example:

        >>> d.loadScheduler('checkpoint.json')
        >>> d.evaluatePolicy('learned').disp()
        """
        params, metadata = load_checkpoint(path)
        if params.arch != self.config.arch:
            raise UsageError(f'checkpoint architecture {params.arch} does not match the scenario {self.config.arch}')
        if metadata.get('config_hash') not in (None, self.getConfigHash()):
            warnings.warn(f'Checkpoint "{path}" was trained on a different configuration.')
        self.model = TrainedModel(params=params, version=int(metadata.get('version', 0)), config=self.config.train)
        return self.model

    def evaluatePolicy(self, policy=BENCHMARK, episodes=None, horizon=None, seed=None, mode=None):
        """ Monte Carlo evaluation of a scheduler.

        :param policy: policy name, ``checkpoint:<path>`` or a Policy instance
        :param episodes: number of episodes (default from [eval])
        :param horizon: tasks per episode (default from [eval])
        :param seed: evaluation seed (default from [eval])
        :param mode: ``argmax`` or ``sample`` for learned schedulers
        :return: evaluation report
        :rtype: Report

        Example:

        >>> report = d.evaluatePolicy('benchmark', episodes=5)
        >>> report.objective
        >>> report.disp()

        See also comparePolicies, getComputedTimeSeries.
        """
        ev = self.config.eval
        label = policy if isinstance(policy, str) else getattr(policy, 'name', None) or type(policy).__name__
        report = evaluate_policy(self.__policy(policy, mode), self.config.env,
                                 ev.episodes if episodes is None else episodes,
                                 ev.horizon if horizon is None else horizon,
                                 ev.seed if seed is None else seed,
                                 cdf_step=ev.cdf_step, config_hash=self.getConfigHash())
        return replace(report, policy=label)

    def comparePolicies(self, *policies, episodes=None, horizon=None, seed=None):
        """ Evaluates policies on identical seeds and returns the comparison table.

        Example:

        >>> d.comparePolicies('learned', 'benchmark', 'max_age')

        See also evaluatePolicy.
        """
        if len(policies) == 1 and isList(policies[0]):
            policies = policies[0]
        reports = []
        for policy in policies:
            report = self.evaluatePolicy(policy, episodes=episodes, horizon=horizon, seed=seed)
            reports.append((report.policy, report))
        return compare(reports)

    def unload(self):
        """ Releases the trained scheduler and the scenario.

        Example:

        >>> d.unload()
        """
        self.model = None
        self.TrainingStats = None
        if self.display_msg:
            print(f'Close toolkit for the scenario "{self.scenarioName}". aoipyt is unloaded.\n')

    def __policy(self, policy, mode=None):
        if isinstance(policy, Policy):
            return policy
        mode = mode or self.config.eval.mode
        if policy.startswith(CHECKPOINT_PREFIX):
            params, _ = load_checkpoint(policy[len(CHECKPOINT_PREFIX):])
            return make_policy(LEARNED, self.config.env, params=params, mode=mode)
        params = self.model.params if (policy == LEARNED and self.model is not None) else None
        return make_policy(policy, self.config.env, params=params, mode=mode)

    def __getSensorInfo(self, attr, *argv):
        values = np.array([getattr(s, attr) for s in self.config.env.sensors])
        if len(argv) > 0:
            index = argv[0]
            if isinstance(index, (list, np.ndarray)):
                return values[np.asarray(index, dtype=int)]
            return values[int(index)]
        return values

    def __setSensorEval(self, attr, value, *argv):
        sensors = list(self.config.env.sensors)
        if len(argv) == 1:
            index, value = value, argv[0]
            if isinstance(index, (list, np.ndarray)):
                for i, v in zip(index, value):
                    sensors[int(i)] = replace(sensors[int(i)], **{attr: float(v)})
            else:
                sensors[int(index)] = replace(sensors[int(index)], **{attr: float(value)})
        else:
            if len(value) != len(sensors):
                raise UsageError(f'expected {len(sensors)} values, got {len(value)}')
            sensors = [replace(s, **{attr: float(v)}) for s, v in zip(sensors, value)]
        self.__setEnv(sensors=tuple(sensors))

    def __setEnv(self, **changes):
        env = replace(self.config.env, **changes).validate()
        self.config = replace(self.config, env=env)
