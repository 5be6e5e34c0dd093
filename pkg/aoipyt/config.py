# -*- coding: utf-8 -*-
"""
   Experiment configuration files.

   A scenario is a ``.cfg`` text file with one section per module:

   [env]     per-sensor lists (comma separated) and channel settings
   [rate]    per-attempt transmission rate model
   [arch]    network sizes (N and j are taken from [env])
   [train]   actor-critic settings
   [eval]    Monte Carlo evaluation settings
   [output]  artifact directory

   Every key is optional; missing keys take the defaults of the
   corresponding dataclass. Unknown sections and keys are rejected.
"""
from dataclasses import dataclass, field, replace
import configparser
import hashlib
import logging
import os

from pkg_resources import resource_filename

from aoipyt.env import EnvConfig, RateModel, RATE_CONSTANT, RATE_UNIFORM, reference_sensors
from aoipyt.errors import ConfigurationError
from aoipyt.net import NetArch
from aoipyt.policy import MODE_ARGMAX, MODE_SAMPLE
from aoipyt.train import TrainConfig

logger = logging.getLogger(__name__)

SCENARIO_EXTENSION = '.cfg'
DEFAULT_SCENARIO = 'table1.cfg'
SECTIONS = ('env', 'rate', 'arch', 'train', 'eval', 'output')


@dataclass(frozen=True)
class EvalConfig:
    episodes: int = 10
    horizon: int = 1000
    seed: int = 0
    cdf_step: float = 1.0
    mode: str = MODE_ARGMAX

    def validate(self):
        if self.episodes < 1:
            raise ConfigurationError('eval.episodes', f'must be >= 1, got {self.episodes}')
        if self.horizon < 1:
            raise ConfigurationError('eval.horizon', f'must be >= 1, got {self.horizon}')
        if self.seed < 0:
            raise ConfigurationError('eval.seed', f'must be >= 0, got {self.seed}')
        if not self.cdf_step > 0:
            raise ConfigurationError('eval.cdf_step', f'must be > 0, got {self.cdf_step}')
        if self.mode not in (MODE_ARGMAX, MODE_SAMPLE):
            raise ConfigurationError('eval.mode', f'must be {MODE_ARGMAX!r} or {MODE_SAMPLE!r}, got {self.mode!r}')
        return self


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig
    arch: NetArch
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output_dir: str = 'aoipyt_output'
    source: str = field(default=None, compare=False)

    def validate(self):
        self.env.validate()
        self.arch.validate()
        if (self.arch.n_sensors, self.arch.history_len) != (self.env.n_sensors, self.env.history_len):
            raise ConfigurationError('arch.n_sensors', 'architecture does not match the scenario')
        self.train.validate()
        self.eval.validate()
        if not str(self.output_dir).strip():
            raise ConfigurationError('output.dir', 'must not be empty')
        return self

    def with_overrides(self, seed=None, episodes=None, workers=None, output=None):
        """Command-line overrides; ``seed`` applies to training and evaluation."""
        train, evaluation, output_dir = self.train, self.eval, self.output_dir
        if seed is not None:
            train = replace(train, seed=int(seed))
            evaluation = replace(evaluation, seed=int(seed))
        if episodes is not None:
            train = replace(train, episodes=int(episodes))
        if workers is not None:
            train = replace(train, n_workers=int(workers))
        if output is not None:
            output_dir = output
        return replace(self, train=train, eval=evaluation, output_dir=output_dir).validate()


def locate_scenario(scenario):
    """ Returns the path of ``scenario``; bare names of packaged scenarios
    (e.g. ``table1.cfg``) are searched in the package tree.
    """
    if os.path.exists(scenario):
        return scenario
    for root, dirs, files in os.walk(resource_filename('aoipyt', '')):
        for name in files:
            if name.lower().endswith(SCENARIO_EXTENSION) and name == scenario:
                return os.path.join(root, name)
    raise ConfigurationError('config', f'File "{scenario}" does not exist.')


def _none(text):
    return text.strip().lower() in ('', 'none')


def _convert(key, text, kind):
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is bool:
            flag = configparser.ConfigParser.BOOLEAN_STATES.get(text.strip().lower())
            if flag is None:
                raise ValueError(text)
            return flag
        if kind == 'floats':
            return [float(v) for v in text.split(',') if v.strip()]
        return text.strip()
    except ValueError:
        raise ConfigurationError(key, f'cannot parse {text!r}')


_ENV_KEYS = {'success_prob': float, 'horizon': int, 'rng_seed': int, 'history_len': int}
_SENSOR_KEYS = ('packet_len', 'aoi_threshold', 'penalty_weight')
_RATE_KEYS = {'kind': str, 'rate': float, 'low': float, 'high': float}
_ARCH_KEYS = {'conv_filters': int, 'conv_kernel': int, 'conv_stride': int, 'hidden_units': int}
_TRAIN_KEYS = {'actor_lr': float, 'critic_lr': float, 'discount': float, 'entropy_start': float,
               'entropy_decay_steps': int, 'n_workers': int, 'episodes': int, 'episode_len': int,
               'update_period': int, 'seed': int, 'max_grad_norm': float, 'reward_scale': float,
               'normalize_advantage': bool}
_OPTIONAL_TRAIN = ('entropy_decay_steps', 'update_period', 'max_grad_norm', 'reward_scale')
_EVAL_KEYS = {'episodes': int, 'horizon': int, 'seed': int, 'cdf_step': float, 'mode': str}
_OUTPUT_KEYS = {'dir': str}

_KNOWN = {'env': set(_ENV_KEYS) | set(_SENSOR_KEYS), 'rate': set(_RATE_KEYS), 'arch': set(_ARCH_KEYS),
          'train': set(_TRAIN_KEYS), 'eval': set(_EVAL_KEYS), 'output': set(_OUTPUT_KEYS)}


def _section_values(parser, section, keys):
    values = {}
    if not parser.has_section(section):
        return values
    for key, text in parser.items(section):
        kind = keys.get(key)
        if kind is None:
            continue
        path = f'{section}.{key}'
        if section == 'train' and key in _OPTIONAL_TRAIN and _none(text):
            values[key] = None
        else:
            values[key] = _convert(path, text, kind)
    return values


def parse_config_string(text, source='<string>'):
    """ Parses and validates configuration text.

    :rtype: ExperimentConfig
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError('config', f'malformed file {source}: {e}')

    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigurationError(section, f'unknown section; use one of {SECTIONS}')
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                raise ConfigurationError(f'{section}.{key}', 'unknown key')

    env_values = _section_values(parser, 'env', _ENV_KEYS)
    lists = {key: _convert(f'env.{key}', parser.get('env', key), 'floats')
             for key in _SENSOR_KEYS if parser.has_option('env', key)}
    if lists and len(lists) != len(_SENSOR_KEYS):
        missing = [f'env.{key}' for key in _SENSOR_KEYS if key not in lists]
        raise ConfigurationError(missing[0], 'per-sensor lists must be given together')
    if lists:
        env = EnvConfig.from_lists(lists['packet_len'], lists['aoi_threshold'], lists['penalty_weight'],
                                   **env_values)
    else:
        env = EnvConfig(sensors=reference_sensors(), **env_values)

    rate_values = _section_values(parser, 'rate', _RATE_KEYS)
    kind = rate_values.pop('kind', RATE_CONSTANT)
    if kind == RATE_UNIFORM:
        if 'rate' in rate_values:
            raise ConfigurationError('rate.rate', 'not used by the uniform rate model')
        rate_model = RateModel(kind=kind, rate=None, low=rate_values.get('low'), high=rate_values.get('high'))
    else:
        if 'low' in rate_values or 'high' in rate_values:
            raise ConfigurationError('rate.low', f'not used by the {kind!r} rate model')
        rate_model = RateModel(kind=kind, rate=rate_values.get('rate', RateModel.rate))
    env = replace(env, rate_model=rate_model)

    arch = NetArch(n_sensors=env.n_sensors, history_len=int(env.history_len),
                   **_section_values(parser, 'arch', _ARCH_KEYS))
    train = TrainConfig(**_section_values(parser, 'train', _TRAIN_KEYS))
    evaluation = EvalConfig(**_section_values(parser, 'eval', _EVAL_KEYS))
    output = _section_values(parser, 'output', _OUTPUT_KEYS)
    config = ExperimentConfig(env=env, arch=arch, train=train, eval=evaluation,
                              output_dir=output.get('dir', ExperimentConfig.output_dir), source=source)
    return config.validate()


def parse_config(path, **overrides):
    """ Reads a scenario file by path or packaged name.

    Example:

    >>> config = parse_config('table1.cfg')
    >>> config.env.n_sensors
    10

    :param path: file path or packaged scenario name
    :type path: str
    :param overrides: ``seed``, ``episodes``, ``workers``, ``output``
    :return: validated configuration
    :rtype: ExperimentConfig
    """
    path = locate_scenario(path)
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    config = parse_config_string(text, source=path)
    if overrides:
        config = config.with_overrides(**overrides)
    logger.debug(f'Loaded configuration {path} (hash {config_hash(config)}).')
    return config


def _fmt(value):
    if value is None:
        return 'none'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_list(values):
    return ', '.join(repr(float(v)) for v in values)


def format_config(config, include_output=True):
    """Configuration text; floats keep their full precision."""
    env = config.env
    lines = ['[env]',
             f'packet_len = {_fmt_list(env.packet_lens)}',
             f'aoi_threshold = {_fmt_list(env.thresholds)}',
             f'penalty_weight = {_fmt_list(env.penalty_weights)}']
    lines += [f'{key} = {_fmt(getattr(env, key))}' for key in _ENV_KEYS]

    rate = env.rate_model
    lines += ['', '[rate]', f'kind = {rate.kind}']
    if rate.kind == RATE_UNIFORM:
        lines += [f'low = {_fmt(rate.low)}', f'high = {_fmt(rate.high)}']
    else:
        lines += [f'rate = {_fmt(rate.rate)}']

    for section, obj, keys in (('arch', config.arch, _ARCH_KEYS),
                               ('train', config.train, _TRAIN_KEYS),
                               ('eval', config.eval, _EVAL_KEYS)):
        lines += ['', f'[{section}]']
        lines += [f'{key} = {_fmt(getattr(obj, key))}' for key in keys]
    if include_output:
        lines += ['', '[output]', f'dir = {config.output_dir}']
    return '\n'.join(lines) + '\n'


def write_config(config, path):
    """ Writes ``format_config`` text under a ``; config_hash=<hash> seed=<seed>``
    comment line; the file parses back to an equal configuration.
    """
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f'; config_hash={config_hash(config)} seed={config.train.seed}\n')
        f.write(format_config(config))
    return path


def config_hash(config):
    """ First 12 hex digits of the SHA-256 of the configuration text.

    The output directory is not part of the hash.
    """
    text = format_config(config, include_output=False)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]
