# -*- coding: utf-8 -*-
"""
   Actor-critic function approximator with exact manual gradients.

   obs = [ages (N), last_tx_time (1), throughput history (j)]

   history --conv1d(F filters, width K, stride s)--> ReLU --flatten--+
   ages, last_tx_time ----------------------------------------------+--> dense(H) ReLU
                                                                          |--> softmax policy (N)
                                                                          |--> linear value (1)

   All parameters live in one flat float64 vector; named views into it are
   produced by ``NetParams.unpack``. Layout, in order:

       conv_w (F, K), conv_b (F,), hidden_w (H, D), hidden_b (H,),
       policy_w (N, H), policy_b (N,), value_w (H,), value_b (1,)

   with D = F * conv_out_len + N + 1.
"""
from dataclasses import dataclass, asdict
import logging
import json
import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from aoipyt.errors import ConfigurationError, DimensionError, UsageError, CheckpointError
from aoipyt.values import safe_delete

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'aoipyt-checkpoint'
CHECKPOINT_VERSION = 1
HEAD_GAIN = 0.01


@dataclass(frozen=True)
class NetArch:
    n_sensors: int
    history_len: int = 10
    conv_filters: int = 128
    conv_kernel: int = 8
    conv_stride: int = 1
    hidden_units: int = 256

    def validate(self):
        if self.n_sensors < 2:
            raise ConfigurationError('arch.n_sensors', f'must be >= 2, got {self.n_sensors}')
        for key in ('conv_filters', 'conv_kernel', 'conv_stride', 'hidden_units'):
            if getattr(self, key) < 1:
                raise ConfigurationError(f'arch.{key}', f'must be >= 1, got {getattr(self, key)}')
        if self.history_len < self.conv_kernel:
            raise ConfigurationError('arch.conv_kernel', f'history_len ({self.history_len}) must be >= '
                                                         f'conv_kernel ({self.conv_kernel})')
        return self

    @property
    def conv_out_len(self):
        return (self.history_len - self.conv_kernel) // self.conv_stride + 1

    @property
    def conv_features(self):
        return self.conv_filters * self.conv_out_len

    @property
    def hidden_input(self):
        return self.conv_features + self.n_sensors + 1

    @property
    def obs_size(self):
        return self.n_sensors + 1 + self.history_len

    @property
    def layout(self):
        F, K, H, N = self.conv_filters, self.conv_kernel, self.hidden_units, self.n_sensors
        return (('conv_w', (F, K)), ('conv_b', (F,)),
                ('hidden_w', (H, self.hidden_input)), ('hidden_b', (H,)),
                ('policy_w', (N, H)), ('policy_b', (N,)),
                ('value_w', (H,)), ('value_b', (1,)))

    @property
    def n_params(self):
        return int(sum(np.prod(shape) for _, shape in self.layout))


def _unpack(arch, flat):
    views, start = {}, 0
    for name, shape in arch.layout:
        size = int(np.prod(shape))
        views[name] = flat[start:start + size].reshape(shape)
        start += size
    return views


class NetParams:
    """ Immutable snapshot of theta (actor) and theta_v (critic).

    The convolution and hidden layers are shared by both heads.
    """

    def __init__(self, arch, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (arch.n_params,):
            raise DimensionError(f'parameter vector has shape {theta.shape}, arch needs ({arch.n_params},)')
        self.arch = arch
        self.theta = theta.copy()
        self.theta.setflags(write=False)

    def unpack(self):
        return _unpack(self.arch, self.theta)

    def copy(self):
        return NetParams(self.arch, self.theta)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.theta)))

    def __eq__(self, other):
        return (isinstance(other, NetParams) and self.arch == other.arch
                and np.array_equal(self.theta, other.theta))


@dataclass
class ForwardOut:
    probs: np.ndarray
    value: float
    logits: np.ndarray
    cache: dict
    params: NetParams


@dataclass
class Gradients:
    """Ascent direction for the actor objective and descent direction for the
    squared TD error, both over the full flat parameter vector."""
    actor: np.ndarray
    critic: np.ndarray

    @classmethod
    def zeros(cls, arch):
        return cls(np.zeros(arch.n_params), np.zeros(arch.n_params))

    def __add__(self, other):
        return Gradients(self.actor + other.actor, self.critic + other.critic)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.actor)) and np.all(np.isfinite(self.critic)))

    def clipped(self, max_norm):
        """Rescales each direction separately to at most ``max_norm``."""
        def clip(g):
            norm = np.linalg.norm(g)
            return g * (max_norm / norm) if norm > max_norm else g
        return Gradients(clip(self.actor), clip(self.critic))


def init_params(arch, seed=0, head_gain=HEAD_GAIN):
    """ Fan-in scaled uniform weights, zero biases.

    Weights lie in ``[-g / sqrt(fan_in), g / sqrt(fan_in)]`` with g = 1 for
    the convolution and hidden layers and g = ``head_gain`` for the policy
    and value heads, so a fresh network starts from a nearly uniform policy
    and a nearly zero value.

    :param arch: network architecture
    :type arch: NetArch
    :param seed: seed of the initialization
    :type seed: int
    :param head_gain: weight scale of the two output layers
    :type head_gain: float
    :return: parameters
    :rtype: NetParams
    """
    arch.validate()
    rng = np.random.default_rng(seed)
    flat = np.zeros(arch.n_params)
    views = _unpack(arch, flat)
    fan_in = {'conv_w': arch.conv_kernel, 'hidden_w': arch.hidden_input,
              'policy_w': arch.hidden_units, 'value_w': arch.hidden_units}
    gain = {'policy_w': head_gain, 'value_w': head_gain}
    for name, _ in arch.layout:
        if name in fan_in:
            bound = gain.get(name, 1.0) / np.sqrt(fan_in[name])
            views[name][...] = rng.uniform(-bound, bound, size=views[name].shape)
    return NetParams(arch, flat)


def softmax(logits):
    z = np.asarray(logits, dtype=float)
    e = np.exp(z - np.max(z))
    return e / np.sum(e)


def entropy(probs):
    p = np.asarray(probs, dtype=float)
    safe = np.where(p > 0, p, 1.0)
    return float(-np.sum(np.where(p > 0, p * np.log(safe), 0.0)))


def forward(params, obs):
    arch = params.arch
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (arch.obs_size,):
        raise DimensionError(f'observation has shape {obs.shape}, arch expects ({arch.obs_size},)')
    p = params.unpack()
    N = arch.n_sensors

    history = obs[N + 1:]
    windows = sliding_window_view(history, arch.conv_kernel)[::arch.conv_stride]
    conv_pre = windows @ p['conv_w'].T + p['conv_b']
    conv = np.maximum(conv_pre, 0.0)
    x = np.concatenate((conv.ravel(), obs[:N + 1]))
    hidden_pre = p['hidden_w'] @ x + p['hidden_b']
    hidden = np.maximum(hidden_pre, 0.0)
    logits = p['policy_w'] @ hidden + p['policy_b']
    value = float(p['value_w'] @ hidden + p['value_b'][0])

    cache = dict(windows=windows, conv_pre=conv_pre, x=x, hidden_pre=hidden_pre, hidden=hidden)
    return ForwardOut(probs=softmax(logits), value=value, logits=logits, cache=cache, params=params)


def _backprop_trunk(arch, p, cache, g_hidden, g):
    g_hidden_pre = g_hidden * (cache['hidden_pre'] > 0)
    g['hidden_w'][...] = np.outer(g_hidden_pre, cache['x'])
    g['hidden_b'][...] = g_hidden_pre
    g_x = p['hidden_w'].T @ g_hidden_pre
    g_conv = g_x[:arch.conv_features].reshape(cache['conv_pre'].shape) * (cache['conv_pre'] > 0)
    g['conv_w'][...] = g_conv.T @ cache['windows']
    g['conv_b'][...] = g_conv.sum(axis=0)


def backward(params, cached, action, advantage, td_error, entropy_weight):
    """ Gradients of one transition.

    actor  = grad[ log pi(s, a) * advantage + rho * H(pi(s, .)) ]
    critic = -grad[ (target - V(s))^2 ] = 2 * td_error * grad V(s), target held fixed

    Applying ``theta += alpha * actor`` ascends the policy objective and
    ``theta += alpha_v * critic`` descends the squared TD error.

    :param params: parameters used for ``cached``
    :type params: NetParams
    :param cached: output of ``forward(params, obs)``
    :type cached: ForwardOut
    :param action: node index that was taken
    :type action: int
    :param advantage: D(s, a)
    :type advantage: float
    :param td_error: R + gamma V(s') - V(s)
    :type td_error: float
    :param entropy_weight: rho
    :type entropy_weight: float
    :return: actor and critic gradients
    :rtype: Gradients
    """
    if cached.params is not params:
        raise UsageError('forward cache was computed with different parameters')
    arch = params.arch
    if not 0 <= int(action) < arch.n_sensors:
        raise UsageError(f'action {action} outside [0, {arch.n_sensors})')
    p = params.unpack()
    c = cached.cache
    probs = cached.probs
    grads = Gradients.zeros(arch)

    log_probs = np.log(np.maximum(probs, np.finfo(float).tiny))
    g_logits = -advantage * probs
    g_logits[int(action)] += advantage
    g_logits += entropy_weight * (-probs * (log_probs + entropy(probs)))
    ga = _unpack(arch, grads.actor)
    ga['policy_w'][...] = np.outer(g_logits, c['hidden'])
    ga['policy_b'][...] = g_logits
    _backprop_trunk(arch, p, c, p['policy_w'].T @ g_logits, ga)

    g_value = 2.0 * td_error
    gc = _unpack(arch, grads.critic)
    gc['value_w'][...] = g_value * c['hidden']
    gc['value_b'][...] = g_value
    _backprop_trunk(arch, p, c, g_value * p['value_w'], gc)
    return grads


def save_checkpoint(path, params, metadata=None):
    """ Writes arch and parameter vector as JSON.

    Floats are written with their shortest round-trip representation, so
    loading restores the vector bit for bit. The file is written to a
    temporary name first and moved into place.
    """
    document = {'format': CHECKPOINT_FORMAT,
                'version': CHECKPOINT_VERSION,
                'arch': asdict(params.arch),
                'metadata': metadata or {},
                'params': params.theta.tolist()}
    tmp = f'{path}.tmp'
    try:
        with open(tmp, 'w') as f:
            json.dump(document, f, sort_keys=True)
        os.replace(tmp, path)
    except OSError as e:
        safe_delete(tmp)
        raise CheckpointError(f'Cannot write checkpoint "{path}": {e}')
    logger.info(f'Checkpoint written to {path} ({params.arch.n_params} parameters).')
    return path


def load_checkpoint(path):
    """ Reads a checkpoint written by ``save_checkpoint``.

    :return: (params, metadata)
    :rtype: tuple
    """
    if not os.path.exists(path):
        raise CheckpointError(f'Checkpoint "{path}" does not exist.')
    try:
        with open(path) as f:
            document = json.load(f)
    except ValueError as e:
        raise CheckpointError(f'Checkpoint "{path}" is not valid JSON: {e}')
    if document.get('format') != CHECKPOINT_FORMAT:
        raise CheckpointError(f'"{path}" is not an aoipyt checkpoint.')
    if document.get('version') != CHECKPOINT_VERSION:
        raise CheckpointError(f'Unsupported checkpoint version {document.get("version")}.')
    try:
        arch = NetArch(**document['arch']).validate()
        params = NetParams(arch, np.array(document['params'], dtype=float))
    except (TypeError, KeyError, ConfigurationError, DimensionError) as e:
        raise CheckpointError(f'Malformed checkpoint "{path}": {e}')
    return params, document.get('metadata', {})
