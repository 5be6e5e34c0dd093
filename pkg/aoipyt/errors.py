# -*- coding: utf-8 -*-
"""
   Exceptions raised by the AoI-Python Toolkit.

   Every class also derives from the builtin exception a caller would
   naturally catch (ValueError, IndexError, RuntimeError, IOError), so
   code written against plain Python errors keeps working.
"""


class AoIError(Exception):
    """Base class of all toolkit errors."""


class ConfigurationError(AoIError, ValueError):
    """Invalid scenario, architecture, training or experiment configuration.

    The message starts with the key path of the offending value,
    e.g. ``env.success_prob``.
    """

    def __init__(self, key, message):
        self.key = key
        super().__init__(f'{key}: {message}')


class DomainError(AoIError, ValueError):
    """A probability, threshold or rate outside its mathematical domain."""


class ActionError(AoIError, IndexError):
    """Scheduling decision outside ``[0, N)``."""


class LifecycleError(AoIError, RuntimeError):
    """Operation not allowed in the current state (e.g. step after done)."""


class DimensionError(AoIError, ValueError):
    """Observation or parameter vector with the wrong shape."""


class UsageError(AoIError, ValueError):
    """API misuse: empty traces or rollouts, stale caches, mismatched reports."""


class CheckpointError(AoIError, IOError):
    """Missing or malformed model checkpoint."""
