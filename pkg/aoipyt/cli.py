# -*- coding: utf-8 -*-
"""
   Command-line front-end.

   aoipyt train    --config table1.cfg [--seed S] [--episodes E] [--workers W] [--output DIR]
   aoipyt evaluate --config table1.cfg --policy SPEC
   aoipyt compare  --config table1.cfg --policy SPEC --policy SPEC [...]

   Policy specs: ``benchmark``, ``round_robin``, ``max_age``, ``learned``
   (checkpoint of the output directory) or ``checkpoint:<path>``; any spec
   may end in ``@<seed>`` to evaluate it with its own seed.

   Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime failure.
"""
from dataclasses import replace
import threading
import argparse
import logging
import signal
import json
import sys
import os
import re

from aoipyt import __version__
from aoipyt.config import parse_config, write_config, config_hash, DEFAULT_SCENARIO
from aoipyt.errors import AoIError, ConfigurationError, DomainError, UsageError, LifecycleError
from aoipyt.metrics import evaluate_policy, compare, write_table
from aoipyt.net import save_checkpoint, load_checkpoint
from aoipyt.policy import make_policy, POLICY_NAMES, LEARNED, MODE_ARGMAX, MODE_SAMPLE
from aoipyt.train import train

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = 'checkpoint.json'
TRAIN_LOG_FILE = 'train_log.jsonl'
CONFIG_FILE = 'config.cfg'
COMPARISON_FILE = 'comparison.csv'
CHECKPOINT_PREFIX = 'checkpoint:'

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _ArgumentParser(prog='aoipyt', description='AoI-aware sensor scheduling: train, evaluate, compare.')
    parser.add_argument('--version', action='version', version=f'aoipyt {__version__}')
    commands = parser.add_subparsers(dest='command', metavar='{train,evaluate,compare}')
    commands.required = True

    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', default=DEFAULT_SCENARIO, help='scenario file or packaged scenario name')
    common.add_argument('--seed', type=int, help='override train and eval seeds')
    common.add_argument('--episodes', type=int, help='override the number of training episodes')
    common.add_argument('--workers', type=int, help='override the number of training workers')
    common.add_argument('--output', help='override the output directory')
    common.add_argument('--verbose', action='store_true', help='debug logging')

    commands.add_parser('train', parents=[common], help='train the actor-critic scheduler')
    for name, helptext, action in (('evaluate', 'evaluate one policy', 'store'),
                                    ('compare', 'compare policies on identical seeds', 'append')):
        sub = commands.add_parser(name, parents=[common], help=helptext)
        sub.add_argument('--policy', required=True, action=action, dest='policy',
                         help=f'one of {", ".join(POLICY_NAMES)} or {CHECKPOINT_PREFIX}<path>, optional @<seed>')
        sub.add_argument('--mode', choices=(MODE_ARGMAX, MODE_SAMPLE),
                         help='evaluation mode of learned policies')
    return parser


def _prepare_output(config):
    try:
        os.makedirs(config.output_dir, exist_ok=True)
    except OSError as e:
        raise ConfigurationError('output.dir', f'cannot create {config.output_dir!r}: {e}')
    if not os.access(config.output_dir, os.W_OK):
        raise ConfigurationError('output.dir', f'{config.output_dir!r} is not writable')
    return config.output_dir


def cmd_train(config, stop_event=None):
    """ Trains, then writes ``checkpoint.json``, ``train_log.jsonl`` and
    ``config.cfg`` into the output directory.

    An abort through ``stop_event`` still writes a complete checkpoint of
    the last committed parameters and then raises LifecycleError.

    :rtype: str
    """
    out = _prepare_output(config)
    digest = config_hash(config)
    write_config(config, os.path.join(out, CONFIG_FILE))

    progress = logging.getLogger('aoipyt.train.progress')
    handler = logging.FileHandler(os.path.join(out, TRAIN_LOG_FILE), mode='w', encoding='utf-8')
    handler.setFormatter(logging.Formatter('%(message)s'))
    handler.setLevel(logging.INFO)
    previous_level = progress.level
    progress.addHandler(handler)
    progress.setLevel(logging.INFO)
    try:
        progress.info(json.dumps({'config_hash': digest, 'seed': config.train.seed,
                                  'episodes': config.train.episodes, 'n_workers': config.train.n_workers},
                                 sort_keys=True))
        model, stats = train(config.env, config.arch, config.train, stop_event=stop_event)
    finally:
        progress.removeHandler(handler)
        progress.setLevel(previous_level)
        handler.close()

    path = save_checkpoint(os.path.join(out, CHECKPOINT_FILE), model.params,
                           metadata={'config_hash': digest, 'seed': config.train.seed,
                                     'version': model.version, 'episodes': len(stats.records),
                                     'aborted': stats.aborted})
    if stats.aborted:
        raise LifecycleError(f'training aborted after {len(stats.records)} episodes; '
                             f'partial checkpoint written to {path}')
    logger.info(f'Trained {len(stats.records)} episodes, {model.version} updates.')
    return path


def parse_policy_spec(spec):
    """ Splits a policy spec into (name, checkpoint path, seed).

    >>> parse_policy_spec('checkpoint:out/checkpoint.json@3')
    ('learned', 'out/checkpoint.json', 3)
    """
    seed = None
    match = re.fullmatch(r'(.+)@(-?\d+)', spec)
    if match:
        spec, seed = match.group(1), int(match.group(2))
    if spec.startswith(CHECKPOINT_PREFIX):
        path = spec[len(CHECKPOINT_PREFIX):]
        if not path:
            raise UsageError(f'missing checkpoint path in policy spec {spec!r}')
        return LEARNED, path, seed
    if spec not in POLICY_NAMES:
        raise UsageError(f'unknown policy {spec!r}; use one of {POLICY_NAMES} or {CHECKPOINT_PREFIX}<path>')
    return spec, None, seed


def resolve_policy(spec, config, mode=None):
    """:return: (policy, seed)"""
    name, path, seed = parse_policy_spec(spec)
    params = None
    if name == LEARNED:
        path = path or os.path.join(config.output_dir, CHECKPOINT_FILE)
        params, metadata = load_checkpoint(path)
        if metadata.get('aborted'):
            logger.warning(f'Checkpoint {path} comes from an aborted training run.')
    policy = make_policy(name, config.env, params=params, mode=mode or config.eval.mode)
    return policy, config.eval.seed if seed is None else seed


def _label(spec):
    return re.sub(r'[^A-Za-z0-9_.-]+', '_', spec).strip('_') or 'policy'


def _evaluate(config, policy, seed, label):
    report = evaluate_policy(policy, config.env, config.eval.episodes, config.eval.horizon, seed,
                             cdf_step=config.eval.cdf_step, config_hash=config_hash(config))
    return replace(report, policy=label)


def cmd_evaluate(config, policy_spec, mode=None):
    """ Writes ``eval_<policy>/summary.json`` and one ``cdf_node<n>.csv``
    per node.

    :rtype: Report
    """
    out = _prepare_output(config)
    policy, seed = resolve_policy(policy_spec, config, mode)
    label = _label(policy_spec)
    report = _evaluate(config, policy, seed, label)
    directory = os.path.join(out, f'eval_{label}')
    os.makedirs(directory, exist_ok=True)
    report.write_summary(os.path.join(directory, 'summary.json'))
    report.write_cdf_tables(directory)
    return report


def cmd_compare(config, policy_specs, mode=None):
    """ Evaluates every spec on the same seed and scenario and writes
    ``comparison.csv``.

    :rtype: pandas.DataFrame
    """
    if len(policy_specs) < 2:
        raise UsageError(f'compare needs at least 2 policies, got {len(policy_specs)}')
    resolved = [resolve_policy(spec, config, mode) for spec in policy_specs]
    seeds = sorted({seed for _, seed in resolved})
    if len(seeds) > 1:
        raise UsageError(f'policies must be evaluated with the same seed, got {seeds}')
    out = _prepare_output(config)

    reports, seen = {}, {}
    for spec, (policy, seed) in zip(policy_specs, resolved):
        label = _label(spec)
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f'{label}_{seen[label]}'
        reports[label] = _evaluate(config, policy, seed, label)
    table = compare(reports)
    write_table(table, os.path.join(out, COMPARISON_FILE), table.attrs)
    return table


def _configure_logging(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def run(args, stop_event=None):
    config = parse_config(args.config, seed=args.seed, episodes=args.episodes,
                          workers=args.workers, output=args.output)
    if args.command == 'train':
        path = cmd_train(config, stop_event=stop_event)
        print(f'Checkpoint written to {path}.')
    elif args.command == 'evaluate':
        report = cmd_evaluate(config, args.policy, args.mode)
        print(f'{report.policy}: objective {report.objective:.6g} '
              f'(std. error {report.objective_stderr:.3g}).')
    else:
        table = cmd_compare(config, args.policy, args.mode)
        print(table.to_string())


def main(argv=None):
    """Console entry point; returns the exit code."""
    stop_event = threading.Event()
    previous = None
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.verbose)
        if threading.current_thread() is threading.main_thread():
            previous = signal.signal(signal.SIGINT, lambda signum, frame: stop_event.set())
        run(args, stop_event)
        return EXIT_OK
    except UsageError as e:
        print(f'aoipyt: usage error: {e}', file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, DomainError) as e:
        print(f'aoipyt: invalid configuration: {e}', file=sys.stderr)
        return EXIT_VALIDATION
    except AoIError as e:
        print(f'aoipyt: error: {e}', file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.debug('Unhandled failure.', exc_info=True)
        print(f'aoipyt: failure: {type(e).__name__}: {e}', file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        if previous is not None:
            signal.signal(signal.SIGINT, previous)


if __name__ == '__main__':
    sys.exit(main())
