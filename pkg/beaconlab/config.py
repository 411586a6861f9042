"""
Loading and validation of experiment configurations.

A configuration is a JSON file, or a mapping with the same content:

    {
        "experiment": "forkless",
        "params": {"p": 0.2, "n": 101, "schedule": "filter"},
        "trials": 10000,
        "seed": 7,
        "confidence": 0.95,
        "output_path": "forkless.csv",
        "format": "csv",
        "jobs": 4,
        "timestamp": true
    }

`params` mixes the fields of the module config (ForklessConfig,
BackboneConfig, ...) with the experiment options listed in OPTIONS. The
environment variable BEACON_LAB_SEED overrides the seed of the file;
explicit overrides (the CLI flags) win over both.
"""

import collections.abc
import dataclasses
import json
import logging
import os

from .backbone import STRATEGIES, BackboneConfig
from .errors import ConfigError
from .forkless import SCHEDULES, ForklessConfig
from .hybrid import HybridConfig
from .multichain import MultiChainConfig
from . import utils

logger = logging.getLogger(__name__)

EXPERIMENTS = ['lowerbound', 'forkless', 'backbone', 'hybrid', 'multichain', 'verify']
FORMATS = ['csv', 'json']
SEED_ENV = 'BEACON_LAB_SEED'

TOP_LEVEL_KEYS = ['experiment', 'params', 'trials', 'seed', 'confidence', 'output_path', 'format', 'jobs', 'timestamp']

DEFAULTS = {
    'params': {},
    'trials': 1000,
    'seed': 0,
    'confidence': 0.95,
    'output_path': None,
    'format': 'csv',
    'jobs': None,
    'timestamp': True,
}

MODULE_CONFIGS = {
    'forkless': ForklessConfig,
    'backbone': BackboneConfig,
    'hybrid': HybridConfig,
    'multichain': MultiChainConfig,
}

#module config fields whose json key differs from the attribute name
FIELD_ALIASES = {
    'backbone': {'lambda': 'lambda_'},
}

#experiment options accepted in `params`, with their defaults
OPTIONS = {
    'lowerbound': {
        'mode': 'exact', 'd': 2, 'ns': [1, 2, 3], 'ps': [0.25, 0.5, 1.0], 'random_extractors': 500,
        'exhaustive_up_to': 2, 'targets': 1000, 'max_d': 8, 'n': 3, 'p': 0.5, 'samples': 4096,
        'method': 'wilson',
    },
    'forkless': {
        'mode': 'bias', 'schedule': 'filter', 'switch_at': None, 'filter_until': None, 'min_coins': 0.0,
        'ns': [], 'ells': [18, 90], 'p_primes': [0.05, 0.1], 'method': 'hoeffding',
    },
    'backbone': {
        'mode': 'bias', 'strategy': 'honest_mimic', 'strategy_params': {}, 'budget': None,
        'ks': [1, 3, 6, 12], 'rounds': None, 'desired_bit': 1, 'method': 'hoeffding',
    },
    'hybrid': {
        'adversary': 'idle', 'corrupted': 0, 'desired': 1, 'quota': None, 'epsilon': None,
        'forkless': {}, 'backbone': {}, 'method': 'hoeffding',
    },
    'multichain': {
        'mode': 'bias', 'schedule_a': 'filter', 'schedule_b': 'filter', 'ws': [], 'method': 'hoeffding',
    },
    'verify': {
        'random_extractors': 50, 'targets': 100,
    },
}

MODES = {
    'lowerbound': ['exact', 'embedding', 'efficient'],
    'forkless': ['bias', 'trend', 'negbin'],
    'backbone': ['bias', 'prefix', 'agreement', 'bankruptcy', 'share'],
    'multichain': ['bias', 'sweep'],
}

HYBRID_ADVERSARIES = ['idle', 'majority_control', 'adaptive_round']


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict
    trials: int
    seed: int
    confidence: float
    output_path: str
    format: str
    jobs: int
    timestamp: bool
    module_config: object = dataclasses.field(default=None, compare=False, repr=False)
    options: dict = dataclasses.field(default=None, compare=False, repr=False)

    #the configuration as written back into reports
    def echo(self):
        return {key: getattr(self, key) for key in TOP_LEVEL_KEYS}

    @property
    def hash(self):
        #output location, parallelism and timestamps do not change results
        payload = {key: value for key, value in self.echo().items() if key not in ('output_path', 'jobs', 'timestamp')}
        return utils.config_hash(payload)


def read_config(source):
    if isinstance(source, collections.abc.Mapping):
        return dict(source)
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, 'r') as f:
                raw = json.load(f)
        except FileNotFoundError:
            raise ConfigError('Config file {} not found.'.format(source))
        except json.JSONDecodeError as e:
            raise ConfigError('Config file {} is not valid JSON: {}.'.format(source, e))
        if not isinstance(raw, dict):
            raise ConfigError('The config must be a JSON object.')
        return raw
    raise ValueError('Config must be a mapping or path to file')


def _check_top_level(raw):
    errors = []
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            errors.append('{}: unknown key. Accepted keys: {}.'.format(key, ', '.join(TOP_LEVEL_KEYS)))
    if raw.get('experiment') not in EXPERIMENTS:
        errors.append('experiment: {!r} is not valid. Accepted values: {}.'.format(
            raw.get('experiment'), ', '.join(EXPERIMENTS)))
    trials = raw['trials']
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        errors.append('trials: must be a positive integer.')
    try:
        utils.check_seed(raw['seed'])
    except (TypeError, ValueError) as e:
        errors.append('seed: {}'.format(e))
    confidence = raw['confidence']
    if isinstance(confidence, bool) or not isinstance(confidence, (int, float)) or not 0 < confidence < 1:
        errors.append('confidence: must lie strictly between 0 and 1.')
    if raw['format'] not in FORMATS:
        errors.append('format: {!r} is not valid. Accepted values: {}.'.format(raw['format'], ', '.join(FORMATS)))
    jobs = raw['jobs']
    if jobs is not None and (isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1):
        errors.append('jobs: must be a positive integer.')
    if not isinstance(raw['timestamp'], bool):
        errors.append('timestamp: must be true or false.')
    if raw['output_path'] is not None and not isinstance(raw['output_path'], str):
        errors.append('output_path: must be a string.')
    if not isinstance(raw['params'], dict):
        errors.append('params: must be an object.')
    return errors


def _check_options(experiment, options):
    errors = []
    if experiment in MODES and options.get('mode') not in MODES[experiment]:
        errors.append('params.mode: {!r} is not valid. Accepted values: {}.'.format(
            options.get('mode'), ', '.join(MODES[experiment])))
    if experiment in ('forkless',) and options['schedule'] not in SCHEDULES + ['example']:
        errors.append('params.schedule: not valid. Accepted values: {}.'.format(', '.join(SCHEDULES + ['example'])))
    if experiment == 'multichain':
        for key in ('schedule_a', 'schedule_b'):
            if options[key] not in SCHEDULES + ['example']:
                errors.append('params.{}: not valid. Accepted values: {}.'.format(key, ', '.join(SCHEDULES + ['example'])))
    if experiment == 'backbone' and options['strategy'] not in STRATEGIES:
        errors.append('params.strategy: not valid. Accepted values: {}.'.format(', '.join(STRATEGIES)))
    if experiment == 'hybrid':
        if options['adversary'] not in HYBRID_ADVERSARIES:
            errors.append('params.adversary: not valid. Accepted values: {}.'.format(', '.join(HYBRID_ADVERSARIES)))
        if options['adversary'] == 'adaptive_round' and options['quota'] is None and options['epsilon'] is None:
            errors.append('params.quota: the adaptive adversary needs a quota or an epsilon.')
    return errors


def build_module_config(experiment, params):
    """
    Split `params` into the module config and the experiment options.
    Returns (module_config, options, errors).
    """
    errors = []
    options = dict(OPTIONS.get(experiment, {}))
    cls = MODULE_CONFIGS.get(experiment)
    aliases = FIELD_ALIASES.get(experiment, {})
    names = {f.name for f in dataclasses.fields(cls)} if cls else set()
    fields = {}
    for key, value in params.items():
        name = aliases.get(key, key)
        if name in names:
            fields[name] = value
        elif key in options:
            options[key] = value
        else:
            errors.append('params.{}: unknown parameter for the {} experiment.'.format(key, experiment))
    errors.extend(_check_options(experiment, options))

    module_config = None
    if cls is not None:
        try:
            module_config = cls(**fields)
        except (TypeError, ValueError) as e:
            errors.append('params: {}'.format(e))
    return module_config, options, errors


def load_config(source, overrides=None, environ=None):
    """
    Read, merge and validate a configuration. Every problem found is
    reported at once through ConfigError.
    """
    raw = read_config(source)
    merged = dict(DEFAULTS)
    merged.update(raw)
    environ = os.environ if environ is None else environ
    if environ.get(SEED_ENV):
        try:
            merged['seed'] = int(environ[SEED_ENV])
        except ValueError:
            raise ConfigError('{}: must be an integer, got {!r}.'.format(SEED_ENV, environ[SEED_ENV]))
        logger.info('seed overridden by %s', SEED_ENV)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    errors = _check_top_level(merged)
    module_config, options = None, None
    if not errors:
        module_config, options, module_errors = build_module_config(merged['experiment'], merged['params'])
        errors.extend(module_errors)
    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        experiment=merged['experiment'], params=dict(merged['params']), trials=merged['trials'],
        seed=utils.check_seed(merged['seed']), confidence=float(merged['confidence']),
        output_path=merged['output_path'], format=merged['format'], jobs=merged['jobs'],
        timestamp=merged['timestamp'], module_config=module_config, options=options,
    )
