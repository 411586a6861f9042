"""
beacon-lab <experiment> --config FILE [--trials N] [--seed S] [--out PATH]
           [--format csv|json] [--jobs J] [--no-timestamp] [--log-level LEVEL]

Exit status: 0 when every check passed, 2 when a bound was violated, 1 on a
configuration error and 3 when the run itself failed (e.g. a simulation timed
out).
"""

import argparse
import logging
import sys

from .config import EXPERIMENTS, FORMATS, load_config
from .errors import ConfigError, SimulationTimeout
from .experiment import Experiment
from .report import emit_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_BOUND_VIOLATION = 2
EXIT_RUNTIME_ERROR = 3

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def build_parser():
    parser = argparse.ArgumentParser(prog='beacon-lab', description='Run a randomness-beacon experiment.')
    parser.add_argument('experiment', choices=EXPERIMENTS)
    parser.add_argument('--config', required=True, help='JSON experiment configuration.')
    parser.add_argument('--trials', type=int)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--out', dest='output_path', help='Report path, stdout when omitted.')
    parser.add_argument('--format', choices=FORMATS)
    parser.add_argument('--jobs', type=int, help='Worker processes, all cores by default.')
    parser.add_argument('--no-timestamp', dest='timestamp', action='store_false', default=None)
    parser.add_argument('--log-level', default='WARNING', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    return parser


def run_experiment(cfg, stream=None):
    """
    Run a loaded configuration, write its report and return the exit status.
    """
    report = Experiment(cfg).run()
    text = emit_report(report, cfg.format, cfg.output_path)
    if cfg.output_path is None:
        (stream or sys.stdout).write(text)
    if not report.passed:
        logger.warning('%s experiment: a bound was violated', cfg.experiment)
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)

    overrides = {
        'experiment': args.experiment,
        'trials': args.trials,
        'seed': args.seed,
        'output_path': args.output_path,
        'format': args.format,
        'jobs': args.jobs,
        'timestamp': args.timestamp,
    }
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as e:
        sys.stderr.write(str(e) + '\n')
        return EXIT_CONFIG_ERROR
    try:
        return run_experiment(cfg)
    except ConfigError as e:
        sys.stderr.write(str(e) + '\n')
        return EXIT_CONFIG_ERROR
    except SimulationTimeout as e:
        logger.error('%s experiment timed out: %s', cfg.experiment, e)
        return EXIT_RUNTIME_ERROR
    except Exception:
        logger.exception('%s experiment failed', cfg.experiment)
        return EXIT_RUNTIME_ERROR


if __name__ == '__main__':
    sys.exit(main())
