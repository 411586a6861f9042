from . import core, extractors, lowerbound, forkless, backbone, hybrid, multichain, verify
from .config import load_config
from .experiment import Experiment
from .report import Report, emit_report, load_report
from .core import BiasReport, Distribution
