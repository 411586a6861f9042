"""
Beacon over two chains: majority of m LSBs from chain A and w LSBs from
chain B.

Chain B is c2 times cheaper to attack and its coins buy c1 times less, so an
adversary of power p on A has power min(c2 p, 1) on B, while chain-B rewards
and costs are expressed in chain-A coins by dividing by c1.
"""

from dataclasses import dataclass, replace
from functools import partial
import logging
import math

import numpy as np
import pandas as pd

from .core import BiasReport
from .extractors import majority
from .forkless import ForklessConfig, null_policy, run_forkless_chain
from . import utils

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiChainConfig:
    m: int = 21
    w: int = 0
    c1: float = 1.0
    c2: float = 1.0
    interval_ratio: float = 4.0
    p: float = 0.2
    d: int = 2 ** 16
    x: float = 50.0
    y_p: float = 9.0
    t1: float = 5.0
    t2: float = 5.0
    maxprofits_cap: float = 2.0
    delta: float = 2 / 3
    epsilon: float = 0.1
    zero_profit_mode: bool = False

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise ValueError(' '.join(errors))

    def violations(self):
        errors = []
        if not isinstance(self.m, int) or self.m < 1:
            errors.append('m must be a positive integer.')
        if not isinstance(self.w, int) or self.w < 0:
            errors.append('w must be a non-negative integer.')
        if not errors and (self.m + self.w) % 2 == 0:
            errors.append('m + w must be odd, got {}.'.format(self.m + self.w))
        if self.c1 < 1 or self.c2 < 1:
            errors.append('c1 and c2 must be >= 1.')
        if self.interval_ratio <= 0:
            errors.append('interval_ratio must be positive.')
        if not 0 <= self.p <= 1:
            errors.append('p must lie in [0, 1].')
        return errors

    @property
    def p_b(self):
        return min(self.c2 * self.p, 1.0)

    def _chain(self, n, p, scale):
        x, y_p = self.x / scale, self.y_p / scale
        if self.zero_profit_mode:
            #revenues only cover the mining costs
            y_p = p * x
        return ForklessConfig(
            p=p, d=self.d, n=n, x=x, y_p=y_p, t1=self.t1, t2=self.t2 / scale,
            maxprofits_cap=self.maxprofits_cap, delta=self.delta, epsilon=self.epsilon,
        )

    def chain_configs(self):
        """
        ForklessConfig of chain A and of chain B (None when w = 0).
        """
        if self.c2 * self.p >= 1 and self.w:
            logger.warning('chain B adversary saturates: c2 p = %.6g, clamped to 1', self.c2 * self.p)
        chain_a = self._chain(self.m, self.p, 1.0)
        chain_b = self._chain(self.w, self.p_b, self.c1) if self.w else None
        return chain_a, chain_b


def choose_w(c1, c2, m):
    """
    Chain-B block count that costs about as much to attack as m blocks of
    chain A, rounded half up.

    The result is not adjusted for parity: choose_w(100, 50, m) is 2m even
    though m + 2m is odd only for odd m. Pass it through odd_total_w to get
    an odd total for the combined majority.
    """
    if c1 < 1 or c2 < 1:
        raise ValueError('c1 and c2 must be >= 1.')
    if not isinstance(m, int) or m < 1:
        raise ValueError('m must be a positive integer.')
    return math.floor(c1 / c2 * m + 0.5)


def odd_total_w(m, w):
    return w if (m + w) % 2 else w + 1


def combined_majority(bits_a, bits_b):
    return majority(list(bits_a) + list(bits_b))


def run_multichain_beacon(cfg, strategyA=None, strategyB=None, seed=0):
    """
    Returns the output bit and the per-chain details: LSBs, ledgers, turns
    played and the duration in chain-A block intervals.
    """
    chain_a, chain_b = cfg.chain_configs()
    strategyA = null_policy() if strategyA is None else strategyA
    strategyB = null_policy() if strategyB is None else strategyB
    seed_a, seed_b = utils.spawn_seeds(seed, 2)

    lsbs_a, ledger_a, trace_a = run_forkless_chain(chain_a, strategyA, seed_a)
    lsbs_b, ledger_b, trace_b = (), None, ()
    if chain_b is not None:
        lsbs_b, ledger_b, trace_b = run_forkless_chain(chain_b, strategyB, seed_b)

    bit = combined_majority(lsbs_a, lsbs_b)
    return bit, {
        'lsbs_a': lsbs_a,
        'lsbs_b': lsbs_b,
        'ledger_a': ledger_a,
        'ledger_b': ledger_b,
        'turns_a': len(trace_a),
        'turns_b': len(trace_b),
        'duration': len(trace_a) + len(trace_b) / cfg.interval_ratio,
        'cost': ledger_a.spent + (ledger_b.spent if ledger_b is not None else 0.0),
    }


def _multichain_trial(trial_seed, cfg, strategyA, strategyB):
    bit, details = run_multichain_beacon(cfg, strategyA, strategyB, trial_seed)
    return bit, details['cost'], details['duration']


def multichain_trials(cfg, strategyA, strategyB, trials, seed, jobs=1, progress=None):
    fn = partial(_multichain_trial, cfg=cfg, strategyA=strategyA, strategyB=strategyB)
    values = utils.run_trials(fn, trials, seed, jobs=jobs, desc='multichain', progress=progress)
    return pd.DataFrame(values.reshape(trials, -1), columns=['bit', 'cost', 'duration'])


def estimate_multichain_bias(cfg, strategyA, strategyB, trials, seed, confidence=0.95,
                             method='hoeffding', jobs=1):
    df = multichain_trials(cfg, strategyA, strategyB, trials, seed, jobs=jobs)
    return BiasReport.from_bits(df['bit'].to_numpy().astype(int), seed, confidence=confidence, method=method)


def cost_per_bias_sweep(cfg, ws, strategyA, strategyB, trials, seed, confidence=0.95, jobs=1):
    """
    Bias, mean adversary spending (chain-A coins) and spending per unit of
    bias for several chain-B lengths. Each w is raised to the next value
    keeping m + w odd.
    """
    rows = []
    for w in ws:
        current = replace(cfg, w=odd_total_w(cfg.m, w))
        df = multichain_trials(current, strategyA, strategyB, trials, seed, jobs=jobs)
        report = BiasReport.from_bits(df['bit'].to_numpy().astype(int), seed, confidence=confidence)
        cost = float(df['cost'].mean())
        rows.append({
            'w': current.w,
            'estimate': report.estimate,
            'ci_halfwidth': report.ci_halfwidth,
            'cost': cost,
            'cost_per_bias': cost / report.estimate if report.estimate > 0 else np.inf,
            'duration': float(df['duration'].mean()),
        })
    return pd.DataFrame(rows)
