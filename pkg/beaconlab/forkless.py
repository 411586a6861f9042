"""
Turn-based mining without forks. Each turn the adversary succeeds with
probability p and may publish or discard its block; otherwise the chain
grows by a uniform block. The beacon bit is the majority of the n block
LSBs. Adversaries pay for every trial and go bankrupt when they cannot.
"""

from dataclasses import dataclass, field, replace
from functools import partial
from typing import NamedTuple
import logging
import math

import numpy as np
import pandas as pd
from scipy import stats

from .core import BiasReport
from .errors import BoundNotApplicableError
from .extractors import ell_raw, majority
from . import utils

logger = logging.getLogger(__name__)

HONEST_MODE = 'honest_mode'
FILTER_MODE = 'filter_mode'
IDLE_BANKRUPT = 'idle_bankrupt'

HONEST = 'honest'
ADVERSARY = 'adversary'

CHARGE_MODES = ['per_turn', 'per_location']
SCHEDULES = ['honest', 'filter', 'honest_then_filter', 'budget']

#random draws fetched from the generator at once
STREAM_CHUNK = 4096


@dataclass(frozen=True)
class ForklessConfig:
    p: float = 0.2
    d: int = 2 ** 16
    n: int = 101
    x: float = 50.0
    y_p: float = 9.0
    t1: float = 5.0
    t2: float = 5.0
    maxprofits_cap: float = 2.0
    profit_rate: float = None
    delta: float = 2 / 3
    epsilon: float = 0.1
    charge_mode: str = 'per_turn'
    unlimited_budget: bool = False

    def __post_init__(self):
        errors = self.violations(strict=False)
        if errors:
            raise ValueError(' '.join(errors))

    def violations(self, strict=True):
        """
        Broken invariants. With strict=True the margin hypotheses of the bias
        bound (z_p > 0, w_p < 0) are included.
        """
        errors = []
        if not 0 <= self.p <= 1:
            errors.append('p must lie in [0, 1].')
        if not isinstance(self.d, int) or self.d < 2 or self.d % 2:
            errors.append('d must be an even integer >= 2.')
        if not isinstance(self.n, int) or self.n < 1:
            errors.append('n must be a positive integer.')
        if min(self.x, self.y_p, self.t1, self.t2, self.maxprofits_cap) < 0:
            errors.append('x, y_p, t1, t2 and maxprofits_cap cannot be negative.')
        if not 0.5 < self.delta < 1:
            errors.append('delta must lie in (1/2, 1).')
        if not 0 <= self.epsilon <= math.e / math.pi:
            errors.append('epsilon must lie in [0, e/pi].')
        if self.charge_mode not in CHARGE_MODES:
            errors.append('charge_mode must be one of {}.'.format(', '.join(CHARGE_MODES)))
        if strict and not errors:
            if self.z_p <= 0:
                errors.append('z_p = p x - y_p must be positive, got {:.6g}.'.format(self.z_p))
            if self.w_p >= 0:
                errors.append('w_p = p\' x / delta - y_p must be negative, got {:.6g}.'.format(self.w_p))
        return errors

    #chance that a filtering adversary's block fills a location
    @property
    def p_prime(self):
        return (self.p / 2) / (1 - self.p / 2)

    @property
    def z_p(self):
        return self.p * self.x - self.y_p

    @property
    def w_p(self):
        return self.p_prime * self.x / self.delta - self.y_p

    @property
    def rate(self):
        return max(self.z_p if self.profit_rate is None else self.profit_rate, 0.0)

    def maxprofits(self, t, i):
        return min(self.maxprofits_cap * t, self.rate * i)

    def T(self, i):
        return self.t2 + self.maxprofits(self.t1, i)

    @property
    def ell(self):
        if self.epsilon == 0 or self.n < 2:
            return 0
        return ell_raw(self.n, self.epsilon)

    def budget_condition(self):
        if self.p_prime == 0:
            return float('inf')
        return self.T(self.n) + self.delta * (1 / self.p_prime) * self.ell * self.w_p


@dataclass
class BudgetLedger:
    """
    Coin account of an adversary. `honest_profit` is the net gain made while
    mining honestly, capped by maxprofits.
    """
    initial: float
    coins: float = None
    earned: float = 0.0
    spent: float = 0.0
    honest_profit: float = 0.0
    profits_cap_remaining: float = float('inf')
    bankrupt: bool = False
    unlimited: bool = False

    def __post_init__(self):
        if self.coins is None:
            self.coins = self.initial

    @classmethod
    def for_config(cls, cfg):
        return cls(initial=cfg.t2, unlimited=cfg.unlimited_budget)

    def charge(self, cost, honest=False):
        if self.bankrupt:
            return False
        if not self.unlimited and self.coins < cost:
            self.bankrupt = True
            return False
        self.spent += cost
        self.coins -= cost
        if honest:
            self.honest_profit -= cost
        return True

    def credit(self, amount, honest=False, cap=None):
        if self.bankrupt:
            return 0.0
        if honest and cap is not None and not self.unlimited:
            headroom = max(cap - self.honest_profit, 0.0)
            amount = min(amount, headroom)
            self.profits_cap_remaining = headroom - amount
        if honest:
            self.honest_profit += amount
        self.earned += amount
        self.coins += amount
        return amount

    def balanced(self, tolerance=1e-9):
        return abs(self.coins - (self.initial + self.earned - self.spent)) <= tolerance


class TurnTrace(NamedTuple):
    turn: int
    adversary_successful: bool
    block_symbol: int
    published_by: str
    adversary_mode: str
    discarded: bool


@dataclass(frozen=True)
class TwoModePolicy:
    """
    Chooses between honest mining and filtering (publishing helpful blocks
    only). Filtering is never abandoned in the middle of a location.

    schedule:
      honest              always honest
      filter              always filter
      honest_then_filter  filter for locations in [switch_at, filter_until)
      budget              filter while coins exceed min_coins + y_p
    """
    schedule: str = 'honest_then_filter'
    switch_at: int = None
    filter_until: int = None
    min_coins: float = 0.0

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError('Schedule not valid. Accepted values: {}.'.format(', '.join(SCHEDULES)))

    def desired_mode(self, location, ledger, cfg):
        if self.schedule == 'honest':
            return HONEST_MODE
        if self.schedule == 'filter':
            return FILTER_MODE
        if self.schedule == 'honest_then_filter':
            start = cfg.n // 2 if self.switch_at is None else self.switch_at
            stop = cfg.n if self.filter_until is None else self.filter_until
            return FILTER_MODE if start <= location < stop else HONEST_MODE
        if ledger.unlimited or ledger.coins > self.min_coins + cfg.y_p:
            return FILTER_MODE
        return HONEST_MODE


def two_mode_policy(cfg, schedule='honest_then_filter', **kwargs):
    if schedule == 'example':
        #honest during the first half, then filtering for a quarter of the locations
        return TwoModePolicy('honest_then_filter', switch_at=cfg.n // 2, filter_until=(3 * cfg.n) // 4)
    return TwoModePolicy(schedule, **kwargs)


def null_policy(cfg=None):
    return TwoModePolicy(HONEST)


@dataclass(frozen=True)
class ForklessState:
    turn: int = 0
    location: int = 0
    lsbs: tuple = ()
    mode: str = HONEST_MODE
    pending_discards: int = 0
    location_charged: bool = False
    ledger: BudgetLedger = field(default=None, compare=False)
    cfg: ForklessConfig = field(default=None, compare=False, repr=False)

    @classmethod
    def initial(cls, cfg):
        return cls(ledger=BudgetLedger.for_config(cfg), cfg=cfg)

    @property
    def terminal(self):
        return self.location >= self.cfg.n


@dataclass
class _Live:
    turn: int
    location: int
    lsbs: list
    ones: int
    mode: str
    pending_discards: int
    location_charged: bool
    ledger: BudgetLedger


class TurnStream:
    """
    Source of (uniform, symbol) pairs for successive turns, drawn in chunks
    from a numpy Generator.
    """

    def __init__(self, rng, d, chunk=STREAM_CHUNK):
        self.rng = rng
        self.d = d
        self.chunk = chunk
        self._u = np.empty(0)
        self._symbols = np.empty(0, dtype=np.int64)
        self._i = 0

    def next(self):
        if self._i == len(self._u):
            self._u = self.rng.random(self.chunk)
            self._symbols = self.rng.integers(0, self.d, size=self.chunk)
            self._i = 0
        i = self._i
        self._i += 1
        return float(self._u[i]), int(self._symbols[i])


def _extend(live, symbol):
    bit = symbol % 2
    live.location += 1
    live.ones += bit
    if live.lsbs is not None:
        live.lsbs.append(bit)
    live.pending_discards = 0
    live.location_charged = False


def _advance(cfg, policy, live, u, symbol):
    live.turn += 1
    ledger = live.ledger

    if live.mode == IDLE_BANKRUPT or cfg.p == 0:
        _extend(live, symbol)
        return TurnTrace(live.turn, False, symbol, HONEST, live.mode, False)

    desired = policy.desired_mode(live.location, ledger, cfg)
    if live.mode == FILTER_MODE and desired == HONEST_MODE and live.pending_discards:
        desired = FILTER_MODE
    live.mode = desired
    honest = desired == HONEST_MODE

    if cfg.charge_mode == 'per_turn' or not live.location_charged:
        if not ledger.charge(cfg.y_p, honest=honest):
            live.mode = IDLE_BANKRUPT
            logger.debug('adversary bankrupt at turn %d, location %d', live.turn, live.location)
            _extend(live, symbol)
            return TurnTrace(live.turn, False, symbol, HONEST, IDLE_BANKRUPT, False)
        live.location_charged = True

    if u >= cfg.p:
        _extend(live, symbol)
        return TurnTrace(live.turn, False, symbol, HONEST, desired, False)

    if desired == FILTER_MODE and symbol % 2 == 0:
        live.pending_discards += 1
        return TurnTrace(live.turn, True, symbol, ADVERSARY, desired, True)

    ledger.credit(cfg.x, honest=honest, cap=cfg.maxprofits(cfg.t1, live.location + 1))
    _extend(live, symbol)
    return TurnTrace(live.turn, True, symbol, ADVERSARY, desired, False)


def _as_stream(rng, d):
    if isinstance(rng, TurnStream):
        return rng
    return TurnStream(utils.make_rng(rng), d, chunk=1)


def step(state, policy, rng):
    """
    Play one turn from `state`. Returns the next state and the turn's trace;
    `state` itself is left untouched. Pass a TurnStream to replay the draws
    of run_forkless_chain.
    """
    cfg = state.cfg
    if state.terminal:
        raise ValueError('The beacon already has its n blocks.')
    stream = _as_stream(rng, cfg.d)
    live = _Live(
        turn=state.turn, location=state.location, lsbs=list(state.lsbs), ones=sum(state.lsbs),
        mode=state.mode, pending_discards=state.pending_discards,
        location_charged=state.location_charged, ledger=replace(state.ledger),
    )
    u, symbol = stream.next()
    trace = _advance(cfg, policy, live, u, symbol)
    new_state = ForklessState(
        turn=live.turn, location=live.location, lsbs=tuple(live.lsbs), mode=live.mode,
        pending_discards=live.pending_discards, location_charged=live.location_charged, ledger=live.ledger, cfg=cfg,
    )
    return new_state, trace


def run_forkless_chain(cfg, policy, rng_seed):
    """
    Play turns until n blocks exist. Returns (lsbs, ledger, trace).
    """
    stream = TurnStream(utils.make_rng(rng_seed), cfg.d)
    live = _Live(0, 0, [], 0, HONEST_MODE, 0, False, BudgetLedger.for_config(cfg))
    trace = []
    while live.location < cfg.n:
        u, symbol = stream.next()
        trace.append(_advance(cfg, policy, live, u, symbol))
    return tuple(live.lsbs), live.ledger, tuple(trace)


def run_forkless_beacon(cfg, policy, rng_seed):
    if cfg.n % 2 == 0:
        raise ValueError('The beacon length n must be odd.')
    lsbs, ledger, trace = run_forkless_chain(cfg, policy, rng_seed)
    return majority(lsbs), ledger, trace


#same turns as run_forkless_chain, without keeping the trace
def simulate_ones(cfg, policy, rng_seed):
    stream = TurnStream(utils.make_rng(rng_seed), cfg.d)
    live = _Live(0, 0, None, 0, HONEST_MODE, 0, False, BudgetLedger.for_config(cfg))
    while live.location < cfg.n:
        u, symbol = stream.next()
        _advance(cfg, policy, live, u, symbol)
    return live.ones, live.ledger


def _forkless_trial(trial_seed, cfg, policy):
    ones, ledger = simulate_ones(cfg, policy, trial_seed)
    return int(2 * ones >= cfg.n)


def estimate_forkless_bias(cfg, policy, trials, seed, confidence=0.95, method='hoeffding',
                           jobs=1, progress=None):
    if cfg.n % 2 == 0:
        raise ValueError('The beacon length n must be odd.')
    fn = partial(_forkless_trial, cfg=cfg, policy=policy)
    bits = utils.run_trials(fn, trials, seed, jobs=jobs, desc='forkless', progress=progress)
    return BiasReport.from_bits(bits, seed, confidence=confidence, method=method)


def adversary_share(trace):
    landed = [t for t in trace if not t.discarded]
    if not landed:
        return 0.0
    return sum(t.published_by == ADVERSARY for t in landed) / len(landed)


#adversary blocks that landed while filtering
def filtered_successes(trace):
    return sum(
        t.published_by == ADVERSARY and not t.discarded and t.adversary_mode == FILTER_MODE for t in trace
    )


def bankruptcy_turn(trace):
    for t in trace:
        if t.adversary_mode == IDLE_BANKRUPT:
            return t.turn
    return None


def filter_location_drift(cfg):
    """
    Expected coin change per location while filtering.
    """
    if cfg.charge_mode == 'per_turn':
        return cfg.x * cfg.p_prime - cfg.y_p / (1 - cfg.p / 2)
    return cfg.x * cfg.p_prime - cfg.y_p


def _p0(delta, ell):
    return math.exp(-(1 / 3) * (1 / delta - 1) ** 2 * delta * ell)


def _check_negbin(delta, ell, p_prime):
    if not 0.5 < delta < 1:
        raise ValueError('delta must lie in (1/2, 1).')
    if not isinstance(ell, (int, np.integer)) or ell < 1:
        raise ValueError('ell must be a positive integer.')
    if not 0 < p_prime < 1:
        raise ValueError('p_prime must lie in (0, 1).')


def negbin_tail(delta, ell, p_prime):
    _check_negbin(delta, ell, p_prime)
    return _p0(delta, ell)


#exact Pr(Y < delta ell / p') where Y counts the trials up to the ell-th success
def negbin_tail_exact(delta, ell, p_prime):
    _check_negbin(delta, ell, p_prime)
    failures = math.ceil(delta * ell / p_prime - ell) - 1
    if failures < 0:
        return 0.0
    return float(stats.nbinom.cdf(failures, ell, p_prime))


def negbin_tail_mc(delta, ell, p_prime, trials, seed):
    """
    Monte Carlo tail estimate and its standard error.
    """
    _check_negbin(delta, ell, p_prime)
    rng = utils.make_rng(seed)
    y = rng.negative_binomial(ell, p_prime, size=trials) + ell
    estimate = float(np.mean(y < delta * ell / p_prime))
    return estimate, math.sqrt(max(estimate * (1 - estimate), 0.0) / trials)


def upbound1_bias_bound(cfg):
    errors = cfg.violations(strict=True)
    if errors:
        raise BoundNotApplicableError(' '.join(errors))
    condition = cfg.budget_condition()
    if condition >= 0:
        raise BoundNotApplicableError(
            'Budget condition T(n) + delta ell w_p / p\' < 0 fails: got {:.6g}.'.format(condition)
        )
    ell = cfg.ell
    return cfg.epsilon + _p0(cfg.delta, ell) + (math.e / math.pi) / math.sqrt(cfg.n - ell)


def forkless_trend(cfg, policy, ns, trials, seed, confidence=0.95, method='hoeffding', jobs=1):
    """
    Bias estimates for several beacon lengths, with the closed-form bound
    where it applies.
    """
    rows = []
    for n in ns:
        current = replace(cfg, n=n)
        report = estimate_forkless_bias(current, policy, trials, seed, confidence, method, jobs)
        try:
            bound = upbound1_bias_bound(current)
        except BoundNotApplicableError:
            bound = None
        rows.append({'n': n, 'estimate': report.estimate, 'ci_halfwidth': report.ci_halfwidth, 'bound': bound})
    return pd.DataFrame(rows)
