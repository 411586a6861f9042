"""
Round-based simulation of longest-chain mining with forks.

Each round every honest party makes q oracle queries on its adopted tip and
the adversary makes t*q queries wherever its strategy wants. A query
succeeds with probability success_prob and yields a block carrying a
uniform symbol. Blocks published in round r reach every honest party at the
start of round r+1; the adversary is rushing and its blocks win ties.

The beacon reads n consecutive blocks B_1..B_n starting at the agreed start
height and outputs the majority of their LSBs once B_n is k blocks deep.
"""

from copy import deepcopy
from dataclasses import dataclass, field, replace
from functools import partial
from typing import NamedTuple
import json
import logging
import math

import numpy as np
import pandas as pd

from .core import BiasReport
from .errors import SimulationTimeout
from .extractors import PI_OVER_E, majority
from .forkless import BudgetLedger
from . import utils

logger = logging.getLogger(__name__)

ADVERSARY = -1
GENESIS_CREATOR = -2
GENESIS = 0

STRATEGIES = ['honest_mimic', 'discard_detrimental', 'withhold', 'private_chain', 'majority_power']

#expected-progress units allowed before a run times out
HORIZON_FACTOR = 50


@dataclass(frozen=True)
class BackboneConfig:
    N: int = 10
    t: int = 2
    q: int = 1
    success_prob: float = 0.01
    d: int = 2 ** 16
    n: int = 21
    k: int = 3
    lambda_: float = 1.0
    delta: float = 0.5
    epsilon: float = 0.1
    warmup_rounds: int = 0
    max_rounds: int = None
    halt_on_bankruptcy: bool = False
    x: float = 1.0
    y: float = 0.0

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise ValueError(' '.join(errors))

    def violations(self):
        errors = []
        if not isinstance(self.N, int) or self.N < 1:
            errors.append('N must be a positive integer.')
        elif not isinstance(self.t, int) or not 0 <= self.t < self.N:
            errors.append('t must be an integer in [0, N).')
        if not isinstance(self.q, int) or self.q < 1:
            errors.append('q must be a positive integer.')
        if not 0 < self.success_prob < 1:
            errors.append('success_prob must lie in (0, 1).')
        if not isinstance(self.d, int) or self.d < 2 or self.d % 2:
            errors.append('d must be an even integer >= 2.')
        if not isinstance(self.n, int) or self.n < 1 or self.n % 2 == 0:
            errors.append('n must be a positive odd integer.')
        if not isinstance(self.k, int) or self.k < 0:
            errors.append('k must be a non-negative integer.')
        if self.lambda_ < 1:
            errors.append('lambda must be >= 1.')
        if not 0 < self.delta < 1:
            errors.append('delta must lie in (0, 1).')
        if not 0 < self.epsilon <= 1 / PI_OVER_E:
            errors.append('epsilon must lie in (0, e/pi].')
        if not isinstance(self.warmup_rounds, int) or self.warmup_rounds < 0:
            errors.append('warmup_rounds must be a non-negative integer.')
        if self.max_rounds is not None and (not isinstance(self.max_rounds, int) or self.max_rounds < 1):
            errors.append('max_rounds must be a positive integer.')
        return errors

    @property
    def honest_parties(self):
        return self.N - self.t

    @property
    def alpha(self):
        return (self.N - self.t) * self.q * self.success_prob

    @property
    def beta(self):
        return self.t * self.q * self.success_prob

    #honest power once unintentional forks are discounted
    @property
    def gamma(self):
        return self.alpha - self.alpha ** 2

    def horizon(self):
        if self.max_rounds is not None:
            return self.max_rounds
        return self.warmup_rounds + math.ceil(HORIZON_FACTOR * (self.n + self.k) / (self.alpha + self.beta))


class Block(NamedTuple):
    id: int
    parent: int
    symbol: int
    creator: int
    round_created: int
    published_round: int
    height: int


class RoundRecord(NamedTuple):
    round: int
    tips: tuple
    private_tips: tuple
    new_blocks: tuple


@dataclass(frozen=True)
class AnnotatedChain:
    blocks: tuple
    adversarial: tuple
    symbols: tuple

    def __post_init__(self):
        if not len(self.blocks) == len(self.adversarial) == len(self.symbols):
            raise ValueError('Blocks, annotations and symbols must have the same length.')
        if any(a >= b for a, b in zip(self.blocks, self.blocks[1:])):
            raise ValueError('Block ids must increase along the chain.')

    def __len__(self):
        return len(self.blocks)

    def lsbs(self):
        return [s % 2 for s in self.symbols]


@dataclass(frozen=True)
class ExecutionTrace:
    blocks: tuple = field(repr=False)
    rounds: tuple = field(repr=False)
    start_height: int
    honest_parties: int

    def parent(self, block):
        return self.blocks[block].parent

    def chain(self, tip):
        chain = []
        while tip is not None:
            chain.append(tip)
            tip = self.blocks[tip].parent
        return chain[::-1]

    def annotated_chain(self, tip):
        ids = self.chain(tip)
        return AnnotatedChain(
            blocks=tuple(ids),
            adversarial=tuple(self.blocks[i].creator == ADVERSARY for i in ids),
            symbols=tuple(self.blocks[i].symbol for i in ids),
        )

    @property
    def final_tips(self):
        return self.rounds[-1].tips if self.rounds else (GENESIS,) * self.honest_parties


class BackboneState:
    """
    Mutable state of one execution. Strategies read it and call `mine`,
    `add_block` and `publish`.
    """

    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.rng = rng
        self.round = 0
        self.parent = [None]
        self.symbol = [0]
        self.creator = [GENESIS_CREATOR]
        self.created = [0]
        self.published = [0]
        self.height = [0]
        self.tips = [GENESIS] * cfg.honest_parties
        self.pending = []
        self.published_now = []
        self.best_public = GENESIS
        self.start_height = None
        self.adversary_halted = False
        self.records = []

    def add_block(self, parent, symbol, creator):
        block = len(self.parent)
        self.parent.append(parent)
        self.symbol.append(int(symbol))
        self.creator.append(creator)
        self.created.append(self.round)
        self.published.append(None)
        self.height.append(self.height[parent] + 1)
        return block

    def draw_symbol(self):
        return int(self.rng.integers(self.cfg.d))

    def mine(self, parent, creator=ADVERSARY):
        return self.add_block(parent, self.draw_symbol(), creator)

    def adversary_successes(self):
        if self.cfg.t == 0:
            return 0
        return int(self.rng.binomial(self.cfg.t * self.cfg.q, self.cfg.success_prob))

    #publishing a block publishes its unpublished ancestors too
    def publish(self, block):
        unpublished = []
        while block is not None and self.published[block] is None:
            unpublished.append(block)
            block = self.parent[block]
        for b in reversed(unpublished):
            self.published[b] = self.round
            self.pending.append(b)
            self.published_now.append(b)
            self._update_best_public(b)

    def _update_best_public(self, block):
        best = self.best_public
        if self.height[block] > self.height[best] or (
            self.height[block] == self.height[best]
            and self.creator[block] == ADVERSARY and self.creator[best] != ADVERSARY
        ):
            self.best_public = block

    @property
    def best_public_height(self):
        return self.height[self.best_public]

    def ancestor_at(self, block, height):
        while self.height[block] > height:
            block = self.parent[block]
        return block

    def descends_from(self, block, ancestor):
        return self.ancestor_at(block, self.height[ancestor]) == ancestor if self.height[block] >= self.height[ancestor] else False

    def chain_lsbs(self, tip, start, count):
        """
        LSBs of the `count` blocks from height `start` on the chain ending at
        `tip`, or None if the chain is too short.
        """
        if self.height[tip] < start + count - 1:
            return None
        block = self.ancestor_at(tip, start + count - 1)
        bits = []
        while self.height[block] >= start:
            bits.append(self.symbol[block] % 2)
            block = self.parent[block]
        return bits[::-1]

    def freeze(self):
        blocks = tuple(
            Block(i, self.parent[i], self.symbol[i], self.creator[i], self.created[i], self.published[i], self.height[i])
            for i in range(len(self.parent))
        )
        return ExecutionTrace(
            blocks=blocks, rounds=tuple(self.records),
            start_height=self.start_height, honest_parties=self.cfg.honest_parties,
        )


class Strategy:
    name = 'idle'

    def act(self, state):
        pass

    def private_tips(self, state):
        return ()


class HonestMimic(Strategy):
    """
    Mines on the longest public chain and publishes at once. `power` thins
    successes to model a fraction of the adversary's mining power.
    """
    name = 'honest_mimic'

    def __init__(self, power=1.0):
        self.power = power

    def act(self, state):
        tip = state.best_public
        for _ in range(state.adversary_successes()):
            symbol = state.draw_symbol()
            if self.power < 1 and state.rng.random() >= self.power:
                continue
            tip = state.add_block(tip, symbol, ADVERSARY)
            state.publish(tip)


class DiscardDetrimental(Strategy):
    """
    Mines on the longest public chain, publishes helpful blocks (LSB 1) and
    silently drops the others. Each mining round costs cfg.y coins and each
    published block earns cfg.x; mining stops at bankruptcy. With
    `idle_every`, the adversary sits out every idle_every-th round.
    """
    name = 'discard_detrimental'

    def __init__(self, budget=None, idle_every=None):
        self.ledger = budget
        self.idle_every = idle_every

    def act(self, state):
        if state.adversary_halted:
            return
        if self.idle_every and state.round % self.idle_every == 0:
            return
        if self.ledger is not None and not self.ledger.charge(state.cfg.y):
            return
        tip = state.best_public
        for _ in range(state.adversary_successes()):
            symbol = state.draw_symbol()
            if symbol % 2 == 0:
                continue
            tip = state.add_block(tip, symbol, ADVERSARY)
            state.publish(tip)
            if self.ledger is not None:
                self.ledger.credit(state.cfg.x)


class Withhold(Strategy):
    """
    Mines a private chain. With release=True the chain is published as soon
    as it is longer than every public chain, and abandoned for the public
    tip once it trails by more than `give_up` blocks.
    """
    name = 'withhold'

    def __init__(self, release=False, give_up=6):
        self.release = release
        self.give_up = give_up
        self.tip = GENESIS

    def act(self, state):
        if state.adversary_halted:
            return
        if self.release and state.best_public_height - state.height[self.tip] > self.give_up:
            self.tip = state.best_public
        for _ in range(state.adversary_successes()):
            self.tip = state.mine(self.tip)
        if self.release and state.height[self.tip] > state.best_public_height:
            state.publish(self.tip)

    def private_tips(self, state):
        return (self.tip,)


class PrivateChain(Strategy):
    """
    Two phases. First a supply of blocks is mined without attaching them;
    then, at `graft_round` or once `supply_target` blocks are stored, the
    supply is grafted in one go onto the longest honest chain and published.
    Afterwards only chains containing the graft are extended.
    """
    name = 'private_chain'

    def __init__(self, supply_target=3, graft_round=None, helpful_only=True):
        self.supply_target = supply_target
        self.graft_round = graft_round
        self.helpful_only = helpful_only
        self.supply = []
        self.graft = None
        self.tip = None

    def _ready(self, state):
        if self.graft_round is not None:
            return state.round >= self.graft_round
        return len(self.supply) >= self.supply_target

    def act(self, state):
        if state.adversary_halted:
            return
        successes = state.adversary_successes()
        if self.graft is None:
            for _ in range(successes):
                symbol = state.draw_symbol()
                if not self.helpful_only or symbol % 2:
                    self.supply.append(symbol)
            if self._ready(state) and self.supply:
                tip = state.best_public
                grafted = []
                for symbol in self.supply:
                    tip = state.add_block(tip, symbol, ADVERSARY)
                    grafted.append(tip)
                state.publish(tip)
                self.graft = tuple(grafted)
                self.tip = tip
            return
        if state.descends_from(state.best_public, self.graft[0]):
            self.tip = state.best_public
        for _ in range(successes):
            symbol = state.draw_symbol()
            if self.helpful_only and symbol % 2 == 0:
                continue
            self.tip = state.add_block(self.tip, symbol, ADVERSARY)
            state.publish(self.tip)

    def private_tips(self, state):
        return () if self.tip is None else (self.tip,)


class MajorityPower(Strategy):
    """
    Mines a private chain from genesis. Inside B_1..B_n it drops a block of
    the unwanted LSB only when keeping it would lose the majority, and it
    publishes once the chain reaches B_n plus k blocks, beats every public
    chain and yields `desired_bit`. If the bit comes out wrong it cuts the
    chain back to the last block from which the desired bit is reachable.
    """
    name = 'majority_power'

    def __init__(self, desired_bit=1, grind=True):
        if desired_bit not in (0, 1):
            raise ValueError('desired_bit must be 0 or 1.')
        self.desired_bit = desired_bit
        self.grind = grind
        self.tip = GENESIS
        self.published = False
        self.restarts = 0

    def _undesired(self, state):
        start, n = state.start_height, state.cfg.n
        block, count = self.tip, 0
        while state.height[block] >= start:
            if state.height[block] < start + n and state.symbol[block] % 2 != self.desired_bit:
                count += 1
            block = state.parent[block]
        return count

    def _cut_back(self, state):
        #keep the longest prefix of B_1..B_n whose unwanted count still allows the desired majority
        start, n = state.start_height, state.cfg.n
        limit = (n - 1) // 2
        chain = []
        block = self.tip
        while state.height[block] >= start:
            chain.append(block)
            block = state.parent[block]
        keep, undesired = block, 0
        for b in reversed(chain):
            if state.height[b] >= start + n:
                break
            undesired += state.symbol[b] % 2 != self.desired_bit
            if undesired > limit:
                break
            keep = b
        self.tip = keep
        self.restarts += 1

    def act(self, state):
        if self.published:
            tip = state.best_public
            for _ in range(state.adversary_successes()):
                tip = state.mine(tip)
                state.publish(tip)
            return
        start, n, k = state.start_height, state.cfg.n, state.cfg.k
        limit = (n - 1) // 2
        undesired = self._undesired(state) if start is not None else 0
        for _ in range(state.adversary_successes()):
            symbol = state.draw_symbol()
            height = state.height[self.tip] + 1
            if start is not None and start <= height < start + n and symbol % 2 != self.desired_bit:
                if self.grind and undesired >= limit:
                    continue
                undesired += 1
            self.tip = state.add_block(self.tip, symbol, ADVERSARY)
        if start is None or state.height[self.tip] < start + n + k - 1:
            return
        if state.height[self.tip] <= state.best_public_height:
            return
        if majority(state.chain_lsbs(self.tip, start, n)) == self.desired_bit:
            state.publish(self.tip)
            self.published = True
        else:
            self._cut_back(state)

    def private_tips(self, state):
        return () if self.published else (self.tip,)


def strategy_honest_mimic(power=1.0):
    return HonestMimic(power)


def strategy_discard_detrimental(budget=None, idle_every=None):
    return DiscardDetrimental(budget, idle_every)


def strategy_withhold(release=False, give_up=6):
    return Withhold(release, give_up)


def strategy_private_chain(supply_target=3, graft_round=None, helpful_only=True):
    return PrivateChain(supply_target, graft_round, helpful_only)


def strategy_majority_power(desired_bit=1, grind=True):
    return MajorityPower(desired_bit, grind)


def make_strategy(name, **kwargs):
    if name not in STRATEGIES:
        raise ValueError('Strategy not valid. Accepted values: {}.'.format(', '.join(STRATEGIES)))
    if name == 'discard_detrimental' and 'budget' in kwargs and not isinstance(kwargs['budget'], BudgetLedger):
        budget = kwargs.pop('budget')
        kwargs['budget'] = None if budget is None else BudgetLedger(initial=budget)
    return {
        'honest_mimic': strategy_honest_mimic,
        'discard_detrimental': strategy_discard_detrimental,
        'withhold': strategy_withhold,
        'private_chain': strategy_private_chain,
        'majority_power': strategy_majority_power,
    }[name](**kwargs)


def _deliver(state):
    arrivals = sorted(state.pending, key=lambda b: (state.creator[b] != ADVERSARY, b))
    state.pending = []
    if not arrivals:
        return
    height = state.height
    for i, tip in enumerate(state.tips):
        best = tip
        for b in arrivals:
            if height[b] > height[best]:
                best = b
        state.tips[i] = best


def run_round(state, strategy, rng=None):
    """
    Play one round in place and return the state.
    """
    if rng is not None:
        state.rng = rng
    cfg = state.cfg
    if state.round >= cfg.horizon():
        raise SimulationTimeout('No outcome after {} rounds.'.format(cfg.horizon()))
    state.published_now = []
    _deliver(state)
    if state.start_height is None and state.round >= cfg.warmup_rounds:
        state.start_height = max(state.height[tip] for tip in state.tips) + 1

    successes = state.rng.binomial(cfg.q, cfg.success_prob, size=cfg.honest_parties)
    for party, count in enumerate(successes):
        for _ in range(int(count)):
            block = state.mine(state.tips[party], creator=party)
            state.tips[party] = block
            state.publish(block)

    strategy.act(state)
    state.records.append(RoundRecord(
        round=state.round, tips=tuple(state.tips),
        private_tips=tuple(strategy.private_tips(state)), new_blocks=tuple(state.published_now),
    ))
    state.round += 1
    return state


def upbound2_params(epsilon, n, lambda_, delta):
    if not 0 < epsilon <= 1 / PI_OVER_E:
        raise ValueError('Epsilon must lie in (0, e/pi].')
    if not isinstance(n, int) or n < 2:
        raise ValueError('n must be an integer >= 2.')
    if lambda_ < 1:
        raise ValueError('lambda must be >= 1.')
    if not 0 < delta < 1:
        raise ValueError('delta must lie in (0, 1).')
    ell = math.floor((epsilon / 2) * PI_OVER_E * math.sqrt(n - math.sqrt(n)))
    #the tolerance absorbs float noise around integer products
    L = math.ceil(2 * lambda_ * ell / (1 - delta / 3) - 1e-9)
    return ell, L


def interpretation_budget(R2, maxprofits, ell, delta, lambda_, x, y):
    """
    Left-hand side of the budget condition under the discard-detrimental
    adversary; negative means the adversary runs out of coins first.
    """
    w_beta = 0.5 * (1 / lambda_) * (1 - delta / 3) * x - y
    return R2 + maxprofits + ell * (1 - delta / 3) * (1 / (2 * lambda_)) * w_beta


def bankruptcy_predicate(chain, B, ell, L):
    try:
        i = chain.blocks.index(B)
    except ValueError:
        return False
    window = chain.adversarial[i:i + L]
    if len(window) < L:
        return False
    return sum(window) <= ell


def detect_bankruptcy_event(trace, B, ell, L):
    cache = {}
    for record in trace.rounds:
        holds = True
        for tip in record.tips:
            if tip not in cache:
                cache[tip] = bankruptcy_predicate(trace.annotated_chain(tip), B, ell, L)
            if not cache[tip]:
                holds = False
                break
        if holds:
            return record.round
    return None


def chain_quality(chain, window_L):
    """
    Smallest honest fraction over the windows of `window_L` consecutive
    blocks. The chain starts at genesis, which is left out.
    """
    if not isinstance(window_L, int) or window_L < 1:
        raise ValueError('The window length must be a positive integer.')
    if len(chain) - 1 < window_L:
        raise ValueError('The chain is shorter than the window.')
    honest = 1 - np.asarray(chain.adversarial[1:], dtype=float)
    sums = np.convolve(honest, np.ones(window_L), mode='valid')
    return float(sums.min() / window_L)


def _halt_check(state, ell, L):
    #online version of the bankruptcy event, anchored on the first party's B_1
    if state.start_height is None or state.height[state.tips[0]] < state.start_height:
        return
    B = state.ancestor_at(state.tips[0], state.start_height)
    for tip in state.tips:
        if state.height[tip] < state.start_height + L - 1:
            return
        if state.ancestor_at(tip, state.start_height) != B:
            return
        block, adversarial = state.ancestor_at(tip, state.start_height + L - 1), 0
        while state.height[block] >= state.start_height:
            adversarial += state.creator[block] == ADVERSARY
            block = state.parent[block]
        if adversarial > ell:
            return
    state.adversary_halted = True
    logger.debug('bankruptcy event at round %d, adversary halted', state.round)


def _bankruptcy_params(cfg):
    if cfg.n < 2:
        return 0, 0
    return upbound2_params(cfg.epsilon, cfg.n, cfg.lambda_, cfg.delta)


def run_execution(cfg, strategy, seed, rounds=None):
    """
    Play a fixed number of rounds (default: the config horizon).
    """
    strategy = deepcopy(strategy)
    state = BackboneState(cfg, utils.make_rng(seed))
    for _ in range(cfg.horizon() if rounds is None else rounds):
        run_round(state, strategy)
    return state.freeze()


def run_pi_beacon(cfg, strategy, seed):
    """
    Run until some honest chain holds B_n plus k blocks. Returns the bit of
    that chain, the trace and a dict of events.
    """
    strategy = deepcopy(strategy)
    state = BackboneState(cfg, utils.make_rng(seed))
    ell, L = _bankruptcy_params(cfg)
    target = None
    output_party = None
    while output_party is None:
        run_round(state, strategy)
        if state.start_height is None:
            continue
        target = state.start_height + cfg.n + cfg.k - 1
        if cfg.halt_on_bankruptcy and not state.adversary_halted:
            _halt_check(state, ell, L)
        heights = [state.height[tip] for tip in state.tips]
        if max(heights) >= target:
            output_party = int(np.argmax(heights))

    start = state.start_height
    tip = state.tips[output_party]
    bits = state.chain_lsbs(tip, start, cfg.n)
    bit = majority(bits)
    party_bits = []
    for party_tip in state.tips:
        lsbs = state.chain_lsbs(party_tip, start, cfg.n)
        party_bits.append(None if lsbs is None else majority(lsbs))

    trace = state.freeze()
    B1 = state.ancestor_at(tip, start)
    window = trace.annotated_chain(tip).adversarial[start:start + cfg.n]
    events = {
        'rounds': state.round,
        'start_height': start,
        'output_party': output_party,
        'B1': B1,
        'party_bits': party_bits,
        #parties whose chain does not reach B_n yet have no bit and are counted apart
        'agreement': all(b == bit for b in party_bits if b is not None),
        'undecided_parties': sum(b is None for b in party_bits),
        'adversary_blocks_in_window': int(sum(window)),
        'adversary_published': any(b.creator == ADVERSARY and b.published_round is not None for b in trace.blocks),
        'adversary_halted': state.adversary_halted,
        'bankruptcy_round': detect_bankruptcy_event(trace, B1, ell, L),
        'ell': ell,
        'L': L,
    }
    return bit, trace, events


def _beacon_trial(trial_seed, cfg, strategy):
    bit, trace, events = run_pi_beacon(cfg, strategy, trial_seed)
    return (
        bit,
        events['adversary_blocks_in_window'],
        int(events['agreement']),
        int(events['bankruptcy_round'] is not None),
        int(events['adversary_published']),
        events['undecided_parties'],
    )


def beacon_trials(cfg, strategy, trials, seed, jobs=1, progress=None):
    """
    Per-trial summaries of run_pi_beacon as a DataFrame.
    """
    fn = partial(_beacon_trial, cfg=cfg, strategy=strategy)
    values = utils.run_trials(fn, trials, seed, jobs=jobs, desc='backbone', progress=progress)
    return pd.DataFrame(
        values.reshape(trials, -1),
        columns=['bit', 'adversary_blocks', 'agreement', 'bankruptcy_event', 'adversary_published', 'undecided_parties'],
    )


def estimate_backbone_bias(cfg, strategy, trials, seed, confidence=0.95, method='hoeffding', jobs=1):
    df = beacon_trials(cfg, strategy, trials, seed, jobs=jobs)
    return BiasReport.from_bits(df['bit'].to_numpy(), seed, confidence=confidence, method=method)


def _fork_depth(trace_parent, height, a, b):
    #height(a) - height(lowest common ancestor of a and b)
    top = height[a]
    while height[a] > height[b]:
        a = trace_parent[a]
    while height[b] > height[a]:
        b = trace_parent[b]
    while a != b:
        a, b = trace_parent[a], trace_parent[b]
    return top - height[a]


def max_prefix_violation(trace):
    """
    Largest k for which some honest chain cut by k blocks is not a prefix
    of an honest chain of the same or the next round.
    """
    parent = [b.parent for b in trace.blocks]
    height = [b.height for b in trace.blocks]
    worst = 0
    previous = set()
    for record in trace.rounds:
        current = set(record.tips)
        for a in current | previous:
            for b in current:
                if a != b:
                    worst = max(worst, _fork_depth(parent, height, a, b))
        previous = current
    return worst


def _prefix_trial(trial_seed, cfg, strategy, rounds):
    return max_prefix_violation(run_execution(cfg, strategy, trial_seed, rounds))


def common_prefix_violation_rates(cfg, strategy, ks, trials, seed, rounds=None, jobs=1):
    fn = partial(_prefix_trial, cfg=cfg, strategy=strategy, rounds=rounds)
    depths = utils.run_trials(fn, trials, seed, jobs=jobs, desc='common prefix')
    return {k: float(np.mean(depths > k)) for k in ks}


def common_prefix_violation_rate(cfg, strategy, k, trials, seed, rounds=None, jobs=1):
    return common_prefix_violation_rates(cfg, strategy, [k], trials, seed, rounds, jobs)[k]


def agreement_rate(cfg, strategy, ks, trials, seed, jobs=1):
    rows = []
    for k in ks:
        df = beacon_trials(replace(cfg, k=k), strategy, trials, seed, jobs=jobs)
        rows.append({
            'k': k,
            'agreement_rate': df['agreement'].mean(),
            'undecided_share': df['undecided_parties'].mean() / cfg.honest_parties,
        })
    return pd.DataFrame(rows)


def private_supply_tail(cfg, rounds, ells, trials, seed, helpful_only=True):
    """
    Pr(supply > ell) for the first phase of the private-chain strategy run
    for `rounds` rounds.
    """
    rng = utils.make_rng(seed)
    supply = rng.binomial(cfg.t * cfg.q * rounds, cfg.success_prob, size=trials)
    if helpful_only:
        supply = rng.binomial(supply, 0.5)
    return pd.DataFrame({'ell': list(ells), 'tail': [float(np.mean(supply > ell)) for ell in ells]})


def trace_records(trace):
    for record in trace.rounds:
        yield {
            'round': record.round,
            'party': list(range(len(record.tips))),
            'chain_tip': list(record.tips),
            'private_tips': list(record.private_tips),
            'new_blocks': [
                {
                    'id': b,
                    'parent': trace.blocks[b].parent,
                    'symbol': trace.blocks[b].symbol,
                    'creator': 'adversary' if trace.blocks[b].creator == ADVERSARY else trace.blocks[b].creator,
                }
                for b in record.new_blocks
            ],
        }


def export_trace(trace, path):
    with open(path, 'w') as f:
        for record in trace_records(trace):
            f.write(json.dumps(record, sort_keys=True) + '\n')
