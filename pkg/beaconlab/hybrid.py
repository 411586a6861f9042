"""
Commit, beacon, decommit: the hybrid protocol combining m designated
parties with a chain beacon.

Every round j, each live party locks q coins in an escrow and commits to a
bit d_i in blocks u_j..u_j+t. The chain beacon then produces a bit b from
blocks u'_j = u_j+t+k onwards, and the parties open their commitments in
blocks u''_j+1..u''_j+t with u''_j = u'_j+n+k. A party that does not open
forfeits its escrow and counts as d'_i = 0 from then on. The round value is
s_j = b xor f(d'_1, ..., d'_m) and the protocol outputs majority(s_1..s_r).

Commitments are ideal: the digest is an opaque token.
"""

from copy import deepcopy
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import partial, lru_cache
import hashlib
import itertools
import json
import logging
import math

from .backbone import BackboneConfig, run_pi_beacon, strategy_honest_mimic
from .core import BiasReport, Distribution
from .errors import ParityError
from .extractors import F_KINDS, PI_OVER_E, check_arity, combine, majority
from .forkless import ForklessConfig, null_policy, run_forkless_beacon
from .regex import CLTV_SCRIPT, CLTV_TEMPLATE, HEX_STRING
from . import utils

logger = logging.getLogger(__name__)

CHAINS = ['forkless', 'backbone']

LOCKED = 'locked'
RECLAIMED = 'reclaimed'
FORFEITED = 'forfeited'


@dataclass(frozen=True)
class HybridConfig:
    m: int = 3
    r: int = 1
    t: int = 6
    k: int = 3
    q: float = 10.0
    f_kind: str = 'majority'
    u1: int = 1
    beacon_n: int = 21
    chain: str = 'forkless'

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise ValueError(' '.join(errors))

    def violations(self):
        errors = []
        if not isinstance(self.m, int) or self.m < 1:
            errors.append('m must be a positive integer.')
        elif self.f_kind not in F_KINDS:
            errors.append('f_kind must be one of {}.'.format(', '.join(F_KINDS)))
        else:
            try:
                check_arity(self.f_kind, self.m)
            except ValueError as e:
                errors.append(str(e))
        if not isinstance(self.r, int) or self.r < 1 or self.r % 2 == 0:
            errors.append('r must be a positive odd integer.')
        if not isinstance(self.t, int) or self.t < 1:
            errors.append('t must be a positive integer.')
        if not isinstance(self.k, int) or self.k < 0:
            errors.append('k must be a non-negative integer.')
        if self.q < 0:
            errors.append('q cannot be negative.')
        if not isinstance(self.u1, int) or self.u1 < 0:
            errors.append('u1 must be a non-negative integer.')
        if not isinstance(self.beacon_n, int) or self.beacon_n < 1 or self.beacon_n % 2 == 0:
            errors.append('beacon_n must be a positive odd integer.')
        if self.chain not in CHAINS:
            errors.append('chain must be one of {}.'.format(', '.join(CHAINS)))
        return errors

    def windows(self, j):
        """
        (u_j, u'_j, u''_j) for round j (1-based).
        """
        if not isinstance(j, int) or not 1 <= j <= self.r:
            raise ValueError('Round must lie in [1, r].')
        u = self.u1
        while True:
            u_prime = u + self.t + self.k
            u_second = u_prime + self.beacon_n + self.k
            if j == 1:
                return u, u_prime, u_second
            u, j = u_second + 1, j - 1

    #blocks from u_j to the last block at which the openings are k deep
    @property
    def round_span(self):
        u, _, u_second = self.windows(1)
        return u_second + self.t + self.k - u


@dataclass
class Escrow:
    party: int
    digest: str
    q: float
    limit: int
    status: str = LOCKED

    def reclaim(self):
        if self.status != LOCKED:
            raise ValueError('Escrow of party {} is already {}.'.format(self.party, self.status))
        self.status = RECLAIMED
        return self.q

    def forfeit(self):
        if self.status != LOCKED:
            raise ValueError('Escrow of party {} is already {}.'.format(self.party, self.status))
        self.status = FORFEITED
        return self.q


@dataclass(frozen=True)
class RoundRecord:
    round: int
    u: int
    u_prime: int
    u_second: int
    beacon_bit: int
    committed: tuple
    decommitted: tuple
    effective_bits: tuple
    s: int
    controlled: bool = False
    destroyed: float = 0.0

    def as_dict(self):
        return {
            'round': self.round, 'u': self.u, 'u_prime': self.u_prime, 'u_second': self.u_second,
            'beacon_bit': self.beacon_bit, 'committed': list(self.committed),
            'decommitted': list(self.decommitted), 'effective_bits': list(self.effective_bits),
            's': self.s, 'controlled': self.controlled, 'destroyed': self.destroyed,
        }


@dataclass(frozen=True)
class RoundView:
    """
    What the adversary sees before the openings are due: the beacon bit, the
    committed bits of every live party (None for non-committed) and the set
    of parties that already forfeited.
    """
    round: int
    beacon_bit: int
    bits: tuple
    forfeited: frozenset
    f_kind: str


def commitment_digest(j, party, bit, nonce):
    payload = '{}:{}:{}:{}'.format(j, party, bit, nonce.hex())
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


class HybridAdversary:
    """
    Base adversary: corrupts nobody and never takes control of a round.
    Corrupted parties are the first `corrupted` indices.
    """
    name = 'idle'

    def __init__(self, corrupted=0):
        if not isinstance(corrupted, int) or corrupted < 0:
            raise ValueError('The number of corrupted parties must be a non-negative integer.')
        self.corrupted = corrupted

    def is_corrupted(self, party):
        return party < self.corrupted

    #bit a corrupted party commits to, None to skip the commitment
    def commit(self, j, party, rng):
        return int(rng.integers(2))

    #corrupted parties that withhold their opening
    def withhold(self, view):
        return frozenset()

    def take_control(self, j, past_s, rounds_left):
        return None


class IdleAdversary(HybridAdversary):
    name = 'idle'

    def __init__(self):
        super().__init__(0)


class FixedBitsAdversary(HybridAdversary):
    """
    Corrupted parties commit to fixed bits and always open.
    """
    name = 'fixed_bits'

    def __init__(self, bits):
        bits = tuple(int(b) for b in bits)
        super().__init__(len(bits))
        self.bits = bits

    def commit(self, j, party, rng):
        return self.bits[party]


def _minimal_withholding(f_kind, bits, corrupted, forfeited, target):
    """
    Smallest set of corrupted parties whose withheld openings turn
    f(d') into `target`, or None when no such set exists.
    """
    def value(withheld):
        return combine(f_kind, [
            0 if b is None or i in forfeited or i in withheld else b for i, b in enumerate(bits)
        ])

    if value(frozenset()) == target:
        return frozenset()
    candidates = [i for i in range(corrupted) if i not in forfeited and bits[i] == 1]
    for size in range(1, len(candidates) + 1):
        for withheld in itertools.combinations(candidates, size):
            if value(frozenset(withheld)) == target:
                return frozenset(withheld)
    return None


class MajorityControlAdversary(HybridAdversary):
    """
    Corrupted parties commit to 1. Once b is known, the adversary withholds
    the fewest openings that make s_j equal to `desired`, and opens all if
    that is impossible.
    """
    name = 'majority_control'

    def __init__(self, corrupted, desired=1):
        if desired not in (0, 1):
            raise ValueError('desired must be 0 or 1.')
        super().__init__(corrupted)
        self.desired = desired

    def commit(self, j, party, rng):
        return 1

    def withhold(self, view):
        target = self.desired ^ view.beacon_bit
        withheld = _minimal_withholding(view.f_kind, view.bits, self.corrupted, view.forfeited, target)
        return frozenset() if withheld is None else withheld


class AdaptiveRoundAdversary(HybridAdversary):
    """
    Takes control of at most `quota` rounds, deciding before each round from
    the values seen so far. Control is spent at the end, and only while the
    outcome is still open.
    """
    name = 'adaptive_round'

    def __init__(self, quota, desired=1):
        if not isinstance(quota, int) or quota < 0:
            raise ValueError('The quota must be a non-negative integer.')
        super().__init__(0)
        self.quota = quota
        self.desired = desired
        self.used = 0

    def take_control(self, j, past_s, rounds_left):
        left = self.quota - self.used
        if left <= 0 or rounds_left > left:
            return None
        total = len(past_s) + rounds_left
        wanted = sum(s == self.desired for s in past_s)
        unwanted = len(past_s) - wanted
        if 2 * wanted > total or 2 * unwanted > total:
            return None
        self.used += 1
        return self.desired


def adaptive_round_adversary(quota, desired=1):
    return AdaptiveRoundAdversary(quota, desired)


def optimal_adaptive_bias(r, quota):
    """
    Exact largest |Pr(majority = 1) - 1/2| over adversaries that adaptively
    fix at most `quota` of r uniform rounds.
    """
    if not isinstance(r, int) or r < 1 or r % 2 == 0:
        raise ParityError('r must be a positive odd integer, got {}.'.format(r))
    if not isinstance(quota, int) or quota < 0:
        raise ValueError('The quota must be a non-negative integer.')
    half = Fraction(1, 2)

    @lru_cache(maxsize=None)
    def value(left, need, budget):
        if need <= 0:
            return Fraction(1)
        if need > left:
            return Fraction(0)
        passive = half * value(left - 1, need - 1, budget) + half * value(left - 1, need, budget)
        if budget == 0:
            return passive
        return max(passive, value(left - 1, need - 1, budget - 1))

    return value(r, (r + 1) // 2, quota) - half


class ForklessProvider:
    """
    Beacon bits from the forkless simulator, one run per round.
    """
    name = 'forkless'

    def __init__(self, cfg=None, policy=None):
        self.cfg = ForklessConfig() if cfg is None else cfg
        self.policy = null_policy(self.cfg) if policy is None else policy

    def beacon(self, n, seed):
        bit, _, _ = run_forkless_beacon(replace(self.cfg, n=n), self.policy, seed)
        return bit


class BackboneProvider:
    """
    Beacon bits from the round-based simulator. Timeouts propagate.
    """
    name = 'backbone'

    def __init__(self, cfg=None, strategy=None):
        self.cfg = BackboneConfig() if cfg is None else cfg
        self.strategy = strategy_honest_mimic() if strategy is None else strategy

    def beacon(self, n, seed):
        bit, _, _ = run_pi_beacon(replace(self.cfg, n=n), self.strategy, seed)
        return bit


def make_chain(name, cfg=None, policy=None):
    if name == 'forkless':
        return ForklessProvider(cfg, policy)
    if name == 'backbone':
        return BackboneProvider(cfg, policy)
    raise ValueError('Chain not valid. Accepted values: {}.'.format(', '.join(CHAINS)))


def run_hybrid(cfg, honest_bits_rng=None, adversary=None, chain_sim=None, seed=0):
    """
    Execute the protocol for r rounds.

    Returns (bit, records, penalties) where `penalties` is the total of
    destroyed escrow coins.
    """
    honest_seed, chain_seed, adversary_seed = utils.spawn_seeds(seed, 3)
    honest_rng = utils.make_rng(honest_seed) if honest_bits_rng is None else utils.make_rng(honest_bits_rng)
    adversary_rng = utils.make_rng(adversary_seed)
    adversary = IdleAdversary() if adversary is None else deepcopy(adversary)
    if adversary.corrupted > cfg.m:
        raise ValueError('Cannot corrupt {} of {} parties.'.format(adversary.corrupted, cfg.m))
    chain_sim = make_chain(cfg.chain) if chain_sim is None else chain_sim
    chain_seeds = chain_seed.spawn(cfg.r)

    forfeited = set()
    escrows = []
    records = []
    past_s = []
    for j in range(1, cfg.r + 1):
        u, u_prime, u_second = cfg.windows(j)
        desired = adversary.take_control(j, tuple(past_s), cfg.r - j + 1)
        if desired is not None:
            records.append(RoundRecord(
                round=j, u=u, u_prime=u_prime, u_second=u_second, beacon_bit=None,
                committed=(), decommitted=(), effective_bits=(), s=int(desired), controlled=True,
            ))
            past_s.append(int(desired))
            continue

        #commit phase
        bits = [None] * cfg.m
        round_escrows = {}
        for i in range(cfg.m):
            if i in forfeited:
                continue
            if adversary.is_corrupted(i):
                bit = adversary.commit(j, i, adversary_rng)
            else:
                bit = int(honest_rng.integers(2))
            if bit is None:
                #no commitment counts as a forfeit from this round on
                forfeited.add(i)
                continue
            bits[i] = int(bit)
            digest = commitment_digest(j, i, bits[i], honest_rng.bytes(16))
            round_escrows[i] = Escrow(party=i, digest=digest, q=cfg.q, limit=u_second)
        escrows.extend(round_escrows.values())

        beacon_bit = chain_sim.beacon(cfg.beacon_n, chain_seeds[j - 1])

        #decommit phase
        view = RoundView(j, beacon_bit, tuple(bits), frozenset(forfeited), cfg.f_kind)
        withheld = {i for i in adversary.withhold(view) if adversary.is_corrupted(i) and i in round_escrows}
        destroyed = 0.0
        for i, escrow in round_escrows.items():
            if i in withheld:
                destroyed += escrow.forfeit()
                forfeited.add(i)
            else:
                escrow.reclaim()
        effective = tuple(0 if i in forfeited or b is None else b for i, b in enumerate(bits))
        s = beacon_bit ^ combine(cfg.f_kind, effective)
        if destroyed:
            logger.debug('round %d: %d openings withheld, %.6g coins destroyed', j, len(withheld), destroyed)
        records.append(RoundRecord(
            round=j, u=u, u_prime=u_prime, u_second=u_second, beacon_bit=beacon_bit,
            committed=tuple(b is not None for b in bits),
            decommitted=tuple(i in round_escrows and i not in withheld for i in range(cfg.m)),
            effective_bits=effective, s=s, destroyed=destroyed,
        ))
        past_s.append(s)

    penalties = sum(e.q for e in escrows if e.status == FORFEITED)
    return majority(past_s), tuple(records), penalties


def escrow_balance(records, cfg):
    """
    (locked, reclaimed, destroyed) coin totals of a run.
    """
    locked = reclaimed = destroyed = 0.0
    for record in records:
        if record.controlled:
            continue
        for committed, opened in zip(record.committed, record.decommitted):
            if not committed:
                continue
            locked += cfg.q
            if opened:
                reclaimed += cfg.q
            else:
                destroyed += cfg.q
    return locked, reclaimed, destroyed


def _hybrid_trial(trial_seed, cfg, adversary, chain_sim):
    bit, _, penalties = run_hybrid(cfg, adversary=adversary, chain_sim=chain_sim, seed=trial_seed)
    return bit, penalties


def hybrid_trials(cfg, adversary, trials, seed, chain_sim=None, jobs=1, progress=None):
    """
    Output bits and destroyed coins of independent runs, as a (trials, 2) array.
    """
    chain_sim = make_chain(cfg.chain) if chain_sim is None else chain_sim
    fn = partial(_hybrid_trial, cfg=cfg, adversary=adversary, chain_sim=chain_sim)
    return utils.run_trials(fn, trials, seed, jobs=jobs, desc='hybrid', progress=progress)


def estimate_hybrid_bias(cfg, adversary, trials, seed, chain_sim=None, confidence=0.95,
                         method='hoeffding', jobs=1, progress=None):
    values = hybrid_trials(cfg, adversary, trials, seed, chain_sim, jobs, progress)
    return BiasReport.from_bits(values[:, 0].astype(int), seed, confidence=confidence, method=method)


def _exact_round(m, f_kind, adversary, beacon_bit=None):
    check_arity(f_kind, m)
    adversary = IdleAdversary() if adversary is None else adversary
    honest = [i for i in range(m) if not adversary.is_corrupted(i)]
    beacon_bits = (0, 1) if beacon_bit is None else (beacon_bit,)
    weight = Fraction(1, 2 ** len(honest) * len(beacon_bits))
    ones = Fraction(0)
    destroyed = Fraction(0)
    for honest_bits in itertools.product((0, 1), repeat=len(honest)):
        for b in beacon_bits:
            bits = [None] * m
            for i, bit in zip(honest, honest_bits):
                bits[i] = bit
            for i in range(adversary.corrupted):
                #deterministic commitments only
                bits[i] = adversary.commit(1, i, None)
            withheld = adversary.withhold(RoundView(1, b, tuple(bits), frozenset(), f_kind))
            effective = [0 if i in withheld or bit is None else bit for i, bit in enumerate(bits)]
            ones += weight * (b ^ combine(f_kind, effective))
            destroyed += weight * len(withheld)
    return ones, destroyed


def exact_round_distribution(m, f_kind, adversary=None, beacon_bit=None):
    """
    Exact law of s_j for one round over uniform honest bits and a uniform
    beacon bit (or the given one). Corrupted commitments must not depend on
    randomness.
    """
    ones, _ = _exact_round(m, f_kind, adversary, beacon_bit)
    return Distribution.from_probabilities([1 - ones, ones])


def expected_withhold_penalty(m, corrupted, q, f_kind='majority', desired=1):
    """
    Exact expected coins destroyed in one round by MajorityControlAdversary.
    """
    _, withheld = _exact_round(m, f_kind, MajorityControlAdversary(corrupted, desired))
    return withheld * Fraction(q) if isinstance(q, (int, Fraction)) else float(withheld) * q


def claim1_window(cfg):
    return cfg.beacon_n + 2 * cfg.t + 3 * cfg.k


def claim1_conditions(cfg, R1, R2, maxprofits, under_budget=False, corrupted=0):
    """
    Whether the per-round guarantee applies: R2 + maxprofits(R1, n+2t+3k) < q,
    no party under budget, and fewer than m/2 corrupted parties.
    `maxprofits` is a callable (t, i) or a precomputed number.
    """
    window = claim1_window(cfg)
    profits = maxprofits(R1, window) if callable(maxprofits) else maxprofits
    return R2 + profits < cfg.q and not under_budget and 2 * corrupted < cfg.m


def claim2_ell(r, epsilon):
    if not isinstance(r, int) or r < 2:
        raise ValueError('r must be an integer >= 2.')
    if epsilon <= 0:
        raise ValueError('Epsilon must be positive.')
    return max(math.floor(2 * epsilon * PI_OVER_E * math.sqrt(r - math.sqrt(r))) - 1, 0)


def claim2_conditions(cfg, epsilon, R1, R2, maxprofits, under_budget=False, corrupted=0):
    """
    Hypotheses of the multi-round guarantee, with the quota of rounds the
    adversary may control.
    """
    ell = claim2_ell(cfg.r, epsilon)
    per_round = claim1_conditions(cfg, R1, R2, maxprofits, under_budget, corrupted)
    return {
        'ell': ell,
        'per_round': per_round,
        'majority_rounds': cfg.r % 2 == 1,
        'applicable': per_round and cfg.r % 2 == 1,
    }


def _check_hex(value, name):
    if not isinstance(value, str) or not HEX_STRING.fullmatch(value):
        raise ValueError('{} must be a non-empty hex string.'.format(name))


def emit_cltv_script(tau, c_hex, pk_hex):
    if isinstance(tau, bool) or not isinstance(tau, int) or tau < 0:
        raise ValueError('tau must be a non-negative integer.')
    _check_hex(c_hex, 'c_hex')
    _check_hex(pk_hex, 'pk_hex')
    return CLTV_TEMPLATE.format(tau=tau, c_hex=c_hex, pk_hex=pk_hex)


def parse_cltv_script(script):
    match = CLTV_SCRIPT.fullmatch(script)
    if match is None:
        raise ValueError('Not a timelock escrow script: {!r}.'.format(script))
    return int(match.group('tau')), match.group('c_hex'), match.group('pk_hex')


def export_round_records(records, path):
    with open(path, 'w') as f:
        for record in records:
            f.write(json.dumps(record.as_dict(), sort_keys=True) + '\n')
