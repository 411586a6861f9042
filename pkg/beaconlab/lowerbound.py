"""
Why no extractor survives a resettable source: perturbed distributions,
the resettable sampler, and the adversarial source that pushes any
extractor E: [d]^n -> {0,1} to bias at least p/12.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from types import MappingProxyType
import itertools
import logging

import numpy as np

from .core import Distribution, BiasReport, as_fraction
from .errors import BoundViolationError, EnumerationSizeError, ParityError
from .extractors import batch_evaluate
from . import utils

logger = logging.getLogger(__name__)

#words we agree to enumerate when building a source
SOURCE_LIMIT = 2 ** 22

KEEP = 'keep'
RESET = 'reset'


def _check_p(p):
    p = as_fraction(p)
    if not 0 < p <= 1:
        raise ValueError('p must lie in (0, 1].')
    return p


def perturbation_violation(pmf, d, bound):
    """
    First symbol whose mass leaves [(1-bound)/d, (1+bound)/d], or None.
    """
    for a, prob in enumerate(pmf):
        if prob < (1 - bound) / d or prob > (1 + bound) / d:
            return a
    return None


@dataclass(frozen=True)
class PerturbedDistribution:
    d: int
    p: Fraction
    pmf: tuple

    def __post_init__(self):
        p = _check_p(self.p)
        pmf = tuple(as_fraction(prob) for prob in self.pmf)
        if len(pmf) != self.d:
            raise ValueError('A distribution over [{}] needs {} probabilities.'.format(self.d, self.d))
        if sum(pmf) != 1:
            raise ValueError('Probabilities must sum to 1.')
        symbol = perturbation_violation(pmf, self.d, p)
        if symbol is not None:
            raise BoundViolationError(
                'Symbol {} has mass {} outside the {}-perturbed range.'.format(symbol, pmf[symbol], p), symbol
            )
        object.__setattr__(self, 'p', p)
        object.__setattr__(self, 'pmf', pmf)


@dataclass(frozen=True)
class ResettableSampler:
    d: int
    p: Fraction
    u: tuple
    keep_prob: tuple

    def __post_init__(self):
        if any(u < 0 or u > self.p for u in self.u):
            raise ValueError('Every u_a must lie in [0, p].')
        if any(keep < 1 - self.p or keep > 1 for keep in self.keep_prob):
            raise ValueError('Every keep probability must lie in [1 - p, 1].')

    @property
    def reset_prob(self):
        return tuple(1 - keep for keep in self.keep_prob)


def resettable_sampler(x, p=None):
    """
    Sampler that draws a uniform symbol a, keeps it with probability
    1 - p + u_a and otherwise replaces it with a fresh uniform symbol, where
    u_a = Pr(X=a) d - (1 - p/2). Its output is distributed as `x`.
    """
    p = _check_p(2 * x.p if p is None else p)
    symbol = perturbation_violation(x.pmf, x.d, p / 2)
    if symbol is not None:
        raise BoundViolationError(
            'Symbol {} has mass {} outside the {}-perturbed range.'.format(symbol, x.pmf[symbol], p / 2), symbol
        )
    u = tuple(prob * x.d - (1 - p / 2) for prob in x.pmf)
    return ResettableSampler(d=x.d, p=p, u=u, keep_prob=tuple(1 - p + u_a for u_a in u))


#output law of the sampler, derived from the draw/keep/reset procedure
def exact_sampler_pmf(s):
    reset_mass = sum(s.reset_prob) / s.d
    return Distribution.from_probabilities([keep / s.d + reset_mass / s.d for keep in s.keep_prob])


@dataclass(frozen=True)
class AdversarialSource:
    """
    Source over [d]^n giving mass (1+p/6)/d^n to the words of S and
    (1-p/6)/d^n to the others. S is half of the domain, taken from the
    output class `target` of the extractor (0 unless labels were swapped).
    """
    extractor: object = field(repr=False, compare=False)
    d: int
    n: int
    p: Fraction
    target: int
    swapped: bool
    S: frozenset = field(repr=False)
    distribution: Distribution = field(repr=False)
    prefix_mass: MappingProxyType = field(repr=False, compare=False)


def _prefix_masses(distribution):
    masses = {}
    for word, mass in distribution.pmf.items():
        for i in range(distribution.n + 1):
            masses[word[:i]] = masses.get(word[:i], 0) + mass
    return masses


#first (prefix, symbol) whose conditional mass leaves the p/2-perturbed range
def _conditional_violation(masses, d, n, p):
    low, high = (1 - p / 2) / d, (1 + p / 2) / d
    for prefix, mass in masses.items():
        if len(prefix) == n or not mass:
            continue
        for a in range(d):
            eta = Fraction(masses.get(prefix + (a,), 0)) / mass
            if eta < low or eta > high:
                return prefix, a
    return None


def build_adversarial_source(E, d, n, p):
    if d % 2:
        raise ParityError('The adversarial source needs an even alphabet, got d={}.'.format(d))
    if d ** n > SOURCE_LIMIT:
        raise EnumerationSizeError('[{}]^{} has more than {} words.'.format(d, n, SOURCE_LIMIT))
    p = _check_p(p)

    words = list(itertools.product(range(d), repeat=n))
    outputs = batch_evaluate(E, np.array(words, dtype=np.int64))
    total = len(words)
    target = 0
    if 2 * int(np.sum(outputs == 0)) < total:
        target = 1
        logger.info('extractor outputs 0 on less than half of the domain, swapping labels')

    S = frozenset(itertools.islice((w for w, out in zip(words, outputs) if out == target), total // 2))
    q = p / 6
    high, low = (1 + q) / total, (1 - q) / total
    distribution = Distribution(d, n, {w: high if w in S else low for w in words})
    masses = _prefix_masses(distribution)

    violation = _conditional_violation(masses, d, n, p)
    if violation is not None:
        prefix, symbol = violation
        raise BoundViolationError(
            'Conditional of symbol {} after prefix {} is not {}-perturbed.'.format(symbol, prefix, p / 2), symbol
        )

    return AdversarialSource(
        extractor=E, d=d, n=n, p=p, target=target, swapped=target == 1, S=S,
        distribution=distribution, prefix_mass=MappingProxyType(masses),
    )


#conditional law of the next symbol given a prefix
def exact_conditional(src, prefix):
    prefix = tuple(prefix)
    masses = src.prefix_mass
    return tuple(Fraction(masses.get(prefix + (a,), 0)) / masses[prefix] for a in range(src.d))


def claim_chain_holds(q):
    if not 0 < q <= Fraction(1, 3):
        raise ValueError('q must lie in (0, 1/3].')
    return 1 - 2 * q <= (1 - q) / (1 + q) <= (1 + q) / (1 - q) <= 1 + 3 * q


def verify_perturbed_conditionals(src, p=None):
    """
    Check that every conditional (X_i | prefix) of the source is
    p/2-perturbed. Accepts an AdversarialSource, or a Distribution together
    with p (default 0, i.e. uniform conditionals).
    """
    if isinstance(src, AdversarialSource):
        p, d, n, masses = src.p, src.d, src.n, src.prefix_mass
    else:
        p = as_fraction(p or 0)
        d, n, masses = src.d, src.n, _prefix_masses(src)
    if _conditional_violation(masses, d, n, p) is not None:
        return False
    if p > 0 and not claim_chain_holds(p / 6):
        return False
    return True


def _keep_probability(eta, d, p):
    #u_a = eta d - (1 - p/2), clamped so the reset probability stays within p
    keep = 1 - p + (eta * d - (1 - p / 2))
    return min(max(keep, 1 - p), 1)


def _sequential_sample(d, n, decide, rng):
    prefix = ()
    resets = 0
    for _ in range(n):
        a = int(rng.integers(d))
        if decide(prefix, a, rng) == RESET:
            a = int(rng.integers(d))
            resets += 1
        prefix = prefix + (a,)
    return prefix, resets


def run_resettable_adversary(src, rng_seed, with_resets=False):
    rng = utils.make_rng(rng_seed)

    def decide(prefix, a, rng):
        keep = _keep_probability(exact_conditional(src, prefix)[a], src.d, src.p)
        return KEEP if rng.random() < keep else RESET

    word, resets = _sequential_sample(src.d, src.n, decide, rng)
    return (word, resets) if with_resets else word


def estimate_conditional(E, prefix, a, p, samples, rng, d=2, n=None, target=0):
    """
    Monte Carlo estimate of Pr(X_i = a | prefix) under the adversarial
    source, from uniform completions of the prefix weighted by 1 +- p/6
    according to E's output.
    """
    prefix = tuple(int(s) for s in prefix)
    n = len(prefix) + 1 if n is None else n
    i = len(prefix)
    matrix = np.empty((samples, n), dtype=np.int64)
    matrix[:, :i] = prefix
    matrix[:, i:] = rng.integers(0, d, size=(samples, n - i))
    q = float(p) / 6
    weights = np.where(batch_evaluate(E, matrix) == target, 1 + q, 1 - q)
    return float(weights[matrix[:, i] == a].sum() / weights.sum())


def efficient_reset_decision(E, prefix, a, p, samples, rng_seed, d=2, n=None, target=0, eta=None):
    """
    Keep or reset the drawn symbol `a`. `eta`, when given, replaces the
    sampled estimate of the conditional mass of `a`.
    """
    if not isinstance(samples, int) or samples < 1:
        raise ValueError('Samples must be a positive integer.')
    rng = utils.make_rng(rng_seed)
    if eta is None:
        eta = estimate_conditional(E, prefix, a, p, samples, rng, d=d, n=n, target=target)
    keep = _keep_probability(eta, d, as_fraction(p) if isinstance(eta, Fraction) else float(p))
    return KEEP if rng.random() < keep else RESET


def run_efficient_adversary(E, d, n, p, samples, rng_seed, target=0, eta_fn=None, with_resets=False):
    """
    Resettable adversary that only queries E as a black box. `eta_fn(prefix)`
    may inject exact conditionals in place of the sampled estimates.
    """
    rng = utils.make_rng(rng_seed)

    def decide(prefix, a, rng):
        eta = eta_fn(prefix)[a] if eta_fn is not None else None
        return efficient_reset_decision(E, prefix, a, p, samples, rng, d=d, n=n, target=target, eta=eta)

    word, resets = _sequential_sample(d, n, decide, rng)
    return (word, resets) if with_resets else word


def _efficient_trial(trial_seed, E, d, n, p, samples, target):
    word = run_efficient_adversary(E, d, n, p, samples, trial_seed, target=target)
    return int(batch_evaluate(E, np.array([word]))[0])


def estimate_efficient_bias(E, d, n, p, samples, runs, seed, target=0, confidence=0.95,
                            method='wilson', jobs=1, progress=None):
    fn = partial(_efficient_trial, E=E, d=d, n=n, p=float(p), samples=samples, target=target)
    bits = utils.run_trials(fn, runs, seed, jobs=jobs, desc='efficient adversary', progress=progress)
    return BiasReport.from_bits(bits, seed, confidence=confidence, method=method)


def measured_bias(E, src):
    zero_mass = sum(
        (mass for word, mass in src.distribution.pmf.items() if int(E(word)) == 0), Fraction(0)
    )
    return abs(zero_mass - Fraction(1, 2))


def truncate_streaming_extractor(stream_fn, n, default=0):
    """
    Turn an extractor reading an unbounded stream into one on [d]^n.
    `stream_fn(prefix)` returns a bit once it halts, None before.
    """
    def truncated(word):
        for i in range(1, n + 1):
            out = stream_fn(tuple(word[:i]))
            if out is not None:
                return int(out)
        return default
    return truncated


def halts_within(stream_fn, word):
    return any(stream_fn(tuple(word[:i])) is not None for i in range(1, len(word) + 1))


def streaming_bias_bound(stream_fn, d, n, p, default=0):
    """
    Bias guarantee for a streaming extractor cut at length n.

    Returns the bias of the truncated extractor on its adversarial source,
    the source's mass on words where the stream has not halted, and the
    smallest bias the untruncated stream can show on that source whatever it
    outputs after n symbols.
    """
    truncated = truncate_streaming_extractor(stream_fn, n, default)
    src = build_adversarial_source(truncated, d, n, p)
    halted_zero = Fraction(0)
    not_halted = Fraction(0)
    for word, mass in src.distribution.pmf.items():
        if not halts_within(stream_fn, word):
            not_halted += mass
        elif truncated(word) == 0:
            halted_zero += mass
    half = Fraction(1, 2)
    low, high = halted_zero, halted_zero + not_halted
    streaming = Fraction(0) if low <= half <= high else min(abs(low - half), abs(high - half))
    return {
        'truncated_bias': measured_bias(truncated, src),
        'not_halted': not_halted,
        'streaming_bias': streaming,
        'source': src,
    }
