"""
Distributions over words in [d]^n, non-oblivious symbol-fixing sources,
statistical distance and the estimators shared by the simulation modules.

Words are tuples of ints, position 0 holding the first symbol X_1.
Exact computations use `fractions.Fraction`; Monte Carlo aggregates use
floats.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
import itertools
import logging
import math

import numpy as np
from scipy import stats

from .errors import DomainMismatchError, EnumerationSizeError
from . import utils

logger = logging.getLogger(__name__)

#largest number of states we agree to enumerate
ENUMERATION_LIMIT = 2 ** 24

#float pmfs must sum to one within this tolerance
SUM_TOLERANCE = 1e-12

CI_METHODS = ['hoeffding', 'wilson']

HALF = Fraction(1, 2)


#floats are read through their decimal repr so 0.3 becomes 3/10
def as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return Fraction(str(float(value)))


def _is_exact(value):
    return isinstance(value, (Fraction, int))


@dataclass(frozen=True)
class Distribution:
    """
    Probability mass function over [d]^n. Words missing from `pmf` have
    probability zero.
    """
    d: int
    n: int
    pmf: MappingProxyType = field(repr=False)

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 2:
            raise ValueError('Alphabet size d must be an integer >= 2.')
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError('Word length n must be an integer >= 1.')
        pmf = {}
        for word, prob in dict(self.pmf).items():
            word = tuple(int(a) for a in word)
            if len(word) != self.n or any(a < 0 or a >= self.d for a in word):
                raise ValueError('Word {} is not in [{}]^{}.'.format(word, self.d, self.n))
            if prob < 0 or prob > 1:
                raise ValueError('Probability of {} must lie in [0, 1].'.format(word))
            if prob:
                pmf[word] = prob
        total = sum(pmf.values())
        if all(_is_exact(p) for p in pmf.values()):
            if total != 1:
                raise ValueError('Probabilities must sum to 1, got {}.'.format(total))
        elif abs(float(total) - 1.0) > SUM_TOLERANCE:
            raise ValueError('Probabilities must sum to 1, got {}.'.format(float(total)))
        object.__setattr__(self, 'pmf', MappingProxyType(pmf))

    @classmethod
    def uniform(cls, d, n=1):
        mass = Fraction(1, d ** n)
        return cls(d, n, {word: mass for word in itertools.product(range(d), repeat=n)})

    @classmethod
    def point_mass(cls, d, n, word):
        return cls(d, n, {tuple(word): Fraction(1)})

    #single-symbol distribution from a sequence of probabilities
    @classmethod
    def from_probabilities(cls, probabilities):
        probabilities = list(probabilities)
        return cls(len(probabilities), 1, {(a,): prob for a, prob in enumerate(probabilities)})

    @property
    def exact(self):
        return all(_is_exact(p) for p in self.pmf.values())

    def prob(self, word):
        return self.pmf.get(tuple(word), 0)

    def support(self):
        return sorted(self.pmf)

    def __repr__(self):
        return "<beaconlab.core.Distribution(d={}, n={}, support={}, exact={})>".format(
            self.d, self.n, len(self.pmf), self.exact
        )


def statistical_distance(x, y):
    if (x.d, x.n) != (y.d, y.n):
        raise DomainMismatchError(
            'Distributions live on different domains: [{}]^{} and [{}]^{}.'.format(x.d, x.n, y.d, y.n)
        )
    words = set(x.pmf) | set(y.pmf)
    total = sum(abs(x.prob(w) - y.prob(w)) for w in words)
    if x.exact and y.exact:
        return Fraction(total) / 2
    return float(total) / 2


def binary_bias(x):
    if x.d != 2 or x.n != 1:
        raise DomainMismatchError('Binary bias needs a distribution over {0,1}.')
    p0 = x.prob((0,))
    if _is_exact(p0):
        return abs(Fraction(p0) - HALF)
    return abs(float(p0) - 0.5)


@dataclass(frozen=True)
class SymbolFixingSource:
    """
    (n, k, [d]) non-oblivious symbol-fixing source.

    `fixed_set` holds 1-based positions controlled by `adversary_fn`. The
    function receives the k good symbols (ascending position) and returns
    the n-k fixed symbols (ascending position).
    """
    n: int
    k: int
    d: int
    fixed_set: frozenset
    adversary_fn: object = field(repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'fixed_set', frozenset(self.fixed_set))
        if not isinstance(self.d, int) or self.d < 2:
            raise ValueError('Alphabet size d must be an integer >= 2.')
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError('Word length n must be an integer >= 1.')
        if not isinstance(self.k, int) or not 0 <= self.k <= self.n:
            raise ValueError('k must be an integer in [0, n].')
        if len(self.fixed_set) != self.n - self.k:
            raise ValueError('The fixed set must contain exactly n - k positions.')
        if any(i < 1 or i > self.n for i in self.fixed_set):
            raise ValueError('Fixed positions must lie in [1, n].')
        if self.fixed_set and not callable(self.adversary_fn):
            raise TypeError('adversary_fn must be callable.')

    @property
    def good_positions(self):
        return [i for i in range(1, self.n + 1) if i not in self.fixed_set]

    @property
    def fixed_positions(self):
        return sorted(self.fixed_set)

    #assemble the full word from the good symbols
    def word(self, good):
        good = tuple(int(a) for a in good)
        fixed = tuple(int(a) for a in self.adversary_fn(good)) if self.fixed_set else ()
        if len(fixed) != self.n - self.k or any(a < 0 or a >= self.d for a in fixed):
            raise ValueError('adversary_fn must return n - k symbols in [0, d).')
        word = [0] * self.n
        for position, symbol in zip(self.good_positions, good):
            word[position - 1] = symbol
        for position, symbol in zip(self.fixed_positions, fixed):
            word[position - 1] = symbol
        return tuple(word)


def enumerate_source(s):
    if s.d ** s.k > ENUMERATION_LIMIT:
        raise EnumerationSizeError(
            'Enumerating {}^{} settings exceeds the limit of {} states.'.format(s.d, s.k, ENUMERATION_LIMIT)
        )
    mass = Fraction(1, s.d ** s.k)
    pmf = {}
    for good in itertools.product(range(s.d), repeat=s.k):
        word = s.word(good)
        pmf[word] = pmf.get(word, 0) + mass
    return Distribution(s.d, s.n, pmf)


def sample_source(s, rng_seed):
    rng = utils.make_rng(rng_seed)
    return s.word(rng.integers(0, s.d, size=s.k))


def sample_source_many(s, count, rng_seed):
    rng = utils.make_rng(rng_seed)
    good = rng.integers(0, s.d, size=(count, s.k))
    return np.array([s.word(row) for row in good], dtype=np.int64).reshape(count, s.n)


def empirical_distribution(samples, d):
    samples = np.asarray(samples)
    if samples.ndim != 2 or len(samples) == 0:
        raise ValueError('Samples must be a non-empty 2-d array of words.')
    words, counts = np.unique(samples, axis=0, return_counts=True)
    total = counts.sum()
    pmf = {tuple(int(a) for a in word): count / total for word, count in zip(words, counts)}
    return Distribution(d, samples.shape[1], pmf)


def hoeffding_halfwidth(trials, confidence):
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ValueError('Trials must be a positive integer.')
    if not 0 < confidence < 1:
        raise ValueError('Confidence must lie strictly between 0 and 1.')
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * trials))


#halfwidth of the Wilson score interval for a proportion
def wilson_halfwidth(successes, trials, confidence):
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        raise ValueError('Trials must be a positive integer.')
    if not 0 < confidence < 1:
        raise ValueError('Confidence must lie strictly between 0 and 1.')
    z = stats.norm.ppf(1 - (1 - confidence) / 2)
    phat = successes / trials
    denominator = 1 + z ** 2 / trials
    return z * math.sqrt(phat * (1 - phat) / trials + z ** 2 / (4 * trials ** 2)) / denominator


def stirling_majority_bound(n):
    if not isinstance(n, int) or n < 1:
        raise ValueError('n must be a positive integer.')
    return (math.e / math.pi) / math.sqrt(n)


#exact mass of the central binomial coefficient, C(n, n//2) / 2^n
def exact_central_binomial_mass(n):
    if not isinstance(n, int) or n < 1:
        raise ValueError('n must be a positive integer.')
    return Fraction(math.comb(n, n // 2), 2 ** n)


@dataclass(frozen=True)
class BiasReport:
    """
    Monte Carlo estimate of |Pr(output=0) - 1/2| for a bit-valued experiment.
    """
    estimate: float
    ci_halfwidth: float
    trials: int
    seed: int
    confidence: float
    ones: int = 0
    method: str = 'hoeffding'
    config_hash: str = None

    def __post_init__(self):
        if not 0 <= self.estimate <= 0.5:
            raise ValueError('Estimate must lie in [0, 1/2].')
        if self.ci_halfwidth < 0:
            raise ValueError('The CI halfwidth cannot be negative.')

    @classmethod
    def from_counts(cls, ones, trials, seed, confidence=0.95, method='hoeffding', config_hash=None):
        if method not in CI_METHODS:
            raise ValueError('CI method not valid. Accepted values: {}.'.format(', '.join(CI_METHODS)))
        ones = int(ones)
        if not 0 <= ones <= trials:
            raise ValueError('The count of ones must lie in [0, trials].')
        if method == 'hoeffding':
            halfwidth = hoeffding_halfwidth(trials, confidence)
        else:
            halfwidth = wilson_halfwidth(ones, trials, confidence)
        return cls(
            estimate=abs(ones / trials - 0.5),
            ci_halfwidth=halfwidth,
            trials=int(trials),
            seed=int(seed),
            confidence=confidence,
            ones=ones,
            method=method,
            config_hash=config_hash,
        )

    @classmethod
    def from_bits(cls, bits, seed, confidence=0.95, method='hoeffding', config_hash=None):
        bits = np.asarray(bits)
        return cls.from_counts(int(bits.sum()), len(bits), seed, confidence, method, config_hash)

    @property
    def lower(self):
        return max(self.estimate - self.ci_halfwidth, 0.0)

    @property
    def upper(self):
        return min(self.estimate + self.ci_halfwidth, 0.5)

    #tallies from disjoint trial sets add up; order does not matter
    def merge(self, other):
        if self.seed != other.seed or self.confidence != other.confidence or self.method != other.method:
            raise ValueError('Only reports sharing seed, confidence and method can be merged.')
        return BiasReport.from_counts(
            self.ones + other.ones, self.trials + other.trials, self.seed,
            self.confidence, self.method, self.config_hash,
        )
