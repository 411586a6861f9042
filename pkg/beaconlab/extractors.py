"""
Bit extractors used by the beacons: majority, iterated 3-ary majority,
xor, least-significant-bit derivation, plus exact worst-case bias oracles.
"""

from dataclasses import dataclass
from fractions import Fraction
import itertools
import math

import numpy as np

from .errors import ParityError

EXTRACTOR_KINDS = ['majority', 'iterated_majority']

#combining functions accepted by the hybrid protocol
F_KINDS = ['majority', 'xor', 'iterated_majority']

#(pi/e), the constant in the extractor parameterization
PI_OVER_E = math.pi / math.e


def _bits(bits):
    bits = [int(b) for b in bits]
    if any(b not in (0, 1) for b in bits):
        raise ValueError('Inputs must be bits (0 or 1).')
    return bits


def majority(bits):
    bits = _bits(bits)
    if len(bits) % 2 == 0:
        raise ParityError('Majority needs an odd number of bits, got {}.'.format(len(bits)))
    return int(2 * sum(bits) >= len(bits))


#row-wise majority of a 0/1 matrix with an odd number of columns
def majority_many(matrix):
    matrix = np.asarray(matrix)
    if matrix.shape[-1] % 2 == 0:
        raise ParityError('Majority needs an odd number of bits, got {}.'.format(matrix.shape[-1]))
    return (2 * matrix.sum(axis=-1) >= matrix.shape[-1]).astype(np.int64)


def xor_bits(bits):
    return sum(_bits(bits)) % 2


parity = xor_bits


def is_power_of_three(n):
    if not isinstance(n, (int, np.integer)) or n < 3:
        return False
    while n % 3 == 0:
        n //= 3
    return n == 1


def iterated_majority(bits):
    bits = _bits(bits)
    if not is_power_of_three(len(bits)):
        raise ValueError('Iterated majority needs 3^depth bits (depth >= 1), got {}.'.format(len(bits)))
    while len(bits) > 1:
        bits = [int(sum(bits[i:i + 3]) >= 2) for i in range(0, len(bits), 3)]
    return bits[0]


def iterated_majority_many(matrix):
    matrix = np.asarray(matrix)
    if not is_power_of_three(matrix.shape[-1]):
        raise ValueError('Iterated majority needs 3^depth bits (depth >= 1).')
    while matrix.shape[-1] > 1:
        matrix = (matrix.reshape(matrix.shape[:-1] + (-1, 3)).sum(axis=-1) >= 2).astype(np.int64)
    return matrix[..., 0]


def lsb(symbol, d=2 ** 16):
    if d % 2:
        raise ParityError('LSB derivation needs an even alphabet, got d={}.'.format(d))
    if not 0 <= symbol < d:
        raise ValueError('Symbol {} is not in [0, {}).'.format(symbol, d))
    return int(symbol) % 2


COMBINERS = {
    'majority': majority,
    'xor': xor_bits,
    'iterated_majority': iterated_majority,
}


def combine(f_kind, bits):
    if f_kind not in COMBINERS:
        raise ValueError('Combining function not valid. Accepted values: {}.'.format(', '.join(F_KINDS)))
    return COMBINERS[f_kind](bits)


def check_arity(f_kind, m):
    if f_kind not in COMBINERS:
        raise ValueError('Combining function not valid. Accepted values: {}.'.format(', '.join(F_KINDS)))
    if not isinstance(m, int) or m < 1:
        raise ValueError('The number of inputs must be a positive integer.')
    if f_kind == 'majority' and m % 2 == 0:
        raise ParityError('Majority needs an odd number of inputs, got {}.'.format(m))
    if f_kind == 'iterated_majority' and not is_power_of_three(m):
        raise ValueError('Iterated majority needs 3^depth inputs, got {}.'.format(m))


@dataclass(frozen=True)
class ExtractorSpec:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in EXTRACTOR_KINDS:
            raise ValueError('Extractor kind not valid. Accepted values: {}.'.format(', '.join(EXTRACTOR_KINDS)))
        check_arity(self.kind, self.n)

    @property
    def depth(self):
        if self.kind != 'iterated_majority':
            return None
        return round(math.log(self.n, 3))

    def __call__(self, bits):
        if len(bits) != self.n:
            raise ValueError('Expected {} bits, got {}.'.format(self.n, len(bits)))
        return COMBINERS[self.kind](bits)

    def batch(self, matrix):
        if self.kind == 'majority':
            return majority_many(matrix)
        return iterated_majority_many(matrix)


#lexicographic index of a word, first symbol most significant
def word_index(word, d):
    index = 0
    for symbol in word:
        index = index * d + int(symbol)
    return index


class TruthTableExtractor:
    """
    Arbitrary extractor on [d]^n given by its table of outputs, indexed by
    `word_index`.
    """

    def __init__(self, d, n, table):
        table = tuple(int(b) for b in table)
        if len(table) != d ** n:
            raise ValueError('A table over [{}]^{} needs {} entries.'.format(d, n, d ** n))
        if any(b not in (0, 1) for b in table):
            raise ValueError('Table entries must be bits.')
        self.d = d
        self.n = n
        self.table = table
        self._weights = d ** np.arange(n - 1, -1, -1)
        self._array = np.array(table, dtype=np.int64)

    def __call__(self, word):
        return self.table[word_index(word, self.d)]

    def batch(self, matrix):
        return self._array[np.asarray(matrix) @ self._weights]

    def __repr__(self):
        return "<beaconlab.extractors.TruthTableExtractor(d={}, n={})>".format(self.d, self.n)

    @classmethod
    def all_tables(cls, d, n):
        for table in itertools.product((0, 1), repeat=d ** n):
            yield cls(d, n, table)

    @classmethod
    def random(cls, d, n, rng):
        return cls(d, n, rng.integers(0, 2, size=d ** n))


#evaluate an extractor over the rows of a word matrix
def batch_evaluate(extractor, matrix):
    if hasattr(extractor, 'batch'):
        return np.asarray(extractor.batch(matrix))
    return np.array([extractor(tuple(int(a) for a in row)) for row in np.asarray(matrix)], dtype=np.int64)


def ell_raw(n, epsilon):
    if not isinstance(n, int) or n < 2:
        raise ValueError('n must be an integer >= 2.')
    if not 0 < epsilon <= 1 / PI_OVER_E:
        raise ValueError('Epsilon must lie in (0, e/pi].')
    return math.floor(epsilon * PI_OVER_E * math.sqrt(n - math.sqrt(n)))


#the analyzed value is even: an odd count is lowered by one
def ell_for(n, epsilon):
    ell = ell_raw(n, epsilon)
    return max(ell - ell % 2, 0)


def _check_controlled(n, c):
    if not isinstance(n, int) or n < 1 or n % 2 == 0:
        raise ParityError('n must be a positive odd integer, got {}.'.format(n))
    if not isinstance(c, int) or not 0 <= c < n:
        raise ValueError('The number of controlled coordinates must lie in [0, n).')


def worst_case_majority_bias(n, c):
    """
    Largest |Pr(maj=1) - 1/2| a non-oblivious adversary controlling c of n
    coordinates achieves; the remaining n-c are uniform.
    """
    _check_controlled(n, c)
    honest = n - c
    threshold = (n + 1) // 2
    pivotal = sum(math.comb(honest, s) for s in range(max(threshold - c, 0), min(threshold - 1, honest) + 1))
    return Fraction(pivotal, 2 ** honest) / 2


#brute force over honest words and every controlled assignment
def enumerate_majority_bias(n, c):
    _check_controlled(n, c)
    honest = n - c
    can_force_one = 0
    forced_one = 0
    for honest_bits in itertools.product((0, 1), repeat=honest):
        outputs = {majority(honest_bits + controlled) for controlled in itertools.product((0, 1), repeat=c)}
        can_force_one += 1 in outputs
        forced_one += outputs == {1}
    total = 2 ** honest
    return max(Fraction(can_force_one, total) - Fraction(1, 2), Fraction(1, 2) - Fraction(forced_one, total))


def _combine_states(children):
    #a state is (output with corrupted bits at 0, output with corrupted bits at 1)
    lo = int(sum(child[0] for child in children) >= 2)
    hi = int(sum(child[1] for child in children) >= 2)
    return lo, hi


def _iterated_pivotal(m, corrupted):
    honest_leaf = {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)}
    layer = [{(0, 1): Fraction(1)} if i < corrupted else honest_leaf for i in range(m)]
    while len(layer) > 1:
        parents = []
        for i in range(0, len(layer), 3):
            parent = {}
            for combo in itertools.product(*(layer[i + j].items() for j in range(3))):
                state = _combine_states([s for s, _ in combo])
                parent[state] = parent.get(state, 0) + math.prod(p for _, p in combo)
            parents.append(parent)
        layer = parents
    return layer[0].get((0, 1), Fraction(0))


def withhold_flip_probability(m, f_kind, corrupted):
    """
    Exact probability, over uniform honest inputs, that the bits of the
    corrupted parties decide the output of f. Corrupted parties occupy the
    first `corrupted` input positions.
    """
    check_arity(f_kind, m)
    if not isinstance(corrupted, int) or not 0 <= corrupted <= m:
        raise ValueError('The number of corrupted parties must lie in [0, m].')
    if corrupted == 0:
        return Fraction(0)
    if f_kind == 'xor':
        return Fraction(1)
    if f_kind == 'majority':
        honest = m - corrupted
        threshold = (m + 1) // 2
        pivotal = sum(math.comb(honest, s) for s in range(max(threshold - corrupted, 0), min(threshold - 1, honest) + 1))
        return Fraction(pivotal, 2 ** honest)
    return _iterated_pivotal(m, corrupted)
