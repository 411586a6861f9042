from fractions import Fraction
import itertools

import numpy as np
import pytest

from beaconlab import extractors
from beaconlab.errors import ParityError


def test_majority():
    assert extractors.majority([1, 0, 1]) == 1
    assert extractors.majority([0, 0, 1]) == 0
    with pytest.raises(ParityError):
        extractors.majority([0, 1])


def test_majority_rejects_non_bits():
    with pytest.raises(ValueError):
        extractors.majority([0, 2, 1])


def test_majority_many_matches_scalar():
    matrix = np.array(list(itertools.product((0, 1), repeat=5)))
    expected = [extractors.majority(row) for row in matrix]
    assert extractors.majority_many(matrix).tolist() == expected


def test_iterated_majority():
    #blocks (1,1,0) (0,0,1) (1,0,1) give (1,0,1) and then 1
    assert extractors.iterated_majority([1, 1, 0, 0, 0, 1, 1, 0, 1]) == 1
    with pytest.raises(ValueError):
        extractors.iterated_majority([1, 0, 1, 1, 0])


def test_iterated_majority_many_matches_scalar():
    rng = np.random.default_rng(3)
    matrix = rng.integers(0, 2, size=(200, 27))
    expected = [extractors.iterated_majority(row) for row in matrix]
    assert extractors.iterated_majority_many(matrix).tolist() == expected


@pytest.mark.parametrize('n, expected', [(1, False), (3, True), (9, True), (12, False), (81, True)])
def test_is_power_of_three(n, expected):
    assert extractors.is_power_of_three(n) is expected


def test_lsb():
    assert extractors.lsb(7) == 1
    assert extractors.lsb(65534) == 0
    with pytest.raises(ParityError):
        extractors.lsb(1, d=5)
    with pytest.raises(ValueError):
        extractors.lsb(2 ** 16)


def test_combine_rejects_unknown_kind():
    with pytest.raises(ValueError):
        extractors.combine('and', [1, 1])
    assert extractors.combine('xor', [1, 1, 1]) == 1


def test_check_arity():
    extractors.check_arity('xor', 4)
    with pytest.raises(ParityError):
        extractors.check_arity('majority', 4)
    with pytest.raises(ValueError):
        extractors.check_arity('iterated_majority', 6)


def test_extractor_spec():
    spec = extractors.ExtractorSpec('iterated_majority', 27)
    assert spec.depth == 3
    assert spec([1] * 27) == 1
    with pytest.raises(ValueError):
        spec([1] * 9)
    assert extractors.ExtractorSpec('majority', 5).depth is None


def test_truth_table_extractor_indexing():
    #table of the first symbol's parity over [4]^2
    table = [a % 2 for a in range(4) for _ in range(4)]
    E = extractors.TruthTableExtractor(4, 2, table)
    assert E((3, 0)) == 1
    assert E((2, 3)) == 0
    words = np.array(list(itertools.product(range(4), repeat=2)))
    assert extractors.batch_evaluate(E, words).tolist() == table


def test_truth_table_extractor_validates():
    with pytest.raises(ValueError):
        extractors.TruthTableExtractor(2, 2, [0, 1, 1])
    assert len(list(extractors.TruthTableExtractor.all_tables(2, 2))) == 16


def test_batch_evaluate_plain_callable():
    words = np.array([[0, 1, 1], [0, 0, 1]])
    assert extractors.batch_evaluate(extractors.majority, words).tolist() == [1, 0]


def test_ell_for_is_even():
    assert extractors.ell_raw(10 ** 4, 0.5) == 57
    assert extractors.ell_for(10 ** 4, 0.5) == 56
    with pytest.raises(ValueError):
        extractors.ell_for(101, 1.5)


@pytest.mark.parametrize('n, c', [(1, 0), (3, 1), (5, 1), (5, 2), (7, 3), (9, 2)])
def test_worst_case_majority_bias_matches_enumeration(n, c):
    assert extractors.worst_case_majority_bias(n, c) == extractors.enumerate_majority_bias(n, c)


@pytest.mark.parametrize('n', range(1, 16, 2))
def test_majority_is_monotone(n):
    words = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
    outputs = extractors.majority_many(words)
    for i in range(n):
        raised = words.copy()
        raised[:, i] = 1
        assert np.all(extractors.majority_many(raised) >= outputs)


def test_worst_case_majority_bias_matches_enumeration_grid():
    for n in range(1, 14, 2):
        for c in range(min(4, n - 1) + 1):
            assert extractors.worst_case_majority_bias(n, c) == extractors.enumerate_majority_bias(n, c), (n, c)


#both the even ell used by the analysis and the ell - 1 controlled coordinates of the source
@pytest.mark.parametrize('epsilon', [0.3, 0.5, 0.8])
def test_ell_for_bounds_majority_bias(epsilon):
    for n in range(3, 16, 2):
        ell = extractors.ell_for(n, epsilon)
        for c in {ell, max(ell - 1, 0), extractors.ell_raw(n, epsilon)}:
            assert extractors.worst_case_majority_bias(n, c) <= Fraction(epsilon) / 2, (n, c)


def test_worst_case_majority_bias_values():
    assert extractors.worst_case_majority_bias(3, 0) == 0
    assert extractors.worst_case_majority_bias(5, 1) == Fraction(3, 16)
    with pytest.raises(ParityError):
        extractors.worst_case_majority_bias(4, 1)


def test_withhold_flip_probability():
    assert extractors.withhold_flip_probability(3, 'majority', 0) == 0
    assert extractors.withhold_flip_probability(3, 'majority', 1) == Fraction(1, 2)
    assert extractors.withhold_flip_probability(3, 'majority', 2) == 1
    assert extractors.withhold_flip_probability(3, 'majority', 3) == 1
    assert extractors.withhold_flip_probability(4, 'xor', 1) == 1


def test_withhold_flip_probability_iterated_majority():
    #one corrupted leaf of a depth-2 tree: pivotal at both levels
    assert extractors.withhold_flip_probability(9, 'iterated_majority', 1) == Fraction(1, 4)
    assert extractors.withhold_flip_probability(3, 'iterated_majority', 1) == Fraction(1, 2)


def test_single_corrupted_party_among_nine():
    assert extractors.withhold_flip_probability(9, 'majority', 1) == Fraction(70, 256)
