from fractions import Fraction

import numpy as np
import pytest

from beaconlab import lowerbound
from beaconlab.core import Distribution
from beaconlab.errors import BoundViolationError, EnumerationSizeError, ParityError
from beaconlab.extractors import TruthTableExtractor, majority


def test_perturbed_distribution_bounds():
    x = lowerbound.PerturbedDistribution(d=2, p=Fraction(1, 2), pmf=(Fraction(3, 8), Fraction(5, 8)))
    assert x.pmf == (Fraction(3, 8), Fraction(5, 8))
    with pytest.raises(BoundViolationError) as excinfo:
        lowerbound.PerturbedDistribution(d=2, p=Fraction(1, 2), pmf=(Fraction(1, 8), Fraction(7, 8)))
    assert excinfo.value.symbol == 0


def test_perturbed_distribution_rejects_bad_p():
    with pytest.raises(ValueError):
        lowerbound.PerturbedDistribution(d=2, p=0, pmf=(Fraction(1, 2), Fraction(1, 2)))


def test_resettable_sampler_reproduces_target():
    x = lowerbound.PerturbedDistribution(d=4, p=Fraction(1, 4), pmf=(
        Fraction(7, 32), Fraction(9, 32), Fraction(1, 4), Fraction(1, 4)))
    s = lowerbound.resettable_sampler(x)
    assert s.p == Fraction(1, 2)
    assert all(1 - s.p <= keep <= 1 for keep in s.keep_prob)
    assert dict(lowerbound.exact_sampler_pmf(s).pmf) == dict(Distribution.from_probabilities(x.pmf).pmf)


def test_resettable_sampler_needs_half_perturbed_input():
    x = lowerbound.PerturbedDistribution(d=2, p=Fraction(1, 2), pmf=(Fraction(3, 8), Fraction(5, 8)))
    with pytest.raises(BoundViolationError):
        lowerbound.resettable_sampler(x, p=Fraction(1, 4))


def test_adversarial_source_biases_majority():
    src = lowerbound.build_adversarial_source(majority, d=2, n=3, p=1)
    assert len(src.S) == 4
    assert not src.swapped
    assert lowerbound.measured_bias(majority, src) == Fraction(1, 12)
    assert lowerbound.verify_perturbed_conditionals(src)


def test_adversarial_source_swaps_labels():
    E = TruthTableExtractor(2, 2, [1, 1, 1, 1])
    src = lowerbound.build_adversarial_source(E, d=2, n=2, p=Fraction(1, 2))
    assert src.swapped and src.target == 1
    assert lowerbound.measured_bias(E, src) == Fraction(1, 2)


@pytest.mark.parametrize('seed', range(5))
def test_random_extractors_reach_p_over_12(seed):
    rng = np.random.default_rng(seed)
    E = TruthTableExtractor.random(4, 2, rng)
    p = Fraction(1, 3)
    src = lowerbound.build_adversarial_source(E, d=4, n=2, p=p)
    assert lowerbound.measured_bias(E, src) >= p / 12
    assert lowerbound.verify_perturbed_conditionals(src)


def test_adversarial_source_guards():
    with pytest.raises(ParityError):
        lowerbound.build_adversarial_source(majority, d=3, n=3, p=1)
    with pytest.raises(EnumerationSizeError):
        lowerbound.build_adversarial_source(majority, d=2, n=23, p=1)


def test_exact_conditional_sums_to_one():
    src = lowerbound.build_adversarial_source(majority, d=2, n=3, p=1)
    assert sum(lowerbound.exact_conditional(src, ())) == 1
    assert sum(lowerbound.exact_conditional(src, (1, 0))) == 1


def test_claim_chain():
    assert lowerbound.claim_chain_holds(Fraction(1, 6))
    assert lowerbound.claim_chain_holds(Fraction(1, 3))
    with pytest.raises(ValueError):
        lowerbound.claim_chain_holds(Fraction(1, 2))
    with pytest.raises(ValueError):
        lowerbound.claim_chain_holds(0)


def test_claim_chain_holds_on_random_q():
    rng = np.random.default_rng(11)
    dens = rng.integers(3, 10 ** 6, size=10 ** 4)
    for den in dens:
        num = int(rng.integers(1, den // 3 + 1))
        assert lowerbound.claim_chain_holds(Fraction(num, int(den)))
    assert lowerbound.claim_chain_holds(Fraction(1, 10 ** 12))


def test_adversarial_source_rejects_unperturbed_conditionals(monkeypatch):
    skewed = {(): Fraction(1), (0,): Fraction(9, 10), (1,): Fraction(1, 10)}
    monkeypatch.setattr(lowerbound, '_prefix_masses', lambda distribution: skewed)
    with pytest.raises(BoundViolationError) as excinfo:
        lowerbound.build_adversarial_source(majority, d=2, n=3, p=1)
    assert excinfo.value.symbol == 0


def test_uniform_conditionals_are_unperturbed():
    assert lowerbound.verify_perturbed_conditionals(Distribution.uniform(2, 3))
    skewed = Distribution(2, 1, {(0,): Fraction(3, 4), (1,): Fraction(1, 4)})
    assert not lowerbound.verify_perturbed_conditionals(skewed)


def test_resettable_adversary_realizes_source():
    src = lowerbound.build_adversarial_source(majority, d=2, n=3, p=1)
    zeros = sum(majority(lowerbound.run_resettable_adversary(src, seed)) == 0 for seed in range(3000))
    #the source puts 7/12 of its mass on majority 0
    assert zeros / 3000 == pytest.approx(7 / 12, abs=0.04)


def test_resettable_adversary_counts_resets():
    src = lowerbound.build_adversarial_source(majority, d=2, n=3, p=1)
    word, resets = lowerbound.run_resettable_adversary(src, 4, with_resets=True)
    assert len(word) == 3
    assert 0 <= resets <= 3
    assert lowerbound.run_resettable_adversary(src, 4) == word


def test_efficient_reset_decision_with_exact_eta():
    #largest allowed conditional mass keeps the symbol for sure
    for seed in range(20):
        decision = lowerbound.efficient_reset_decision(
            majority, (), 0, 1, 10, seed, d=2, n=3, eta=Fraction(3, 4))
        assert decision == lowerbound.KEEP
    with pytest.raises(ValueError):
        lowerbound.efficient_reset_decision(majority, (), 0, 1, 0, 0, d=2, n=3)


def test_estimate_conditional_tracks_exact():
    src = lowerbound.build_adversarial_source(majority, d=2, n=3, p=1)
    rng = np.random.default_rng(0)
    estimate = lowerbound.estimate_conditional(majority, (0,), 0, 1, 20000, rng, d=2, n=3)
    assert estimate == pytest.approx(float(lowerbound.exact_conditional(src, (0,))[0]), abs=0.02)


def test_estimate_efficient_bias_is_reproducible():
    a = lowerbound.estimate_efficient_bias(majority, 2, 3, 1, samples=50, runs=100, seed=9)
    b = lowerbound.estimate_efficient_bias(majority, 2, 3, 1, samples=50, runs=100, seed=9)
    assert a == b
    assert a.trials == 100


def test_streaming_extractor_bound():
    def first_symbol(prefix):
        return prefix[0] % 2 if prefix else None

    result = lowerbound.streaming_bias_bound(first_symbol, d=2, n=2, p=1)
    assert result['not_halted'] == 0
    assert result['truncated_bias'] == Fraction(1, 12)
    assert result['streaming_bias'] == Fraction(1, 12)


#halts on a single first symbol only, the rest is left to the default
@pytest.mark.parametrize('halting_symbol, not_halted, truncated_bias, streaming_bias', [
    (1, Fraction(7, 12), Fraction(1, 12), Fraction(0)),
    (0, Fraction(5, 12), Fraction(1, 2), Fraction(1, 12)),
])
def test_streaming_bias_with_partial_halting(halting_symbol, not_halted, truncated_bias, streaming_bias):
    def stream(prefix):
        return halting_symbol if prefix[0] == halting_symbol else None

    result = lowerbound.streaming_bias_bound(stream, d=2, n=2, p=1)
    assert result['not_halted'] == not_halted
    assert result['truncated_bias'] == truncated_bias
    assert result['streaming_bias'] == streaming_bias



def test_truncated_extractor_defaults_when_not_halted():
    never = lowerbound.truncate_streaming_extractor(lambda prefix: None, 3, default=1)
    assert never((0, 0, 0)) == 1
    assert not lowerbound.halts_within(lambda prefix: None, (0, 1))
