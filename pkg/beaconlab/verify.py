"""
Exact oracle checks, run as the `verify` experiment.

Each check returns (passed, detail). They use exact rational arithmetic
except where a seeded sample of inputs is drawn.
"""

from fractions import Fraction
import itertools
import logging
import math

import pandas as pd

from . import backbone, core, extractors, forkless, hybrid, lowerbound, multichain, utils

logger = logging.getLogger(__name__)


def check_lowerbound_exact(seed, random_extractors=50, ps=(0.25, 0.5, 1.0)):
    rng = utils.make_rng(seed)
    checked = 0
    for p in ps:
        bound = core.as_fraction(p) / 12
        tables = [t for n in (1, 2) for t in extractors.TruthTableExtractor.all_tables(2, n)]
        tables += [extractors.TruthTableExtractor.random(2, 3, rng) for _ in range(random_extractors)]
        for E in tables:
            src = lowerbound.build_adversarial_source(E, 2, E.n, p)
            if lowerbound.measured_bias(E, src) < bound:
                return False, 'extractor {} at p={} below p/12'.format(E.table, p)
            checked += 1
    return True, '{} extractors'.format(checked)


def random_perturbed(rng, d, p):
    """
    A random p-perturbed distribution over [d] with rational masses.
    """
    p = core.as_fraction(p)
    denominator = 1000
    offsets = [Fraction(int(v), denominator) for v in rng.integers(-denominator, denominator + 1, size=d)]
    mean = sum(offsets) / d
    offsets = [o - mean for o in offsets]
    scale = max(abs(o) for o in offsets)
    if scale == 0:
        return lowerbound.PerturbedDistribution(d, p, [Fraction(1, d)] * d)
    pmf = [(1 + o / scale * p) / d for o in offsets]
    return lowerbound.PerturbedDistribution(d, p, pmf)


def check_embedding(seed, targets=100, max_d=8):
    rng = utils.make_rng(seed)
    for _ in range(targets):
        d = int(rng.integers(2, max_d + 1))
        p = Fraction(int(rng.integers(1, 101)), 100)
        x = random_perturbed(rng, d, p / 2)
        sampler = lowerbound.resettable_sampler(x, p)
        expected = core.Distribution.from_probabilities(x.pmf)
        if lowerbound.exact_sampler_pmf(sampler) != expected:
            return False, 'sampler differs from target at d={}, p={}'.format(d, p)
    return True, '{} targets'.format(targets)


def check_majority_extractor():
    for n in range(1, 16, 2):
        for epsilon in (0.3, 0.5, 0.8):
            ell = extractors.ell_raw(n, epsilon) if n >= 2 else 0
            c = max(ell - 1, 0)
            if c >= n:
                continue
            bias = extractors.worst_case_majority_bias(n, c)
            if bias > core.as_fraction(epsilon) / 2:
                return False, 'n={}, epsilon={}: bias {}'.format(n, epsilon, bias)
            if n <= 13 and bias != extractors.enumerate_majority_bias(n, c):
                return False, 'closed form differs from enumeration at n={}, c={}'.format(n, c)
    return True, 'odd n <= 15'


def check_stirling(limit=64):
    for n in range(1, limit + 1):
        #Fraction against float compares exact values
        if core.exact_central_binomial_mass(n) > core.stirling_majority_bound(n):
            return False, 'n={}'.format(n)
    return True, '1 <= n <= {}'.format(limit)


def check_negbin_exact():
    for ell in (18, 90):
        for p_prime in (0.05, 0.1):
            tail = forkless.negbin_tail_exact(2 / 3, ell, p_prime)
            if tail > math.exp(-ell / 18):
                return False, 'ell={}, p\'={}: {}'.format(ell, p_prime, tail)
    return True, 'ell in (18, 90), p\' in (0.05, 0.1)'


def check_hybrid_pivotal():
    majority = extractors.withhold_flip_probability(9, 'majority', 1)
    iterated = extractors.withhold_flip_probability(9, 'iterated_majority', 1)
    if majority != Fraction(70, 256) or iterated != Fraction(1, 4):
        return False, 'majority {}, iterated {}'.format(majority, iterated)
    return True, '70/256 and 1/4'


def check_cltv():
    expected = '500000 CHECKLOCKTIMEVERIFY IF HASH256 ab12 EQUALVERIFY 02ff CHECKSIGVERIFY ENDIF'
    script = hybrid.emit_cltv_script(500000, 'ab12', '02ff')
    if script != expected or hybrid.parse_cltv_script(script) != (500000, 'ab12', '02ff'):
        return False, script
    return True, 'template and parser agree'


def check_xor_uniformity(max_m=4):
    uniform = core.Distribution.uniform(2)
    for m in range(1, max_m + 1):
        for corrupted in range(m):
            for bits in itertools.product((0, 1), repeat=corrupted):
                for b in (0, 1):
                    law = hybrid.exact_round_distribution(m, 'xor', hybrid.FixedBitsAdversary(bits), beacon_bit=b)
                    if law != uniform:
                        return False, 'm={}, corrupted bits {}, b={}'.format(m, bits, b)
    return True, 'm <= {}'.format(max_m)


def check_adaptive_control():
    for r in (1, 3, 5, 7):
        for quota in range(r + 1):
            value = hybrid.optimal_adaptive_bias(r, quota)
            expected = Fraction(1, 2) if quota >= (r + 1) // 2 else extractors.worst_case_majority_bias(r, quota)
            if value != expected:
                return False, 'r={}, quota={}: {} != {}'.format(r, quota, value, expected)
    return True, 'r <= 7'


def check_claim2_ell():
    value = hybrid.claim2_ell(10 ** 4, 0.05)
    return value == 10, 'claim2_ell(10^4, 0.05) = {}'.format(value)


def check_choose_w(seed, traces=1000):
    for m in (5, 10, 25):
        if multichain.choose_w(100, 50, m) != 2 * m:
            return False, 'choose_w(100, 50, {})'.format(m)
    rng = utils.make_rng(seed)
    for _ in range(traces):
        m = int(rng.integers(1, 12))
        w = multichain.odd_total_w(m, int(rng.integers(0, 12)))
        bits = rng.integers(0, 2, size=m + w)
        shuffled = rng.permutation(bits)
        if multichain.combined_majority(bits[:m], bits[m:]) != multichain.combined_majority(shuffled[:m], shuffled[m:]):
            return False, 'permutation changed the output'
    return True, 'choose_w and {} permuted traces'.format(traces)


def check_chain_quality():
    honest = backbone.AnnotatedChain(tuple(range(6)), (False,) * 6, (0,) * 6)
    alternating = backbone.AnnotatedChain(tuple(range(6)), (False, True) * 3, (0,) * 6)
    ok = backbone.chain_quality(honest, 3) == 1 and backbone.chain_quality(alternating, 2) == 0.5
    return ok, 'all-honest and alternating chains'


def check_upbound2_params():
    ell, L = backbone.upbound2_params(0.3, 101, 2, 0.5)
    return (ell, L) == (1, 5), 'ell={}, L={}'.format(ell, L)


def run_checks(seed, random_extractors=50, targets=100):
    """
    Run every check; returns a DataFrame with one row per check.
    """
    checks = {
        'lowerbound_exact': lambda: check_lowerbound_exact(seed, random_extractors),
        'embedding_exact': lambda: check_embedding(seed, targets),
        'majority_extractor': check_majority_extractor,
        'stirling_bound': check_stirling,
        'negbin_exact_tail': check_negbin_exact,
        'hybrid_pivotal': check_hybrid_pivotal,
        'cltv_template': check_cltv,
        'xor_uniformity': check_xor_uniformity,
        'adaptive_control': check_adaptive_control,
        'claim2_ell': check_claim2_ell,
        'choose_w': lambda: check_choose_w(seed),
        'chain_quality': check_chain_quality,
        'upbound2_params': check_upbound2_params,
    }
    rows = []
    for name, check in checks.items():
        passed, detail = check()
        logger.info('%s: %s (%s)', name, 'ok' if passed else 'FAILED', detail)
        rows.append({'case': name, 'passed': bool(passed), 'detail': detail})
    return pd.DataFrame(rows)
