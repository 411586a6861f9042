from fractions import Fraction
import json

import pytest

from beaconlab import hybrid
from beaconlab.backbone import BackboneConfig
from beaconlab.core import Distribution
from beaconlab.errors import ParityError
from beaconlab.extractors import worst_case_majority_bias
from beaconlab.utils import make_rng


class UniformChain:
    """
    Beacon bits straight from the seed, to keep hybrid runs fast.
    """
    name = 'uniform'

    def beacon(self, n, seed):
        return int(make_rng(seed).integers(2))


class SilentAdversary(hybrid.HybridAdversary):
    #corrupted parties never commit
    def commit(self, j, party, rng):
        return None


def test_windows():
    cfg = hybrid.HybridConfig(r=3, t=6, k=3, beacon_n=21, u1=1)
    assert cfg.windows(1) == (1, 10, 34)
    assert cfg.windows(2) == (35, 44, 68)
    assert cfg.round_span == 21 + 2 * 6 + 3 * 3
    assert hybrid.claim1_window(cfg) == cfg.round_span
    with pytest.raises(ValueError):
        cfg.windows(4)


def test_config_validation():
    with pytest.raises(ValueError):
        hybrid.HybridConfig(r=2)
    with pytest.raises(ValueError):
        hybrid.HybridConfig(m=4)
    with pytest.raises(ValueError):
        hybrid.HybridConfig(m=6, f_kind='iterated_majority')
    with pytest.raises(ValueError):
        hybrid.HybridConfig(chain='ethereum')
    hybrid.HybridConfig(m=4, f_kind='xor')


def test_escrow_settles_once():
    escrow = hybrid.Escrow(party=0, digest='ab', q=10, limit=34)
    assert escrow.reclaim() == 10
    with pytest.raises(ValueError):
        escrow.forfeit()


def test_commitment_digest():
    digest = hybrid.commitment_digest(1, 0, 1, b'\x00' * 16)
    assert len(digest) == 64
    assert digest != hybrid.commitment_digest(1, 0, 0, b'\x00' * 16)


def test_idle_run_reclaims_everything():
    cfg = hybrid.HybridConfig(m=3, r=3)
    bit, records, penalties = hybrid.run_hybrid(cfg, chain_sim=UniformChain(), seed=1)
    assert bit in (0, 1)
    assert len(records) == 3
    assert penalties == 0
    assert hybrid.escrow_balance(records, cfg) == (90.0, 90.0, 0.0)
    for record in records:
        assert record.s == record.beacon_bit ^ hybrid.combine(cfg.f_kind, record.effective_bits)


def test_run_hybrid_with_forkless_chain():
    cfg = hybrid.HybridConfig(m=3, r=1, beacon_n=11)
    first = hybrid.run_hybrid(cfg, seed=4)
    second = hybrid.run_hybrid(cfg, seed=4)
    assert first[0] == second[0]
    assert first[1] == second[1]


def test_run_hybrid_with_backbone_chain():
    chain = hybrid.make_chain('backbone', BackboneConfig(N=10, t=0, success_prob=0.05, n=11, k=2))
    cfg = hybrid.HybridConfig(m=3, r=1, beacon_n=5, chain='backbone')
    bit, records, _ = hybrid.run_hybrid(cfg, chain_sim=chain, seed=2)
    assert records[0].beacon_bit in (0, 1)
    with pytest.raises(ValueError):
        hybrid.make_chain('ethereum')


def test_majority_control_forces_a_single_round():
    cfg = hybrid.HybridConfig(m=3, r=1)
    adversary = hybrid.MajorityControlAdversary(corrupted=2, desired=1)
    for seed in range(20):
        bit, records, penalties = hybrid.run_hybrid(cfg, adversary=adversary, chain_sim=UniformChain(), seed=seed)
        assert bit == 1
        assert penalties == records[0].destroyed


def test_forfeits_are_sticky_and_coins_conserved():
    cfg = hybrid.HybridConfig(m=3, r=5)
    adversary = hybrid.MajorityControlAdversary(corrupted=2, desired=1)
    for seed in range(10):
        _, records, penalties = hybrid.run_hybrid(cfg, adversary=adversary, chain_sim=UniformChain(), seed=seed)
        locked, reclaimed, destroyed = hybrid.escrow_balance(records, cfg)
        assert locked == reclaimed + destroyed
        assert destroyed == penalties
        gone = set()
        for record in records:
            for party in gone:
                assert not record.committed[party]
                assert record.effective_bits[party] == 0
            gone |= {i for i, (c, o) in enumerate(zip(record.committed, record.decommitted)) if c and not o}


def test_missing_commitment_forfeits():
    cfg = hybrid.HybridConfig(m=3, r=3)
    _, records, penalties = hybrid.run_hybrid(cfg, adversary=SilentAdversary(1), chain_sim=UniformChain(), seed=0)
    assert penalties == 0
    assert all(not record.committed[0] and record.effective_bits[0] == 0 for record in records)
    assert hybrid.escrow_balance(records, cfg)[0] == 3 * 2 * cfg.q


def test_too_many_corrupted_parties():
    with pytest.raises(ValueError):
        hybrid.run_hybrid(hybrid.HybridConfig(m=3), adversary=hybrid.MajorityControlAdversary(4), seed=0)


def test_fixed_bits_adversary_always_opens():
    cfg = hybrid.HybridConfig(m=3, r=3, f_kind='xor')
    _, records, penalties = hybrid.run_hybrid(
        cfg, adversary=hybrid.FixedBitsAdversary([1, 0]), chain_sim=UniformChain(), seed=5)
    assert penalties == 0
    assert all(record.committed[:2] == (True, True) for record in records)
    assert all(all(record.decommitted) for record in records)


@pytest.mark.parametrize('m', [1, 2, 3, 4])
def test_xor_with_one_honest_party_is_uniform(m):
    for corrupted in range(m):
        for beacon_bit in (0, 1):
            adversary = hybrid.FixedBitsAdversary([1] * corrupted)
            x = hybrid.exact_round_distribution(m, 'xor', adversary, beacon_bit)
            assert dict(x.pmf) == dict(Distribution.uniform(2).pmf)


def test_majority_control_round_distribution():
    x = hybrid.exact_round_distribution(3, 'majority', hybrid.MajorityControlAdversary(2))
    assert x.prob((1,)) == 1


def test_expected_withhold_penalty():
    assert hybrid.expected_withhold_penalty(3, 2, 1) == Fraction(3, 4)
    assert hybrid.expected_withhold_penalty(3, 3, 1) == 1
    assert hybrid.expected_withhold_penalty(3, 2, 10.0) == pytest.approx(7.5)
    assert hybrid.expected_withhold_penalty(3, 0, 1) == 0


def test_optimal_adaptive_bias():
    assert hybrid.optimal_adaptive_bias(5, 0) == 0
    assert hybrid.optimal_adaptive_bias(5, 1) == Fraction(3, 16)
    assert hybrid.optimal_adaptive_bias(5, 1) == worst_case_majority_bias(5, 1)
    assert hybrid.optimal_adaptive_bias(5, 3) == Fraction(1, 2)
    with pytest.raises(ParityError):
        hybrid.optimal_adaptive_bias(4, 1)


def test_adaptive_adversary_stops_once_the_outcome_is_decided():
    cfg = hybrid.HybridConfig(r=3)
    adversary = hybrid.adaptive_round_adversary(3)
    bit, records, penalties = hybrid.run_hybrid(cfg, adversary=adversary, chain_sim=UniformChain(), seed=0)
    assert bit == 1
    assert [record.controlled for record in records] == [True, True, False]
    assert records[0].beacon_bit is None
    assert penalties == 0


def test_adaptive_adversary_matches_optimal_bias():
    cfg = hybrid.HybridConfig(m=1, r=5)
    report = hybrid.estimate_hybrid_bias(
        cfg, hybrid.adaptive_round_adversary(1), 4000, 3, chain_sim=UniformChain())
    assert abs(report.estimate - 3 / 16) <= 1.5 * report.ci_halfwidth


def test_adaptive_adversary_without_quota_is_passive():
    adversary = hybrid.AdaptiveRoundAdversary(0)
    assert adversary.take_control(1, (), 5) is None
    with pytest.raises(ValueError):
        hybrid.AdaptiveRoundAdversary(-1)


def test_hybrid_trials_shape():
    values = hybrid.hybrid_trials(hybrid.HybridConfig(r=3), hybrid.IdleAdversary(), 10, 0, chain_sim=UniformChain())
    assert values.shape == (10, 2)
    assert (values[:, 1] == 0).all()


def test_claim1_conditions():
    cfg = hybrid.HybridConfig(q=10)
    assert not hybrid.claim1_conditions(cfg, R1=5, R2=5, maxprofits=5)
    assert hybrid.claim1_conditions(cfg, R1=5, R2=5, maxprofits=4.9)
    assert not hybrid.claim1_conditions(cfg, R1=5, R2=5, maxprofits=4.9, corrupted=2)
    assert not hybrid.claim1_conditions(cfg, R1=5, R2=5, maxprofits=4.9, under_budget=True)
    assert hybrid.claim1_conditions(cfg, R1=2, R2=1, maxprofits=lambda t, i: min(2 * t, i))


def test_claim2_ell():
    assert hybrid.claim2_ell(10 ** 4, 0.05) == 10
    assert hybrid.claim2_ell(10 ** 4, 1e-6) == 0
    assert hybrid.claim2_ell(10 ** 4, 0.1) >= hybrid.claim2_ell(10 ** 4, 0.05)
    assert hybrid.claim2_ell(10 ** 6, 0.05) >= hybrid.claim2_ell(10 ** 4, 0.05)
    with pytest.raises(ValueError):
        hybrid.claim2_ell(1, 0.05)


def test_claim2_conditions():
    result = hybrid.claim2_conditions(hybrid.HybridConfig(r=10001, q=10), 0.05, 1, 1, 1)
    assert result == {'ell': result['ell'], 'per_round': True, 'majority_rounds': True, 'applicable': True}


def test_cltv_script():
    script = hybrid.emit_cltv_script(500000, 'ab12', '02ff')
    assert script == '500000 CHECKLOCKTIMEVERIFY IF HASH256 ab12 EQUALVERIFY 02ff CHECKSIGVERIFY ENDIF'
    assert hybrid.parse_cltv_script(script) == (500000, 'ab12', '02ff')


@pytest.mark.parametrize('tau, c_hex, pk_hex', [(1, 'xyz', '02ff'), (1, 'ab12', ''), (-1, 'ab', 'cd'), (True, 'ab', 'cd')])
def test_cltv_script_rejects_bad_input(tau, c_hex, pk_hex):
    with pytest.raises(ValueError):
        hybrid.emit_cltv_script(tau, c_hex, pk_hex)


def test_parse_cltv_script_rejects_other_text():
    with pytest.raises(ValueError):
        hybrid.parse_cltv_script('500000 CHECKSIG')


def test_export_round_records(tmp_path):
    cfg = hybrid.HybridConfig(m=3, r=3)
    _, records, _ = hybrid.run_hybrid(cfg, chain_sim=UniformChain(), seed=0)
    path = tmp_path / 'rounds.jsonl'
    hybrid.export_round_records(records, path)
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert [line['round'] for line in lines] == [1, 2, 3]
    assert lines[0]['u_second'] == records[0].u_second
