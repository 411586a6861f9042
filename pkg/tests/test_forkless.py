import math

import numpy as np
import pytest

from beaconlab import forkless
from beaconlab.core import hoeffding_halfwidth
from beaconlab.errors import BoundNotApplicableError
from beaconlab.utils import make_rng


def test_config_validation():
    with pytest.raises(ValueError):
        forkless.ForklessConfig(d=3)
    with pytest.raises(ValueError):
        forkless.ForklessConfig(charge_mode='per_block')
    cfg = forkless.ForklessConfig(y_p=20)
    assert any('z_p' in e for e in cfg.violations())
    assert cfg.violations(strict=False) == []


def test_derived_quantities():
    cfg = forkless.ForklessConfig()
    assert cfg.p_prime == pytest.approx(1 / 9)
    assert cfg.z_p == pytest.approx(1.0)
    assert cfg.w_p == pytest.approx(-2 / 3)
    assert cfg.T(101) == pytest.approx(15.0)


def test_filter_landing_rate_matches_p_prime():
    cfg = forkless.ForklessConfig(n=2001, unlimited_budget=True)
    policy = forkless.two_mode_policy(cfg, 'filter')
    landed = sum(forkless.filtered_successes(forkless.run_forkless_chain(cfg, policy, seed)[2]) for seed in range(5))
    locations = 5 * cfg.n
    #each location is filled by the adversary independently with probability p'
    assert landed / locations == pytest.approx(cfg.p_prime, abs=hoeffding_halfwidth(locations, 0.999))


@pytest.mark.parametrize('profit_rate', [None, 0.5, 3.0])
def test_maxprofits_is_monotone(profit_rate):
    cfg = forkless.ForklessConfig(profit_rate=profit_rate)
    ts = np.linspace(0, 50, 26)
    locations = np.arange(0, 400, 7)
    grid = np.array([[cfg.maxprofits(t, i) for i in locations] for t in ts])
    assert np.all(np.diff(grid, axis=0) >= 0)
    assert np.all(np.diff(grid, axis=1) >= 0)


def test_unlimited_budget_is_more_biased_than_bounded():
    bounded = forkless.ForklessConfig(p=0.5, x=20, y_p=9, t2=40, n=101)
    unlimited = forkless.ForklessConfig(p=0.5, x=20, y_p=9, t2=40, n=101, unlimited_budget=True)
    policy = forkless.two_mode_policy(bounded, 'filter')
    capped = forkless.estimate_forkless_bias(bounded, policy, 400, 5)
    free = forkless.estimate_forkless_bias(unlimited, policy, 400, 5)
    assert free.ones > capped.ones
    assert free.lower > capped.upper



def test_filter_location_drift():
    per_location = forkless.ForklessConfig(p=0.1, x=60, y_p=5, charge_mode='per_location')
    per_turn = forkless.ForklessConfig(p=0.1, x=60, y_p=5)
    assert forkless.filter_location_drift(per_location) == pytest.approx(-1.842, abs=1e-3)
    assert forkless.filter_location_drift(per_turn) == pytest.approx(-2.105, abs=1e-3)


def test_no_adversary_power_leaves_ledger_untouched():
    cfg = forkless.ForklessConfig(p=0, n=21)
    lsbs, ledger, trace = forkless.run_forkless_chain(cfg, forkless.two_mode_policy(cfg, 'filter'), 3)
    assert len(lsbs) == 21
    assert ledger.coins == cfg.t2
    assert ledger.spent == 0
    assert all(t.published_by == forkless.HONEST for t in trace)


def test_filtering_never_lands_even_symbols():
    cfg = forkless.ForklessConfig(p=0.5, n=51, unlimited_budget=True)
    lsbs, ledger, trace = forkless.run_forkless_chain(cfg, forkless.two_mode_policy(cfg, 'filter'), 7)
    landed = [t for t in trace if t.published_by == forkless.ADVERSARY and not t.discarded]
    assert landed
    assert all(t.block_symbol % 2 == 1 for t in landed)
    assert forkless.filtered_successes(trace) == len(landed)
    assert ledger.balanced()


def test_ledger_balanced_with_bankruptcy():
    cfg = forkless.ForklessConfig(p=0.5, x=0, y_p=9, t2=5, n=11)
    lsbs, ledger, trace = forkless.run_forkless_chain(cfg, forkless.two_mode_policy(cfg, 'filter'), 0)
    assert ledger.bankrupt
    assert ledger.spent == 0
    assert forkless.bankruptcy_turn(trace) == 1
    assert len(lsbs) == 11
    assert ledger.balanced()


def test_unlimited_honest_budget_follows_drift():
    cfg = forkless.ForklessConfig(p=1, n=11, unlimited_budget=True)
    _, ledger, _ = forkless.run_forkless_chain(cfg, forkless.null_policy(cfg), 2)
    assert ledger.coins == pytest.approx(cfg.t2 + cfg.n * cfg.z_p)


def test_honest_profit_is_capped():
    cfg = forkless.ForklessConfig(p=0.5, n=101)
    _, ledger, _ = forkless.run_forkless_chain(cfg, forkless.null_policy(cfg), 5)
    assert ledger.honest_profit <= cfg.maxprofits(cfg.t1, cfg.n) + 1e-9
    assert ledger.balanced()


def test_same_seed_same_chain():
    cfg = forkless.ForklessConfig(n=31)
    policy = forkless.two_mode_policy(cfg, 'example')
    assert forkless.run_forkless_chain(cfg, policy, 11)[0] == forkless.run_forkless_chain(cfg, policy, 11)[0]
    ones, _ = forkless.simulate_ones(cfg, policy, 11)
    assert ones == sum(forkless.run_forkless_chain(cfg, policy, 11)[0])


def test_step_replays_chain():
    cfg = forkless.ForklessConfig(n=15, p=0.3)
    policy = forkless.two_mode_policy(cfg, 'honest_then_filter')
    lsbs, _, trace = forkless.run_forkless_chain(cfg, policy, 21)

    state = forkless.ForklessState.initial(cfg)
    stream = forkless.TurnStream(make_rng(21), cfg.d)
    stepped = []
    while not state.terminal:
        previous = state
        state, t = forkless.step(state, policy, stream)
        stepped.append(t)
        assert previous.turn == t.turn - 1
    assert state.lsbs == lsbs
    assert tuple(stepped) == trace
    with pytest.raises(ValueError):
        forkless.step(state, policy, stream)


def test_step_leaves_state_untouched():
    cfg = forkless.ForklessConfig(p=1, n=3)
    state = forkless.ForklessState.initial(cfg)
    forkless.step(state, forkless.null_policy(cfg), 0)
    assert state.ledger.coins == cfg.t2
    assert state.turn == 0


def test_policies():
    cfg = forkless.ForklessConfig(n=101)
    with pytest.raises(ValueError):
        forkless.TwoModePolicy('sometimes')
    example = forkless.two_mode_policy(cfg, 'example')
    assert (example.switch_at, example.filter_until) == (50, 75)
    ledger = forkless.BudgetLedger.for_config(cfg)
    assert example.desired_mode(49, ledger, cfg) == forkless.HONEST_MODE
    assert example.desired_mode(50, ledger, cfg) == forkless.FILTER_MODE
    assert example.desired_mode(75, ledger, cfg) == forkless.HONEST_MODE
    budget = forkless.two_mode_policy(cfg, 'budget')
    assert budget.desired_mode(0, ledger, cfg) == forkless.HONEST_MODE


def test_budget_ledger():
    ledger = forkless.BudgetLedger(initial=10)
    assert ledger.charge(4, honest=True)
    assert ledger.credit(10, honest=True, cap=3) == 7
    assert ledger.honest_profit == 3
    assert not ledger.charge(100)
    assert ledger.bankrupt
    assert ledger.credit(5) == 0.0
    assert ledger.balanced()


def test_honest_beacon_is_unbiased():
    cfg = forkless.ForklessConfig(n=11)
    report = forkless.estimate_forkless_bias(cfg, forkless.null_policy(cfg), 4000, 1)
    assert report.estimate < 0.05
    with pytest.raises(ValueError):
        forkless.estimate_forkless_bias(forkless.ForklessConfig(n=10), forkless.null_policy(), 10, 1)


def test_unlimited_filtering_biases_towards_one():
    cfg = forkless.ForklessConfig(p=0.5, n=11, unlimited_budget=True)
    report = forkless.estimate_forkless_bias(cfg, forkless.two_mode_policy(cfg, 'filter'), 2000, 1)
    assert report.ones / report.trials > 0.7


def test_run_forkless_beacon_needs_odd_length():
    cfg = forkless.ForklessConfig(n=4)
    with pytest.raises(ValueError):
        forkless.run_forkless_beacon(cfg, forkless.null_policy(cfg), 0)


def test_adversary_share():
    assert forkless.adversary_share(()) == 0.0
    cfg = forkless.ForklessConfig(p=1, n=9, unlimited_budget=True)
    _, _, trace = forkless.run_forkless_chain(cfg, forkless.null_policy(cfg), 0)
    assert forkless.adversary_share(trace) == 1.0


def test_negbin_tails():
    exact = forkless.negbin_tail_exact(2 / 3, 30, 0.25)
    assert exact <= forkless.negbin_tail(2 / 3, 30, 0.25)
    estimate, se = forkless.negbin_tail_mc(2 / 3, 30, 0.25, 20000, 4)
    assert estimate == pytest.approx(exact, abs=4 * se + 0.005)
    with pytest.raises(ValueError):
        forkless.negbin_tail(0.4, 30, 0.25)
    with pytest.raises(ValueError):
        forkless.negbin_tail(2 / 3, 0, 0.25)


def test_upbound1_bias_bound():
    cfg = forkless.ForklessConfig(n=10001, epsilon=0.5)
    assert cfg.ell == 57
    expected = 0.5 + math.exp(-57 / 18) + (math.e / math.pi) / math.sqrt(10001 - 57)
    assert forkless.upbound1_bias_bound(cfg) == pytest.approx(expected)


def test_upbound1_not_applicable():
    with pytest.raises(BoundNotApplicableError):
        forkless.upbound1_bias_bound(forkless.ForklessConfig())
    with pytest.raises(BoundNotApplicableError):
        forkless.upbound1_bias_bound(forkless.ForklessConfig(y_p=20, n=10001, epsilon=0.5))


def test_forkless_trend():
    cfg = forkless.ForklessConfig()
    df = forkless.forkless_trend(cfg, forkless.null_policy(cfg), [5, 11], 200, 1)
    assert list(df.columns) == ['n', 'estimate', 'ci_halfwidth', 'bound']
    assert df['n'].tolist() == [5, 11]
    assert df['bound'].isna().all()
