"""
Experiments turn a validated configuration into a Report.

    from beaconlab.config import load_config
    from beaconlab.experiment import Experiment

    report = Experiment(load_config('forkless.json')).trials(10000).jobs(4).run()

The builder methods return the experiment itself so calls can be chained.
"""

from dataclasses import replace
import json
import logging
import math

import numpy as np

from . import backbone, extractors, forkless, hybrid, lowerbound, multichain, utils, verify
from .config import FORMATS
from .core import BiasReport, as_fraction
from .errors import BoundNotApplicableError, ConfigError
from .report import Report

logger = logging.getLogger(__name__)


def _row(case, estimate=None, ci_halfwidth=None, trials=None, bound=None, passed=None, detail=None):
    return {
        'case': case, 'estimate': estimate, 'ci_halfwidth': ci_halfwidth, 'trials': trials,
        'bound': bound, 'passed': passed, 'detail': detail,
    }


def _bias_row(case, report, bound=None, detail=None):
    passed = None if bound is None else bool(report.estimate <= bound + report.ci_halfwidth)
    return _row(case, report.estimate, report.ci_halfwidth, report.trials, bound, passed, detail)


def run_lowerbound(cfg):
    opts = cfg.options
    rng = utils.make_rng(cfg.seed)
    rows = []
    if opts['mode'] == 'exact':
        d = opts['d']
        for n in opts['ns']:
            for p in opts['ps']:
                if n <= opts['exhaustive_up_to']:
                    tables = list(extractors.TruthTableExtractor.all_tables(d, n))
                else:
                    tables = [extractors.TruthTableExtractor.random(d, n, rng) for _ in range(opts['random_extractors'])]
                bound = as_fraction(p) / 12
                worst = min(lowerbound.measured_bias(E, lowerbound.build_adversarial_source(E, d, n, p)) for E in tables)
                rows.append(_row(
                    'n={},p={}'.format(n, p), float(worst), 0.0, len(tables), float(bound), worst >= bound,
                    'smallest bias {} over {} extractors (exact)'.format(worst, len(tables)),
                ))
    elif opts['mode'] == 'embedding':
        passed, detail = verify.check_embedding(cfg.seed, opts['targets'], opts['max_d'])
        rows.append(_row('embedding', trials=opts['targets'], passed=passed, detail=detail))
    else:
        n, p = opts['n'], opts['p']
        E = extractors.ExtractorSpec('majority', n)
        report = lowerbound.estimate_efficient_bias(
            E, opts['d'], n, p, opts['samples'], cfg.trials, cfg.seed,
            confidence=cfg.confidence, method=opts['method'], jobs=cfg.jobs,
        )
        bound = p / 13
        rows.append(_row(
            'efficient,n={},p={}'.format(n, p), report.estimate, report.ci_halfwidth, report.trials, bound,
            bool(report.lower > bound), 'interval must lie above p/13',
        ))
    return rows


def _forkless_policy(cfg, opts):
    if opts['schedule'] == 'example':
        return forkless.two_mode_policy(cfg, 'example')
    return forkless.two_mode_policy(
        cfg, opts['schedule'], switch_at=opts['switch_at'], filter_until=opts['filter_until'],
        min_coins=opts['min_coins'],
    )


def _forkless_bound(fcfg):
    try:
        return forkless.upbound1_bias_bound(fcfg)
    except BoundNotApplicableError as e:
        logger.warning('bound not applicable: %s', e)
        return None


def run_forkless(cfg):
    opts, fcfg = cfg.options, cfg.module_config
    policy = _forkless_policy(fcfg, opts)
    rows = []
    if opts['mode'] == 'bias':
        report = forkless.estimate_forkless_bias(
            fcfg, policy, cfg.trials, cfg.seed, cfg.confidence, opts['method'], jobs=cfg.jobs,
        )
        rows.append(_bias_row('n={}'.format(fcfg.n), report, _forkless_bound(fcfg)))
    elif opts['mode'] == 'trend':
        df = forkless.forkless_trend(fcfg, policy, opts['ns'], cfg.trials, cfg.seed, cfg.confidence,
                                     opts['method'], cfg.jobs)
        for record in df.to_dict(orient='records'):
            bound = None if record['bound'] is None or np.isnan(record['bound']) else record['bound']
            passed = None if bound is None else bool(record['estimate'] <= bound + record['ci_halfwidth'])
            rows.append(_row('n={}'.format(record['n']), record['estimate'], record['ci_halfwidth'],
                             cfg.trials, bound, passed))
        #longer beacons should not be more biased, up to sampling error
        estimates, widths = df['estimate'].to_numpy(), df['ci_halfwidth'].to_numpy()
        trend = all(estimates[i + 1] <= estimates[i] + widths[i] + widths[i + 1] for i in range(len(df) - 1))
        rows.append(_row('trend', passed=bool(trend), detail='bias non-increasing in n within intervals'))
    else:
        for ell in opts['ells']:
            for p_prime in opts['p_primes']:
                estimate, se = forkless.negbin_tail_mc(fcfg.delta, ell, p_prime, cfg.trials, cfg.seed)
                bound = forkless.negbin_tail(fcfg.delta, ell, p_prime)
                rows.append(_row(
                    'ell={},p_prime={}'.format(ell, p_prime), estimate, 3 * se, cfg.trials, bound,
                    bool(estimate <= bound + 3 * se),
                    'exact tail {:.6g}'.format(forkless.negbin_tail_exact(fcfg.delta, ell, p_prime)),
                ))
    return rows


def _backbone_strategy(opts):
    params = dict(opts['strategy_params'])
    if opts['strategy'] == 'discard_detrimental' and opts['budget'] is not None:
        params['budget'] = opts['budget']
    if opts['strategy'] == 'majority_power':
        params.setdefault('desired_bit', opts['desired_bit'])
    return backbone.make_strategy(opts['strategy'], **params)


def run_backbone(cfg):
    opts, bcfg = cfg.options, cfg.module_config
    strategy = _backbone_strategy(opts)
    rows = []
    if opts['mode'] in ('bias', 'share', 'bankruptcy'):
        df = backbone.beacon_trials(bcfg, strategy, cfg.trials, cfg.seed, jobs=cfg.jobs)
        bits = df['bit'].to_numpy().astype(int)
        report = BiasReport.from_bits(bits, cfg.seed, cfg.confidence, opts['method'])
        if opts['mode'] == 'bias':
            rows.append(_bias_row('bias', report, detail='agreement rate {:.4f}'.format(df['agreement'].mean())))
            if opts['strategy'] == 'majority_power':
                desired = strategy.desired_bit
                rate = float(np.mean(bits == desired))
                rows.append(_row(
                    'desired_output', rate, None, cfg.trials, 0.95, bool(rate >= 0.95),
                    'published in {:.4f} of runs'.format(df['adversary_published'].mean()),
                ))
        elif opts['mode'] == 'share':
            share = df['adversary_blocks'].to_numpy() / bcfg.n
            rows.append(_row(
                'adversary_share', float(share.mean()), float(2 * share.std(ddof=1) / math.sqrt(len(share))),
                cfg.trials, detail='halfwidth is two standard errors',
            ))
        else:
            rate = float(df['bankruptcy_event'].mean())
            rows.append(_row('bankruptcy_event', rate, None, cfg.trials, 0.9, bool(rate >= 0.9)))
    elif opts['mode'] == 'prefix':
        rates = backbone.common_prefix_violation_rates(
            bcfg, strategy, opts['ks'], cfg.trials, cfg.seed, rounds=opts['rounds'], jobs=cfg.jobs,
        )
        for k, rate in rates.items():
            rows.append(_row('k={}'.format(k), rate, None, cfg.trials))
        values = [rates[k] for k in sorted(rates)]
        decreasing = all(a > b for a, b in zip(values, values[1:]))
        rows.append(_row('strictly_decreasing', passed=decreasing, detail='violation rate over increasing k'))
    else:
        df = backbone.agreement_rate(bcfg, strategy, opts['ks'], cfg.trials, cfg.seed, jobs=cfg.jobs)
        for record in df.to_dict(orient='records'):
            rows.append(_row(
                'k={}'.format(record['k']), float(record['agreement_rate']), None, cfg.trials,
                detail='undecided parties {:.4f}'.format(record['undecided_share']),
            ))
    return rows


def _hybrid_chain(hcfg, opts):
    try:
        if hcfg.chain == 'forkless':
            return hybrid.make_chain('forkless', forkless.ForklessConfig(**opts['forkless']))
        params = dict(opts['backbone'])
        if 'lambda' in params:
            params['lambda_'] = params.pop('lambda')
        return hybrid.make_chain('backbone', backbone.BackboneConfig(**params))
    except (TypeError, ValueError) as e:
        raise ConfigError('params.{}: {}'.format(hcfg.chain, e))


def run_hybrid(cfg):
    opts, hcfg = cfg.options, cfg.module_config
    chain = _hybrid_chain(hcfg, opts)
    bound = None
    if opts['adversary'] == 'idle':
        adversary = hybrid.IdleAdversary()
    elif opts['adversary'] == 'majority_control':
        adversary = hybrid.MajorityControlAdversary(opts['corrupted'], opts['desired'])
    else:
        quota = opts['quota'] if opts['quota'] is not None else hybrid.claim2_ell(hcfg.r, opts['epsilon'])
        adversary = hybrid.adaptive_round_adversary(quota, opts['desired'])
        bound = opts['epsilon']

    values = hybrid.hybrid_trials(hcfg, adversary, cfg.trials, cfg.seed, chain, jobs=cfg.jobs)
    report = BiasReport.from_bits(values[:, 0].astype(int), cfg.seed, cfg.confidence, opts['method'])
    rows = [_bias_row('bias', report, bound, 'adversary {}'.format(adversary.name))]
    penalties = values[:, 1]
    detail = None
    if opts['adversary'] == 'majority_control' and hcfg.r == 1:
        exact = hybrid.expected_withhold_penalty(hcfg.m, opts['corrupted'], hcfg.q, hcfg.f_kind, opts['desired'])
        detail = 'exact expectation {:.6g}'.format(float(exact))
    rows.append(_row(
        'penalty', float(penalties.mean()), float(2 * penalties.std(ddof=1) / math.sqrt(len(penalties))) if len(penalties) > 1 else None,
        cfg.trials, detail=detail,
    ))
    return rows


def run_multichain(cfg):
    opts, mcfg = cfg.options, cfg.module_config
    chain_a, chain_b = mcfg.chain_configs()
    policy_a = forkless.two_mode_policy(chain_a, opts['schedule_a'])
    policy_b = forkless.two_mode_policy(chain_b or chain_a, opts['schedule_b'])
    rows = []
    if opts['mode'] == 'bias':
        report = multichain.estimate_multichain_bias(
            mcfg, policy_a, policy_b, cfg.trials, cfg.seed, cfg.confidence, opts['method'], cfg.jobs,
        )
        rows.append(_bias_row('m={},w={}'.format(mcfg.m, mcfg.w), report))
    else:
        df = multichain.cost_per_bias_sweep(mcfg, opts['ws'], policy_a, policy_b, cfg.trials, cfg.seed,
                                            cfg.confidence, cfg.jobs)
        for record in df.to_dict(orient='records'):
            rows.append(_row(
                'w={}'.format(record['w']), record['estimate'], record['ci_halfwidth'], cfg.trials,
                detail='cost {:.6g}, cost per bias {:.6g}'.format(record['cost'], record['cost_per_bias']),
            ))
    return rows


def run_verify(cfg):
    df = verify.run_checks(cfg.seed, cfg.options['random_extractors'], cfg.options['targets'])
    return [_row(record['case'], passed=record['passed'], detail=record['detail']) for record in df.to_dict(orient='records')]


RUNNERS = {
    'lowerbound': run_lowerbound,
    'forkless': run_forkless,
    'backbone': run_backbone,
    'hybrid': run_hybrid,
    'multichain': run_multichain,
    'verify': run_verify,
}


class Experiment:
    """
    Run one configured experiment and collect its results in a Report.

    The most important methods are:

    * `trials`, `seed` and `confidence` to change the Monte Carlo settings.
    * `jobs` to run trials on several processes. Results do not depend on it.
    * `timestamp` to drop the generation time, making reports byte-identical
    across runs.
    """
    def __init__(self, config):
        self.config = config
        self.overrides = {}

    def trials(self, trials=None):
        if isinstance(trials, bool) or not isinstance(trials, int):
            raise TypeError('Trials must be an integer.')
        if trials <= 0:
            raise ValueError('Trials must be greater than 0.')
        self.overrides['trials'] = trials
        return self

    def seed(self, seed=None):
        self.overrides['seed'] = utils.check_seed(seed)
        return self

    def confidence(self, confidence=0.95):
        if not 0 < confidence < 1:
            raise ValueError('Confidence must lie strictly between 0 and 1.')
        self.overrides['confidence'] = float(confidence)
        return self

    def jobs(self, jobs=None):
        if jobs is not None and (not isinstance(jobs, int) or jobs < 1):
            raise ValueError('Jobs must be a positive integer.')
        self.overrides['jobs'] = jobs
        return self

    def timestamp(self, timestamp=True):
        self.overrides['timestamp'] = bool(timestamp)
        return self

    def output(self, path=None, format=None):
        if format is not None:
            if format not in FORMATS:
                raise ValueError('Format not valid. Accepted values: {}.'.format(', '.join(FORMATS)))
            self.overrides['format'] = format
        if path is not None:
            self.overrides['output_path'] = path
        return self

    @property
    def resolved(self):
        return replace(self.config, **self.overrides)

    def run(self):
        cfg = self.resolved
        if cfg.jobs is None:
            cfg = replace(cfg, jobs=utils.default_jobs())
        logger.info('starting %s experiment, config %s, seed %d', cfg.experiment, cfg.hash, cfg.seed)
        rows = RUNNERS[cfg.experiment](cfg)

        generated_at = utils.utc_timestamp() if cfg.timestamp else None
        echo = cfg.echo()
        #the echo records the configured parallelism, not the resolved one
        echo['jobs'] = self.resolved.jobs
        config_json = json.dumps(echo, sort_keys=True)
        for row in rows:
            row.update({
                'experiment': cfg.experiment,
                'trials': cfg.trials if row['trials'] is None else row['trials'],
                'seed': cfg.seed,
                'confidence': cfg.confidence,
                'config_hash': cfg.hash,
                'generated_at': generated_at,
                'config': config_json,
            })
        report = Report.from_rows(rows, echo, generated_at)
        logger.info('finished %s experiment: %d rows, passed=%s', cfg.experiment, len(rows), report.passed)
        return report
