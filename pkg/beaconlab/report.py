"""
Experiment reports: a DataFrame of result rows with a fixed set of
columns, plus the configuration that produced them.

CSV reports hold one line per row under REPORT_COLUMNS; the `config` column
repeats the echoed configuration as JSON. JSON reports have the shape

    {"schema_version": 1, "config": {...}, "config_hash": "...",
     "generated_at": "...", "results": [{...}, ...]}
"""

from copy import deepcopy
import io
import json
import logging
import math

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

FORMATS = ['csv', 'json']

REPORT_COLUMNS = [
    'experiment', 'case', 'estimate', 'ci_halfwidth', 'trials', 'seed', 'confidence',
    'bound', 'passed', 'config_hash', 'detail', 'generated_at', 'config',
]


def _plain(value):
    #numpy scalars and NaN become json-friendly values
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class Report:
    """
    Result of an experiment. `df` holds the rows, `config` the echoed
    configuration (None for reports built from bare rows).
    """

    def __init__(self, df, config=None, generated_at=None):
        self.df = df.reindex(columns=REPORT_COLUMNS)
        self.config = config
        self.generated_at = generated_at
        experiments = self.df['experiment'].dropna().unique()
        self.experiment = experiments[0] if len(experiments) else (config or {}).get('experiment')
        hashes = self.df['config_hash'].dropna().unique()
        self.config_hash = hashes[0] if len(hashes) else None

    @classmethod
    def from_rows(cls, rows, config=None, generated_at=None):
        return cls(pd.DataFrame(list(rows), columns=REPORT_COLUMNS), config, generated_at)

    def __repr__(self):
        return """
    <beaconlab.report.Report(
        experiment='{}',
        rows='{}',
        passed='{}',
        config_hash='{}'
    )>
    """.format(
            self.experiment,
            len(self.df),
            self.passed,
            self.config_hash,
    )

    def show_data(self):
        return self.df

    #function to filter rows
    def filter(self, query):
        self_copy = deepcopy(self)
        self_copy.df = self_copy.df.query(query)
        return self_copy

    #rows without a verdict do not count
    @property
    def passed(self):
        verdicts = self.df['passed'].dropna()
        return bool(verdicts.astype(bool).all()) if len(verdicts) else True

    def records(self):
        return [{key: _plain(value) for key, value in row.items()} for row in self.df.to_dict(orient='records')]

    def to_csv(self):
        buffer = io.StringIO()
        self.df.to_csv(buffer, index=False, lineterminator='\n')
        return buffer.getvalue()

    def to_json(self):
        payload = {
            'schema_version': SCHEMA_VERSION,
            'config': self.config,
            'config_hash': self.config_hash,
            'generated_at': self.generated_at,
            'results': [{k: v for k, v in record.items() if k != 'config'} for record in self.records()],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + '\n'


def emit_report(results, format='csv', path=None):
    """
    Write a report (or rows) as csv or json. Returns the text; writes it to
    `path` when given.
    """
    if format not in FORMATS:
        raise ValueError('Format not valid. Accepted values: {}.'.format(', '.join(FORMATS)))
    report = results if isinstance(results, Report) else Report.from_rows(results)
    text = report.to_csv() if format == 'csv' else report.to_json()
    if path is not None:
        with open(path, 'w', newline='') as f:
            f.write(text)
        logger.info('report written to %s', path)
    return text


def load_report(path):
    """
    Read back a report written by emit_report. JSON reports are recognized
    by their extension.
    """
    if str(path).endswith('.json'):
        with open(path, 'r') as f:
            payload = json.load(f)
        if payload.get('schema_version') != SCHEMA_VERSION:
            raise ValueError('Unsupported report schema version: {}.'.format(payload.get('schema_version')))
        config = payload.get('config')
        rows = payload.get('results', [])
        for row in rows:
            row['config'] = json.dumps(config, sort_keys=True) if config is not None else None
        return Report.from_rows(rows, config, payload.get('generated_at'))

    df = pd.read_csv(path, dtype={'case': str, 'detail': str, 'config_hash': str, 'generated_at': str, 'config': str})
    configs = df['config'].dropna().unique()
    config = json.loads(configs[0]) if len(configs) else None
    generated = df['generated_at'].dropna().unique()
    return Report(df, config, generated[0] if len(generated) else None)
