from datetime import datetime, timezone
import hashlib
import json
import logging
import math
import os
from multiprocessing import Pool

import numpy as np
from tqdm import tqdm

logger = logging.getLogger(__name__)

#upper bound on the trials handed to a worker at once
CHUNK_SIZE = 2000


def utc_timestamp():
    return datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')


#stable short hash of a json-serializable config
def config_hash(config):
    payload = json.dumps(config, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError('Seed must be an integer.')
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError('Seed must be a 64-bit unsigned integer.')
    return int(seed)


#the stream of trial `index` only depends on (seed, index)
def trial_seed(seed, index):
    return np.random.SeedSequence([check_seed(seed), int(index)])


def make_rng(seed):
    """
    Build a numpy Generator from an int seed, a SeedSequence or an existing
    Generator (returned untouched).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(check_seed(seed))


def default_jobs():
    return os.cpu_count() or 1


#split range(trials) into contiguous (start, stop) chunks
def return_chunks(trials, size=CHUNK_SIZE):
    return [(start, min(start + size, trials)) for start in range(0, trials, size)]


def _run_chunk(task):
    fn, seed, start, stop = task
    return start, [fn(trial_seed(seed, i)) for i in range(start, stop)]


def run_trials(fn, trials, seed, jobs=1, desc=None, progress=None):
    """
    Evaluate `fn(SeedSequence)` for every trial index and return the values
    as a numpy array ordered by trial index.

    `fn` must be picklable when jobs > 1 (module-level function or a
    functools.partial of one). The output does not depend on `jobs`.
    The progress bar shows on a terminal only unless `progress` is set.
    """
    if not isinstance(trials, int) or trials < 1:
        raise ValueError('Trials must be a positive integer.')
    seed = check_seed(seed)
    if jobs is None:
        jobs = default_jobs()
    if not isinstance(jobs, int) or jobs < 1:
        raise ValueError('Jobs must be a positive integer.')

    size = max(1, min(CHUNK_SIZE, math.ceil(trials / (jobs * 4))))
    tasks = [(fn, seed, start, stop) for start, stop in return_chunks(trials, size)]
    logger.debug('running %d trials in %d chunks on %d processes', trials, len(tasks), jobs)

    results = {}
    bar = tqdm(total=trials, desc=desc, disable=None if progress is None else not progress)
    if jobs == 1 or len(tasks) == 1:
        for task in tasks:
            start, values = _run_chunk(task)
            results[start] = values
            bar.update(len(values))
    else:
        with Pool(min(jobs, len(tasks))) as pool:
            for start, values in pool.imap_unordered(_run_chunk, tasks):
                results[start] = values
                bar.update(len(values))
    bar.close()

    return np.array([value for start in sorted(results) for value in results[start]])


#independent child streams of one run (e.g. honest bits, chain, adversary)
def spawn_seeds(seed, count):
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(check_seed(seed))
    return seed.spawn(count)
