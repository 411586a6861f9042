import numpy as np
import pytest

from beaconlab import utils


def first_draw(seed_seq):
    return int(utils.make_rng(seed_seq).integers(1000))


def test_check_seed():
    assert utils.check_seed(np.uint32(7)) == 7
    with pytest.raises(TypeError):
        utils.check_seed(True)
    with pytest.raises(TypeError):
        utils.check_seed('7')
    with pytest.raises(ValueError):
        utils.check_seed(-1)
    with pytest.raises(ValueError):
        utils.check_seed(2 ** 64)


def test_make_rng():
    rng = np.random.default_rng(0)
    assert utils.make_rng(rng) is rng
    assert utils.make_rng(5).integers(10 ** 6) == utils.make_rng(5).integers(10 ** 6)


def test_trial_seed_depends_on_seed_and_index_only():
    assert first_draw(utils.trial_seed(3, 10)) == first_draw(utils.trial_seed(3, 10))
    draws = {first_draw(utils.trial_seed(3, i)) for i in range(20)}
    assert len(draws) > 1


def test_return_chunks():
    assert utils.return_chunks(5, 2) == [(0, 2), (2, 4), (4, 5)]
    assert utils.return_chunks(4, 10) == [(0, 4)]


def test_run_trials_is_independent_of_jobs():
    serial = utils.run_trials(first_draw, 50, 9, jobs=1)
    parallel = utils.run_trials(first_draw, 50, 9, jobs=3)
    assert serial.tolist() == parallel.tolist()
    assert serial.tolist() == [first_draw(utils.trial_seed(9, i)) for i in range(50)]


def test_run_trials_rejects_bad_arguments():
    with pytest.raises(ValueError):
        utils.run_trials(first_draw, 0, 1)
    with pytest.raises(ValueError):
        utils.run_trials(first_draw, 10, 1, jobs=0)


def test_config_hash():
    assert utils.config_hash({'a': 1, 'b': 2}) == utils.config_hash({'b': 2, 'a': 1})
    assert utils.config_hash({'a': 1}) != utils.config_hash({'a': 2})
    assert len(utils.config_hash({})) == 16


def test_spawn_seeds():
    children = utils.spawn_seeds(4, 3)
    assert len(children) == 3
    assert [first_draw(c) for c in children] == [first_draw(c) for c in utils.spawn_seeds(4, 3)]
