import numpy as np
import pytest

from sandcast.ingest import integrate_all
from sandcast.mann import train_mann, train_single_ann
from sandcast.nn import TrainConfig
from sandcast.preprocess import partition_lowo
from sandcast.synth import SynthConfig, generate

SMALL = SynthConfig(seed=3, n_inlines=20, n_xlines=20, nt=150)
FAST = TrainConfig(max_epoch=40, err_min=1e-4, seed=11)


@pytest.fixture(scope="session")
def small_field():
    return generate(SMALL)


@pytest.fixture(scope="session")
def small_pairs(small_field):
    f = small_field
    wells = integrate_all(f.logs, f.checkshots, f.locations, f.volume)
    return [(w, f.tops[w.well_id]) for w in wells]


@pytest.fixture(scope="session")
def small_zoned(small_pairs):
    return partition_lowo(small_pairs, "W2")


@pytest.fixture(scope="session")
def small_mann(small_zoned):
    return train_mann(small_zoned, FAST, hidden=3)


@pytest.fixture(scope="session")
def small_single(small_zoned):
    return train_single_ann(small_zoned, FAST, hidden=9)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.LINES:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.LINES:
            terminalreporter.write_line(line)
