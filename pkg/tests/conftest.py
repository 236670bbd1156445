import numpy as np
import pytest

import experiments
from configs import example1, example2
from dynamics.disturbances import zero_disturbance


@pytest.fixture
def example1_config():
    return example1.get_config()


@pytest.fixture
def example2_config():
    return example2.get_config()


@pytest.fixture(scope="session")
def example1_bank():
    return experiments.build_bank(example1.get_config())


@pytest.fixture(scope="session")
def example2_bank():
    return experiments.build_bank(example2.get_config())


@pytest.fixture(scope="session")
def example2_small_bank():
    config = example2.get_config()
    config.n_levels = 5
    return experiments.build_bank(config)


@pytest.fixture(scope="session")
def example1_suite(example1_bank):
    """FIR/IIR/REF plus the 0.175 s baseline under the sine window."""
    return experiments.run_suite(example1.get_config(), example1_bank)


@pytest.fixture(scope="session")
def example1_nominal_suite(example1_bank):
    config = example1.get_config()
    config.disturbance.kind = "zero"
    return experiments.run_suite(config, example1_bank, baseline=False)


@pytest.fixture(scope="session")
def example2_suite(example2_bank):
    return experiments.run_suite(example2.get_config(), example2_bank)


@pytest.fixture
def short_example1_run(example1_bank):
    config = example1.get_config()
    return experiments.run_mechanism(
        config, example1_bank, "fir", disturbance=zero_disturbance(), horizon=2.0
    )


@pytest.fixture
def rng():
    return np.random.default_rng(0)
