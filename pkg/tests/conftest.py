import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gmrgp import EmConfig, fit_gmm
from gmrgp.datasets import generate_synthetic, two_component_toy_gmm


@pytest.fixture(scope="session")
def letter_demos():
    return generate_synthetic("letter", {"n_demos": 5, "samples_per_demo": 120}, seed=0)


@pytest.fixture(scope="session")
def letter_gmm(letter_demos):
    return fit_gmm(letter_demos, 6, EmConfig(seed=0))


@pytest.fixture(scope="session")
def toy_gmm():
    return two_component_toy_gmm()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
