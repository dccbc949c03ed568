from pathlib import Path

import numpy as np
import pytest

from mnnlab.presets import case_manifold, four_neuron_network

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def net4():
    return four_neuron_network()


@pytest.fixture(scope="session")
def case3_alpha8(net4):
    return net4, case_manifold(3, 8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
