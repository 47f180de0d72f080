import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hintnav.sim import generate_world


@pytest.fixture(scope="session")
def open_world():
    return generate_world(7, "open_field")


@pytest.fixture(scope="session")
def blocks_world():
    return generate_world(7, "building_blocks")


@pytest.fixture(scope="session")
def park_world():
    return generate_world(7, "trail_park")


@pytest.fixture(scope="session")
def canopy_world():
    return generate_world(7, "canopy")


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
