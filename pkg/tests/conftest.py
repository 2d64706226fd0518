import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import random_loop  # noqa: E402

from knotsim.geometry import KnotConfiguration


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_loop(seed: int, beads: int = 40) -> KnotConfiguration:
    """Deterministic random valid loop for property tests."""
    return KnotConfiguration(random_loop(np.random.default_rng(seed), beads=beads))


@pytest.fixture
def loop_factory():
    return make_loop
