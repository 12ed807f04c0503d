# tests/conftest.py
#
# Shared fixtures: the worked example matrices and a seeded generator for
# randomized property checks.

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from core.matrix_core import SquareMatrix
from tools import fixtures


DATA_DIR = Path(__file__).parent.parent / "data"


@pytest.fixture
def seven_node():
    return fixtures.seven_node_graph()


@pytest.fixture
def four_agent():
    return fixtures.four_agent_benefits()


@pytest.fixture
def two_cycle():
    return SquareMatrix([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def two_state_chain():
    """Row-stochastic with left Perron vector (3/7, 4/7)."""
    return SquareMatrix([[2 / 3, 1 / 3], [1 / 4, 3 / 4]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def data_dir():
    return DATA_DIR


def random_primitive_stochastic(rng, n: int, density: float = 0.5) -> np.ndarray:
    """Random row-stochastic matrix with a positive diagonal and a Hamiltonian cycle."""
    w = rng.uniform(0.1, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < density)
    for i in range(n):
        w[i, i] = rng.uniform(0.1, 1.0)
        w[i, (i + 1) % n] = rng.uniform(0.1, 1.0)
    return w / w.sum(axis=1, keepdims=True)


@pytest.fixture
def primitive_stochastic():
    return random_primitive_stochastic
