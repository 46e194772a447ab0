import numpy as np
import pytest

from besovlab.dyadic import DyadicDecomposition
from besovlab.fields import Grid

SEED = 20240901


@pytest.fixture(scope="session")
def grid64():
    return Grid(2, 64)


@pytest.fixture(scope="session")
def decomp64(grid64):
    return DyadicDecomposition(grid64)


@pytest.fixture()
def rng():
    return np.random.default_rng(SEED)
