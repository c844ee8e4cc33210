import numpy as np
import pytest

from srurgs.data import Dataset
from srurgs.space import EXTENDED_BINARY, SearchSpaceConfig


@pytest.fixture
def linear_data():
    x = np.linspace(-2.0, 3.0, 25)
    return Dataset(("x",), x, 2.5 * x - 1.25)


@pytest.fixture
def small_space():
    return SearchSpaceConfig.create(("add", "mul"), ["x"], 1, N=4)


@pytest.fixture
def quartic_space():
    return SearchSpaceConfig.create(EXTENDED_BINARY, ["x"], 2, N=20)
