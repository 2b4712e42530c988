import numpy as np
import pytest

from mnarx import UniformSeries


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240831)


@pytest.fixture
def short_series(rng):
    """A pair of 400-step random series on a shared axis."""
    n = 400
    x = UniformSeries(0.01, 0.0, rng.normal(size=n), ("x",))
    y = UniformSeries(0.01, 0.0, rng.normal(size=n), ("y",))
    return x, y
