import numpy as np
import pytest

from gridsense.fields import GridSamples, coefficients_from_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_grid_field(values):
    """Field whose grid samples are exactly the given values."""
    values = np.asarray(values, dtype=np.float64)
    b = (values.size - 1) // 2
    return coefficients_from_grid(GridSamples(b=b, values=values))


@pytest.fixture
def example_field():
    """Three-value field used throughout: grid (1.06, 1.80, 0.14)."""
    return make_grid_field([1.06, 1.80, 0.14])
