import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


def unit_circle(angles_deg):
    """2-D unit vectors at the given angles, one row each."""
    a = np.deg2rad(np.asarray(angles_deg, dtype=np.float64))
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def random_row_stochastic(rng, rows, cols):
    a = rng.uniform(0.05, 1.0, size=(rows, cols))
    return a / a.sum(axis=1, keepdims=True)
