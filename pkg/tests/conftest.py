import numpy as np
import pytest

from dwpcure.data import Dataset
from dwpcure.families import Family, ModelFamily


def make_dataset(seed=0, n=30, event_frac=0.6):
    """Small right-censored dataset with one x and one binary z covariate."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.2, 6.0, n)
    delta = (rng.uniform(size=n) < event_frac).astype(int)
    x = rng.normal(0.0, 1.0, n)
    z = rng.binomial(1, 0.5, n).astype(float)
    return Dataset(t, delta, x, z)


# a feasible theta* for the standard layout on make_dataset-shaped data:
# (eta:z1, p:intercept, p:x1, gamma0, gamma1, gamma2:x1, gamma3:z1)
THETA0 = np.array([0.4, -0.3, 0.5, 1.5, 2.5, 0.1, -0.2])

FAMILY_CASES = [
    (ModelFamily(Family.DEWP), -0.4),
    (ModelFamily(Family.DEWP), 0.6),
    (ModelFamily(Family.DLBP), None),
    (ModelFamily(Family.DNB), 0.8),
    (ModelFamily(Family.DNB), 3.0),
]


@pytest.fixture
def dataset():
    return make_dataset()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
