import numpy as np
import pytest

from surrogate_resilience.data import NewStudySurrogates, StudyData
from surrogate_resilience.simulation import generate_dataset


@pytest.fixture(scope="session")
def small_data():
    """Ten studies of thirty per arm from setting 1 plus a new study."""
    studies, new, _ = generate_dataset(1, 10, 30, seed=7)
    return studies, new


def make_study(study_id, rng, n=6, slope=1.0):
    s0, s1 = rng.normal(0, 1, n), rng.normal(0.5, 1, n)
    return StudyData(study_id, s0, slope * s0 + rng.normal(0, 0.3, n),
                     s1, slope * s1 + 1 + rng.normal(0, 0.3, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def new_study(rng):
    return NewStudySurrogates(rng.normal(0, 1, 8), rng.normal(0.5, 1, 8))
