import numpy as np
import pytest

from icfrank.pipeline import decompose_cohort, featurize_cohort
from icfrank.config import RunConfig
from icfrank.synth import gen_cohort


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_cohort():
    """40 + 30 short synthetic subjects, decomposed with the default filter."""
    cohort = gen_cohort(40, 30, seed=11, length=6000)
    config = RunConfig(subseries=20)
    decomps = decompose_cohort(cohort, config)
    return cohort, decomps, config


@pytest.fixture(scope="session")
def small_matrix(small_cohort):
    cohort, decomps, config = small_cohort
    return featurize_cohort(cohort, config, decompositions=decomps)
