import numpy as np
import pytest

from pa_patch import LinearModel, SummarySet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_clusters():
    """The hand-worked two-cluster summary: estimate 0.875 at w=(1,0)."""
    return SummarySet(centers=[[1.0, 0.0], [-1.0, 0.0]], sizes=[10, 30], fractions=[0.8, 0.1])


@pytest.fixture
def toy_model():
    return LinearModel(np.array([1.0, 0.0]))

