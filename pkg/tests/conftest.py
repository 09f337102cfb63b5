import numpy as np
import pytest

from makeupprior import MakeupLayer, UvMap, build_pca
from makeupprior.synthetic import SyntheticSpec, generate


def random_layer(rng, height, width, lo=0.0, hi=1.0):
    bases = rng.uniform(lo, hi, (height, width, 3))
    alpha = rng.uniform(lo, hi, (height, width, 1))
    return MakeupLayer(UvMap(bases), UvMap(alpha))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corpus():
    return generate(SyntheticSpec(seed=0, count=10, size=64))


@pytest.fixture(scope="session")
def prior(corpus):
    return build_pca(corpus.layers, k=100)


def lopsided_layer(rng, size):
    """Layer in (0.3, 0.7) whose left half is at least 0.1 below its right half."""
    half = size // 2
    values = np.empty((size, size, 4))
    values[:, :half] = rng.uniform(0.3, 0.45, (size, half, 4))
    values[:, half:] = rng.uniform(0.55, 0.7, (size, size - half, 4))
    return MakeupLayer(UvMap(values[:, :, :3]), UvMap(values[:, :, 3:]))
