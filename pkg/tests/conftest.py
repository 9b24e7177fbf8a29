import numpy as np
import pytest

from clusterinit.datagen import Balance, GeneratorConfig, ShapeFamily, generate


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def four_blob_dataset():
    config = GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=4,
                             n_total=8000, variance_range=(1.5, 1.5),
                             separation_min=10.0, balance=Balance.EQUAL, seed=77)
    return generate(config)


@pytest.fixture
def two_blob_dataset():
    config = GeneratorConfig(shape_family=ShapeFamily.GAUSSIAN_BLOBS, k=2,
                             n_total=4000, variance_range=(1.0, 1.0),
                             separation_min=12.0, balance=Balance.EQUAL, seed=5)
    return generate(config)
