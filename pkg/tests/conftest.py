import numpy as np
import pytest

from sngsynth import (Hyperparameters, make_blobs, normalize_dataset,
                      train_supervised)


@pytest.fixture(scope="session")
def blobs4():
    """240 samples, 4 well-separated classes (10 sigma), 6 features."""
    return make_blobs(60, 4, 6, 10.0, 1.0, seed=7)


@pytest.fixture(scope="session")
def blobs2():
    """200 samples, 2 well-separated classes, 2 features."""
    return make_blobs(100, 2, 2, 10.0, 1.0, seed=3)


@pytest.fixture(scope="session")
def small_hyper():
    return Hyperparameters(neurons_per_class=5, max_iter=25, seed=11)


@pytest.fixture(scope="session")
def trained4(blobs4, small_hyper):
    """Model trained on the normalized 4-class fixture (shared, read-only)."""
    return train_supervised(normalize_dataset(blobs4), small_hyper)


@pytest.fixture(scope="session")
def identity_meta():
    """norm_meta that makes normalization the identity map."""
    def build(dim):
        return np.array([[0.0, 1.0]] * dim)
    return build
