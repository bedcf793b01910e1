import numpy as np
import pytest

from numerics.api import build_training_matrix
from trellis_map.api import compute_quadratics, lambda_from_prior


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pm_one_model(rng):
    """M=30 model with a random +-1 training sequence of length 5."""
    u = np.where(rng.integers(0, 2, size=5) == 1, 1.0, -1.0)
    return build_training_matrix(u, 30)


@pytest.fixture
def random_quadratic(rng):
    """Factory for (model, h_hat, y, q) built from random training, taps and observation."""
    def make(M, L):
        u = np.where(rng.integers(0, 2, size=L) == 1, 1.0, -1.0)
        model = build_training_matrix(u, M)
        h_hat = rng.standard_normal(M)
        y = rng.standard_normal(model.N)
        lambda_ = lambda_from_prior(float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.05, 0.45)))
        return model, h_hat, y, compute_quadratics(model, h_hat, y, lambda_)
    return make
