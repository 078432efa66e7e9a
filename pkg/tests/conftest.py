import numpy as np
import pytest


def random_ball_points(n, dim=3, max_norm=0.9, seed=0):
    """Uniform-direction points with norms up to max_norm."""
    rng = np.random.Generator(np.random.PCG64(seed))
    vecs = rng.normal(size=(n, dim))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    radii = rng.uniform(0.0, max_norm, size=(n, 1))
    return vecs * radii


@pytest.fixture
def ball_points():
    return random_ball_points
