import numpy as np
import pytest

from nnsc.densemat import Matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_instance(rng, m, r, n, lam=0.1):
    """Non-negative data, unit-norm non-negative basis and positive components."""
    a = rng.uniform(0.0, 1.0, (m, r))
    a /= np.linalg.norm(a, axis=0)
    x = rng.uniform(0.0, 1.0, (m, n))
    s = rng.uniform(0.1, 1.1, (r, n))
    return Matrix(x), Matrix(a), Matrix(s), lam


def grid_minimum(a, x_col, lam, s_max, points=2000):
    """Minimum of the two-component column objective over a uniform grid."""
    g = np.linspace(0.0, s_max, points)
    s1, s2 = np.meshgrid(g, g, indexing="ij")
    r = x_col[:, None, None] - a[:, 0, None, None] * s1 - a[:, 1, None, None] * s2
    vals = 0.5 * np.sum(r * r, axis=0) + lam * (s1 + s2)
    return float(vals.min())


def well_posed_instance(rng, lam):
    """Random instance with r < m and a Gram matrix bounded away from singular."""
    while True:
        m = int(rng.integers(2, 9))
        r = int(rng.integers(1, min(6, m - 1) + 1))
        n = int(rng.integers(1, 5))
        a = rng.uniform(0, 1, (m, r))
        a /= np.linalg.norm(a, axis=0)
        if np.linalg.eigvalsh(a.T @ a)[0] >= 1e-2:
            return Matrix(rng.uniform(0, 1, (m, n))), Matrix(a), lam
