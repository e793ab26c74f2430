import numpy as np
import pytest

from bpl import bloch


def random_bounded_observable(n: int, rng) -> np.ndarray:
    """Random Hermitian matrix normalized to operator norm 1."""
    dim = 2 ** n
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = h + h.conj().T
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


def atom_tuple_index(k: int, n: int) -> np.ndarray:
    """(k^n, n) array of all atom index tuples."""
    grids = np.meshgrid(*[np.arange(k)] * n, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def tuple_weights(dist: bloch.BlochDistribution, idx: np.ndarray) -> np.ndarray:
    w = np.ones(len(idx))
    for i in range(idx.shape[1]):
        w = w * dist.weights[idx[:, i]]
    return w


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
