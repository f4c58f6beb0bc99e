import itertools

import numpy as np
import pytest


def random_theta(rng, d, scale=0.5):
    a = rng.normal(scale=scale, size=(d, d))
    return 0.5 * (a + a.T)


def brute_states(d):
    """All states in packed order, built independently of the package."""
    return np.array([[(k >> i) & 1 for i in range(d)] for k in range(1 << d)], dtype=float)


def brute_probs(theta):
    x = brute_states(theta.shape[0])
    e = np.array([row @ theta @ row for row in x])
    w = np.exp(e - e.max())
    return w / w.sum()


def brute_moment(theta):
    x = brute_states(theta.shape[0])
    p = brute_probs(theta)
    return sum(pi * np.outer(xi, xi) for pi, xi in zip(p, x))


def sym_grid(d):
    return list(itertools.combinations_with_replacement(range(d), 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
