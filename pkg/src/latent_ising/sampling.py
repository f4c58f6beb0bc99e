"""Drawing datasets from Ising distributions.

Two samplers: exact inverse-CDF sampling over the enumerated states (any
``d`` up to the enumeration cap) and a systematic-scan Gibbs chain that
only needs the single-site conditionals.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import DimensionError
from .ising import BinaryDataset, check_enumerable, state_probs, states_to_bits
from .matrices import as_symmetric


@dataclass(frozen=True)
class GibbsConfig:
    burn_in: int = 1000
    thinning: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")


def _check_count(n):
    if n < 0 or int(n) != n:
        raise ValueError(f"sample count must be a non-negative integer, got {n}")
    return int(n)


def exact_sample(theta, n, seed=0):
    """Draw ``n`` i.i.d. samples by inverting the CDF over all states.

    The cumulative distribution is built once; each draw is a binary search.
    """
    theta = as_symmetric(theta, "theta")
    d = theta.shape[0]
    check_enumerable(d)
    n = _check_count(n)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(state_probs(theta))
    u = rng.random(n) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return BinaryDataset(states_to_bits(idx, d))


def gibbs_conditional(theta, x, i):
    """``P(x_i = 1 | x_-i) = logistic(Theta_ii + 2 sum_{j != i} Theta_ij x_j)``."""
    theta = as_symmetric(theta, "theta")
    d = theta.shape[0]
    if not 0 <= i < d:
        raise IndexError(f"coordinate {i} out of range for dimension {d}")
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (d,):
        raise DimensionError(f"state has shape {v.shape}, expected ({d},)")
    field = theta[i, i] + 2.0 * (theta[i] @ v - theta[i, i] * v[i])
    return float(expit(field))


def gibbs_sample(theta, n, config=GibbsConfig()):
    """Systematic-scan Gibbs chain.

    The chain starts from a uniformly random state, runs ``burn_in`` full
    sweeps (coordinates ``0..d-1`` in order), then keeps the state after
    every ``thinning``-th sweep until ``n`` states are collected.
    """
    theta = as_symmetric(theta, "theta")
    n = _check_count(n)
    if n < 1:
        raise ValueError("gibbs_sample needs n >= 1")
    d = theta.shape[0]
    rng = np.random.default_rng(config.seed)
    x = [int(b) for b in rng.integers(0, 2, size=d)]
    bias = [float(theta[i, i]) for i in range(d)]
    coup = [[2.0 * float(theta[i, j]) if j != i else 0.0 for j in range(d)] for i in range(d)]
    exp = math.exp
    out = np.empty((n, d), dtype=np.uint8)
    total = config.burn_in + n * config.thinning
    chunk = 4096
    kept = 0
    sweep = 0
    while sweep < total:
        m = min(chunk, total - sweep)
        uniforms = rng.random((m, d)).tolist()
        for u in uniforms:
            for i in range(d):
                row = coup[i]
                f = bias[i]
                for j in range(d):
                    if x[j]:
                        f += row[j]
                # logistic(f) > u  <=>  x_i = 1; written to avoid overflow
                if f >= 0:
                    x[i] = 1 if u[i] * (1.0 + exp(-f)) < 1.0 else 0
                else:
                    ef = exp(f)
                    x[i] = 1 if u[i] * (1.0 + ef) < ef else 0
            sweep += 1
            if sweep > config.burn_in and (sweep - config.burn_in) % config.thinning == 0:
                out[kept] = x
                kept += 1
    return BinaryDataset(out)


def empirical_vs_exact_tv(data, theta):
    """Total variation ``0.5 * sum_x |freq(x) - p(x)|`` against the model."""
    theta = as_symmetric(theta, "theta")
    d = theta.shape[0]
    if data.dim != d:
        raise DimensionError(f"dataset has dimension {data.dim}, theta has {d}")
    check_enumerable(d)
    freq = np.bincount(data.states, minlength=1 << d) / data.count
    return 0.5 * float(np.sum(np.abs(freq - state_probs(theta))))
