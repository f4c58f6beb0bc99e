"""Conditional Gaussian model with binary observed and Gaussian latent variables.

The joint density is ``p(x, y) ∝ exp(x^T S x + y^T R x - y^T Lambda y / 2)``
on ``{0,1}^d x R^l``. Given ``x``, ``y`` is Gaussian with mean
``Lambda^{-1} R x`` and covariance ``Lambda^{-1}``; integrating ``y`` out
leaves an Ising model with interaction ``S + R^T Lambda^{-1} R / 2``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .exceptions import DimensionError, SingularMatrixError
from .ising import BinaryDataset
from .matrices import as_symmetric
from .sampling import exact_sample

MAX_CONDITION = 1e12


@dataclass
class LatentCGModel:
    """Parameters ``(S, R, Lambda)``; ``Lambda`` must be positive definite."""

    s: np.ndarray
    r: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.s = as_symmetric(self.s, "S")
        self.lam = as_symmetric(self.lam, "Lambda")
        r = np.array(self.r, dtype=np.float64)
        if r.ndim == 1:
            r = r[None, :]
        if r.ndim != 2:
            raise DimensionError("R must be an l x d matrix")
        if r.shape[1] != self.s.shape[0]:
            raise DimensionError(f"R has {r.shape[1]} columns, S has dimension {self.s.shape[0]}")
        if r.shape[0] != self.lam.shape[0]:
            raise DimensionError(f"R has {r.shape[0]} rows, Lambda has dimension {self.lam.shape[0]}")
        self.r = r
        w = np.linalg.eigvalsh(self.lam)
        if w[0] <= 0:
            raise SingularMatrixError(f"Lambda is not positive definite (smallest eigenvalue {w[0]:.3g})")
        if w[-1] / w[0] > MAX_CONDITION:
            raise SingularMatrixError(f"Lambda is numerically singular (condition {w[-1] / w[0]:.3g})")

    @property
    def d(self):
        return self.s.shape[0]

    @property
    def l(self):
        return self.lam.shape[0]

    def _factor(self):
        return cho_factor(self.lam, lower=True)

    def to_dict(self):
        return {"S": self.s, "R": self.r, "Lambda": self.lam}


def marginal_interaction(model):
    """Low-rank part ``L = R^T Lambda^{-1} R / 2`` of the marginal Ising model."""
    low = 0.5 * model.r.T @ cho_solve(model._factor(), model.r)
    return 0.5 * (low + low.T)


def marginal_theta(model):
    return model.s + marginal_interaction(model)


def conditional_gaussian_params(model, x):
    """Mean ``Lambda^{-1} R x`` and covariance ``Lambda^{-1}`` of ``y | x``."""
    v = np.asarray(x, dtype=np.float64)
    if v.shape != (model.d,):
        raise DimensionError(f"x has shape {v.shape}, expected ({model.d},)")
    if not np.all((v == 0) | (v == 1)):
        raise ValueError("x must be binary")
    fac = model._factor()
    mean = cho_solve(fac, model.r @ v)
    cov = cho_solve(fac, np.eye(model.l))
    return mean, 0.5 * (cov + cov.T)


class FullSample(NamedTuple):
    x: BinaryDataset
    y: np.ndarray


def sample_full(model, n, seed=0):
    """Draw ``n`` pairs ``(x, y)`` from the joint model.

    ``x`` comes from the exact Ising marginal, then ``y | x`` uses the
    Cholesky factor ``Lambda = C C^T``: ``y = Lambda^{-1} R x + C^{-T} z``.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    x_seed, y_seed = np.random.SeedSequence(seed).spawn(2)
    if n == 0:
        return FullSample(BinaryDataset(np.zeros((0, model.d), dtype=np.uint8)),
                          np.zeros((0, model.l)))
    data = exact_sample(marginal_theta(model), n, seed=x_seed)
    c = np.linalg.cholesky(model.lam)
    fac = (c, True)
    xs = data.samples.astype(np.float64)
    means = cho_solve(fac, model.r @ xs.T).T
    z = np.random.default_rng(y_seed).standard_normal((n, model.l))
    noise = solve_triangular(c, z.T, lower=True, trans="T").T
    return FullSample(data, means + noise)
