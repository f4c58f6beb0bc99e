"""Exact enumeration machinery for pairwise Ising models on {0,1}^d.

The density is ``p(x) = exp(<Theta, x x^T> - a(Theta))`` with the full
double sum ``<Theta, x x^T> = sum_ij Theta_ij x_i x_j``: off-diagonal
interactions count twice and the diagonal acts as a linear bias. Because
``x_i**2 == x_i`` the statistic ``x x^T`` carries ``x`` on its diagonal.

States are unsigned integers with bit ``i`` equal to ``x_i``. Sums over the
``2**d`` states run over fixed consecutive blocks of ``BLOCK_STATES``
states in increasing order, and per-block partial results are combined in
that same order, so every reduction is deterministic. Blocks are
independent and could be farmed out to workers without changing the
combination order.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .exceptions import DimensionError, EnumerationCapError
from .matrices import (
    OperatorNormEstimate,
    as_symmetric,
    inner,
    spectral_operator_norm,
)

ENUMERATION_CAP = 20
BLOCK_STATES = 1 << 16


def check_enumerable(d, cap=ENUMERATION_CAP):
    if d > cap:
        raise EnumerationCapError(
            f"dimension {d} exceeds the enumeration cap {cap} (2**{cap} states)"
        )


def states_to_bits(states, d):
    """Unpack integer state indices into an ``(n, d)`` uint8 array."""
    states = np.asarray(states, dtype=np.int64)
    return ((states[:, None] >> np.arange(d)) & 1).astype(np.uint8)


def bits_to_states(bits):
    """Pack an ``(n, d)`` 0/1 array into integer state indices."""
    bits = np.asarray(bits, dtype=np.int64)
    return bits @ (np.int64(1) << np.arange(bits.shape[1], dtype=np.int64))


@lru_cache(maxsize=32)
def _block_bits(d, start, stop):
    out = states_to_bits(np.arange(start, stop), d).astype(np.float64)
    out.flags.writeable = False
    return out


def _blocks(d):
    total = 1 << d
    for start in range(0, total, BLOCK_STATES):
        stop = min(start + BLOCK_STATES, total)
        yield start, _block_bits(d, start, stop)


def all_states(d):
    """All ``2**d`` states as a float ``(2**d, d)`` array, index = state."""
    check_enumerable(d)
    return np.concatenate([x for _, x in _blocks(d)], axis=0)


def _energies(theta, x):
    return np.einsum("ki,ij,kj->k", x, theta, x)


@dataclass
class BinaryDataset:
    """``n`` samples from ``{0,1}^d`` stored as an ``(n, d)`` uint8 array."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2 or s.shape[1] < 1:
            raise DimensionError(f"samples must be an (n, d) array, got {s.shape}")
        if s.size and not np.all((s == 0) | (s == 1)):
            raise ValueError("every coordinate of every sample must be 0 or 1")
        self.samples = s.astype(np.uint8)

    @property
    def dim(self):
        return self.samples.shape[1]

    @property
    def count(self):
        return self.samples.shape[0]

    @property
    def states(self):
        """Bit-packed state index of every sample (bit ``i`` = ``x_i``)."""
        return bits_to_states(self.samples)

    @classmethod
    def from_states(cls, states, d):
        return cls(states_to_bits(states, d))

    @classmethod
    def from_strings(cls, lines):
        rows = [ln.strip() for ln in lines if ln.strip()]
        if not rows:
            raise ValueError("no samples")
        if len({len(r) for r in rows}) != 1:
            raise DimensionError("samples have inconsistent lengths")
        if any(set(r) - {"0", "1"} for r in rows):
            raise ValueError("samples must be 0/1 strings")
        return cls(np.array([[int(c) for c in r] for r in rows], dtype=np.uint8))

    def to_strings(self):
        return ["".join("1" if b else "0" for b in row) for row in self.samples]

    def __len__(self):
        return self.count


def _as_bits(x, dim=None):
    v = np.asarray(x)
    if v.ndim != 1:
        raise DimensionError("a bit-vector must be one-dimensional")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"bit-vector has length {v.shape[0]}, expected {dim}")
    if not np.all((v == 0) | (v == 1)):
        raise ValueError("bit-vector coordinates must be 0 or 1")
    return v.astype(np.float64)


def suff_stats(x, dim=None):
    """Sufficient statistic ``Phi(x) = x x^T``."""
    v = _as_bits(x, dim)
    return np.outer(v, v)


def empirical_second_moment(data):
    """``Phi^n = (1/n) sum_k x_k x_k^T`` for a dataset or an ``(n, d)`` array."""
    s = data.samples if isinstance(data, BinaryDataset) else np.asarray(data)
    if s.ndim != 2 or s.shape[0] == 0:
        raise ValueError("empirical second moment of an empty dataset")
    x = s.astype(np.float64)
    return (x.T @ x) / x.shape[0]


def _block_log_sums(theta):
    """Per-block ``log sum exp`` of the energies, in block order."""
    return np.array([logsumexp(_energies(theta, x)) for _, x in _blocks(theta.shape[0])])


def log_partition(theta, cap=ENUMERATION_CAP):
    """``a(Theta) = log sum_x exp(<Theta, Phi(x)>)`` by exact enumeration."""
    theta = as_symmetric(theta, "theta")
    check_enumerable(theta.shape[0], cap)
    return float(logsumexp(_block_log_sums(theta)))


def state_log_probs(theta, cap=ENUMERATION_CAP):
    """Log-probabilities of all ``2**d`` states, indexed by packed state."""
    theta = as_symmetric(theta, "theta")
    check_enumerable(theta.shape[0], cap)
    e = np.concatenate([_energies(theta, x) for _, x in _blocks(theta.shape[0])])
    return e - logsumexp(_block_log_sums(theta))


def state_probs(theta, cap=ENUMERATION_CAP):
    return np.exp(state_log_probs(theta, cap))


def state_log_prob(theta, x, cap=ENUMERATION_CAP):
    theta = as_symmetric(theta, "theta")
    v = _as_bits(x, theta.shape[0])
    return float(v @ theta @ v) - log_partition(theta, cap)


def _weighted_moments(theta, weight_fn=None):
    """Return ``(a, E[w Phi], E[w])`` with ``w = weight_fn(x)`` (default 1)."""
    d = theta.shape[0]
    a = logsumexp(_block_log_sums(theta))
    mom = np.zeros((d, d))
    mean_w = 0.0
    for _, x in _blocks(d):
        p = np.exp(_energies(theta, x) - a)
        if weight_fn is not None:
            w = weight_fn(x)
            mean_w += float(p @ w)
            p = p * w
        mom += (x * p[:, None]).T @ x
    return float(a), 0.5 * (mom + mom.T), mean_w


def expected_second_moment(theta, cap=ENUMERATION_CAP):
    """``Phi* = E_Theta[x x^T]`` by exact enumeration."""
    theta = as_symmetric(theta, "theta")
    check_enumerable(theta.shape[0], cap)
    return _weighted_moments(theta)[1]


def _check_pair(theta, other, name):
    theta = as_symmetric(theta, "theta")
    other = as_symmetric(other, name)
    if other.shape != theta.shape:
        raise DimensionError(f"{name} has shape {other.shape}, theta has {theta.shape}")
    return theta, other


def neg_log_likelihood(theta, phi_n, cap=ENUMERATION_CAP):
    """``l(Theta) = a(Theta) - <Theta, Phi^n>`` (average over samples)."""
    theta, phi_n = _check_pair(theta, phi_n, "phi_n")
    return log_partition(theta, cap) - inner(theta, phi_n)


def nll_gradient(theta, phi_n, cap=ENUMERATION_CAP):
    """``grad l(Theta) = E_Theta[Phi] - Phi^n``."""
    theta, phi_n = _check_pair(theta, phi_n, "phi_n")
    return expected_second_moment(theta, cap) - phi_n


def nll_value_and_gradient(theta, phi_n):
    """Objective and gradient from a single enumeration pass (no validation)."""
    a, mom, _ = _weighted_moments(theta)
    return a - inner(theta, phi_n), mom - phi_n


def hessian_vector_product(theta, m, cap=ENUMERATION_CAP):
    """``H m = Cov(<Phi, m>, Phi)`` at ``theta``, exact."""
    theta, m = _check_pair(theta, m, "m")
    check_enumerable(theta.shape[0], cap)
    return _hvp(theta, m)


def _hvp(theta, m):
    _, mom_w, mean_w = _weighted_moments(theta, lambda x: _energies(m, x))
    _, mom, _ = _weighted_moments(theta)
    return mom_w - mean_w * mom


def hessian_matrix(theta, cap=ENUMERATION_CAP):
    """Tabulated Hessian ``K`` (``d*d x d*d``) with ``vec(H M) = K vec(M)``.

    ``K`` is the covariance of ``vec(x x^T)`` and is symmetric PSD; it acts
    on the symmetric subspace exactly as :func:`hessian_vector_product`.
    """
    theta = as_symmetric(theta, "theta")
    d = theta.shape[0]
    check_enumerable(d, cap)
    a = logsumexp(_block_log_sums(theta))
    second = np.zeros((d * d, d * d))
    first = np.zeros(d * d)
    for _, x in _blocks(d):
        p = np.exp(_energies(theta, x) - a)
        phi = (x[:, :, None] * x[:, None, :]).reshape(x.shape[0], d * d)
        first += p @ phi
        second += (phi * p[:, None]).T @ phi
    k = second - np.outer(first, first)
    return 0.5 * (k + k.T)


def hessian_operator_norm(theta, tol=1e-10, restarts=32, seed=0, max_iter=200):
    """Spectral-to-spectral operator norm of the Hessian, heuristic lower bound.

    The Hessian is tabulated once and the maximisation uses
    :func:`latent_ising.matrices.spectral_operator_norm`. The returned value
    is attained by an explicit unit-norm matrix, so it never overestimates;
    ``converged`` is False if some restart ran out of iterations.
    """
    theta = as_symmetric(theta, "theta")
    d = theta.shape[0]
    k = hessian_matrix(theta)

    def apply(m):
        return (k @ m.ravel()).reshape(d, d)

    return spectral_operator_norm(apply, d, restarts=restarts, seed=seed,
                                  max_iter=max_iter, tol=tol)


@dataclass
class IsingModel:
    """Pairwise Ising model with an optional cached log-partition value."""

    theta: np.ndarray
    cached_log_partition: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        self.theta = as_symmetric(self.theta, "theta")

    @property
    def dim(self):
        return self.theta.shape[0]

    def log_partition(self):
        if self.cached_log_partition is None:
            self.cached_log_partition = log_partition(self.theta)
        return self.cached_log_partition

    def log_prob(self, x):
        v = _as_bits(x, self.dim)
        return float(v @ self.theta @ v) - self.log_partition()

    def probabilities(self):
        return state_probs(self.theta)

    def second_moment(self):
        return expected_second_moment(self.theta)


__all__ = [
    "ENUMERATION_CAP",
    "BinaryDataset",
    "IsingModel",
    "OperatorNormEstimate",
    "all_states",
    "bits_to_states",
    "check_enumerable",
    "empirical_second_moment",
    "expected_second_moment",
    "hessian_matrix",
    "hessian_operator_norm",
    "hessian_vector_product",
    "log_partition",
    "neg_log_likelihood",
    "nll_gradient",
    "nll_value_and_gradient",
    "state_log_prob",
    "state_log_probs",
    "state_probs",
    "states_to_bits",
    "suff_stats",
]
