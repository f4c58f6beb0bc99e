"""Dense symmetric matrix helpers shared by all modules.

Symmetric matrices are plain ``numpy.ndarray`` objects of shape ``(d, d)``.
:func:`as_symmetric` is the validation gate used at every public entry
point; it returns a float64 copy whose symmetry is exact.
"""

from typing import Callable, NamedTuple, Optional

import numpy as np

from .exceptions import DimensionError

SYMMETRY_RTOL = 1e-12


def as_symmetric(a, name="matrix", dim=None):
    """Validate ``a`` as a real symmetric matrix and return an exact copy.

    Entries may differ from their transposes by at most ``1e-12`` relative
    (round-off from file I/O); the result is then averaged with its
    transpose so that ``out[i, j] == out[j, i]`` holds bit-for-bit.
    """
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise DimensionError(f"{name} must have dimension >= 1")
    if dim is not None and m.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {m.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (m + m.T)


def inner(a, b):
    """Frobenius inner product ``tr(a.T @ b)``."""
    return float(np.sum(a * b))


def spectral_norm(m):
    """Largest absolute eigenvalue of a symmetric matrix."""
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))


def max_norm(m):
    """Entrywise maximum norm ``max |m_ij|``."""
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m)))


def l1_norm(m):
    """Entrywise l1 norm summed over all ``(i, j)``, diagonal included."""
    return float(np.sum(np.abs(m)))


def nuclear_norm(m):
    return float(np.sum(np.abs(np.linalg.eigvalsh(m))))


def is_psd(m, rtol=1e-9):
    """PSD test with the relative slack ``-rtol * (1 + lambda_max)``."""
    w = np.linalg.eigvalsh(m)
    return bool(w[0] >= -rtol * (1.0 + max(w[-1], 0.0)))


def random_symmetric(rng, d, scale=1.0):
    a = rng.normal(scale=scale, size=(d, d))
    return 0.5 * (a + a.T)


def polar_sign(m):
    """Maximiser of ``<m, Z>`` over ``||Z|| <= 1``: ``Q sign(E) Q.T``.

    Zero eigenvalues map to ``+1`` so the result has unit spectral norm.
    """
    w, q = np.linalg.eigh(m)
    s = np.where(w >= 0, 1.0, -1.0)
    return (q * s) @ q.T


def random_unit_spectral(rng, d):
    """Random symmetric matrix with all eigenvalues in {-1, +1}."""
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    s = rng.choice([-1.0, 1.0], size=d)
    return (q * s) @ q.T


def tabulate_operator(apply, d):
    """Matrix ``K`` with ``vec(apply(M)) == K @ vec(M)`` for symmetric ``M``.

    Columns for ``(i, j)`` and ``(j, i)`` are set equal, so ``K`` acts as
    ``apply`` on the symmetric subspace and sends antisymmetric input to 0.
    """
    k = np.zeros((d * d, d * d))
    for i in range(d):
        e = np.zeros((d, d))
        e[i, i] = 1.0
        k[:, i * d + i] = apply(e).ravel()
        for j in range(i + 1, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0
            col = 0.5 * apply(e).ravel()
            k[:, i * d + j] = col
            k[:, j * d + i] = col
    return k


def sym_orthonormal_basis(d):
    """Orthonormal basis of Sym(d) under the Frobenius inner product.

    Returns an array of shape ``(d*(d+1)//2, d, d)``: ``E_ii`` followed by
    ``(E_ij + E_ji)/sqrt(2)`` for ``i < j``.
    """
    basis = []
    for i in range(d):
        e = np.zeros((d, d))
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
            basis.append(e)
    return np.array(basis)


class OperatorNormEstimate(NamedTuple):
    """Result of :func:`spectral_operator_norm`.

    ``value`` is attained by ``argmax`` (``||argmax|| == 1``), so it is a
    certified lower bound on the spectral-to-spectral operator norm.
    """

    value: float
    argmax: np.ndarray
    converged: bool
    iterations: int
    heuristic: bool = True


def spectral_operator_norm(
    apply: Callable[[np.ndarray], np.ndarray],
    d: int,
    restarts: int = 32,
    seed=0,
    max_iter: int = 200,
    tol: float = 1e-10,
    starts: Optional[list] = None,
) -> OperatorNormEstimate:
    """Estimate ``max ||A(M)||`` over symmetric ``M`` with ``||M|| <= 1``.

    ``apply`` must be self-adjoint under the Frobenius inner product. Each
    restart alternates between the top eigenvector ``v`` of ``A(M)`` and
    ``M <- polar_sign(A(s v v^T))``; this never decreases ``||A(M)||``, so
    every restart ends at a local maximiser. The maximum over restarts is
    returned.
    """
    rng = np.random.default_rng(seed)
    candidates = [np.eye(d)] + list(starts or [])
    candidates += [random_unit_spectral(rng, d) for _ in range(max(restarts - 1, 0))]
    best = OperatorNormEstimate(0.0, np.eye(d), True, 0)
    all_converged = True
    total_iter = 0
    for m in candidates:
        m = polar_sign(m)
        val = spectral_norm(apply(m))
        converged = False
        for it in range(max_iter):
            total_iter += 1
            n = apply(m)
            w, q = np.linalg.eigh(n)
            k = int(np.argmax(np.abs(w)))
            s = 1.0 if w[k] >= 0 else -1.0
            v = q[:, k]
            m_new = polar_sign(apply(s * np.outer(v, v)))
            val_new = spectral_norm(apply(m_new))
            if val_new <= val * (1.0 + tol) + 1e-300:
                if val_new > val:
                    m, val = m_new, val_new
                converged = True
                break
            m, val = m_new, val_new
        all_converged &= converged
        if val > best.value:
            best = OperatorNormEstimate(val, m, True, 0)
    return OperatorNormEstimate(best.value, best.argmax, all_converged, total_iter)
