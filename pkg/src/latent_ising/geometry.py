"""Tangent spaces of the sparse and low-rank varieties and the constants
that govern when a sparse + low-rank split is identifiable.

Exact quantities (projectors, coherence, the degree bound on ``mu``) are
computed directly. Quantities defined by nonconvex optimisation (twisting,
the lower end of ``xi``, the Hessian gains and effects) are estimated by
local search with restarts. Every estimate is evaluated at an explicit
feasible matrix, which fixes its direction: an estimated maximum never
exceeds the true maximum and an estimated minimum is never below the true
minimum.
"""

import itertools
import math
from dataclasses import asdict, dataclass
from typing import FrozenSet, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .matrices import (
    as_symmetric,
    max_norm,
    spectral_norm,
    spectral_operator_norm,
)
from .solver import gamma_norm  # noqa: F401  (re-exported)

MAX_SIGN_PATTERNS = 1 << 20


@dataclass(frozen=True)
class SupportSet:
    """Symmetric support: pairs ``(i, j)`` with ``i <= j`` stand for both orders."""

    dim: int
    entries: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        canon = frozenset((min(i, j), max(i, j)) for i, j in self.entries)
        for i, j in canon:
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError(f"support entry ({i}, {j}) out of range for dimension {self.dim}")
        object.__setattr__(self, "entries", canon)

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        mask = mask | mask.T
        i, j = np.nonzero(np.triu(mask))
        return cls(mask.shape[0], frozenset(zip(i.tolist(), j.tolist())))

    def mask(self):
        m = np.zeros((self.dim, self.dim), dtype=bool)
        for i, j in self.entries:
            m[i, j] = m[j, i] = True
        return m

    def free_positions(self):
        return sorted(self.entries)

    def max_degree(self):
        """Largest number of support entries in a row."""
        if not self.entries:
            return 0
        return int(self.mask().sum(axis=1).max())

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class LowRankBasis:
    """Orthonormal columns ``u`` (``d x r``) spanning the range of ``L``."""

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64)
        if u.ndim == 1:
            u = u[:, None]
        if u.ndim != 2 or u.shape[1] > u.shape[0]:
            raise ValueError(f"basis must be d x r with r <= d, got {u.shape}")
        if u.shape[1] and np.max(np.abs(u.T @ u - np.eye(u.shape[1]))) > 1e-10:
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "u", u)

    @property
    def dim(self):
        return self.u.shape[0]

    @property
    def rank(self):
        return self.u.shape[1]

    @classmethod
    def from_vectors(cls, v):
        """Orthonormalise the columns of ``v`` (QR)."""
        q, _ = np.linalg.qr(np.atleast_2d(np.asarray(v, dtype=np.float64).T).T)
        return cls(q)

    def projector(self):
        return self.u @ self.u.T


@dataclass(frozen=True)
class TangentPair:
    omega: SupportSet
    t_basis: LowRankBasis

    def __post_init__(self):
        if self.omega.dim != self.t_basis.dim:
            raise ValueError("support and basis dimensions differ")

    @property
    def dim(self):
        return self.omega.dim


def sparse_tangent(s, tol=0.0):
    """Support ``{(i, j) : |s_ij| > tol}``."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    s = as_symmetric(s, "S")
    return SupportSet.from_mask(np.abs(s) > tol)


def lowrank_tangent(l, rank_tol=1e-6):
    """Eigenvectors of ``l`` with ``|eigenvalue| > rank_tol * max|eigenvalue|``."""
    l = as_symmetric(l, "L")
    w, q = np.linalg.eigh(l)
    top = float(np.max(np.abs(w)))
    if top == 0.0:
        return LowRankBasis(q[:, :0])
    keep = np.abs(w) > rank_tol * top
    order = np.argsort(-np.abs(w[keep]), kind="stable")
    return LowRankBasis(q[:, keep][:, order])


def project_omega(omega, m):
    return np.where(omega.mask(), m, 0.0)


def project_omega_perp(omega, m):
    return np.where(omega.mask(), 0.0, m)


def project_t(basis, n):
    """``P_U N + N P_U - P_U N P_U`` with ``P_U = U U^T``."""
    if basis.rank == 0:
        return np.zeros_like(n)
    pu = basis.projector()
    npu = n @ pu
    return pu @ n + npu - pu @ npu


def project_t_perp(basis, n):
    """``(I - P_U) N (I - P_U)``."""
    comp = np.eye(basis.dim) - basis.projector()
    return comp @ n @ comp


def coherence(basis):
    """``max_i ||P_U e_i||``, the largest row norm of ``U``."""
    if basis.rank == 0:
        return 0.0
    return float(np.max(np.linalg.norm(basis.u, axis=1)))


def twisting(b1, b2, restarts=32, seed=0):
    """Heuristic lower bound on ``max_{||M|| = 1} ||(P_T1 - P_T2) M||``.

    The difference of two orthogonal projectors is self-adjoint, so the
    alternating ascent of
    :func:`latent_ising.matrices.spectral_operator_norm` applies. The
    argument order does not change the trajectory, hence the result is
    symmetric exactly.
    """
    if b1.dim != b2.dim:
        raise ValueError("bases have different dimensions")

    def diff(m):
        return project_t(b1, m) - project_t(b2, m)

    return spectral_operator_norm(diff, b1.dim, restarts=restarts, seed=seed).value


class MuEstimate(NamedTuple):
    exact: Optional[float]
    upper: float
    lower: float


def mu_omega(omega, max_patterns=MAX_SIGN_PATTERNS, seed=0, random_patterns=4096):
    """Norm compatibility ``mu(Omega) = max ||N|| / ||N||_inf`` over ``N`` in Omega.

    The numerator is convex, so the maximum over the box ``||N||_inf <= 1``
    sits at a sign pattern. All patterns (up to a global sign) are
    enumerated when there are at most ``max_patterns`` of them; otherwise
    ``exact`` is None and ``lower`` comes from random sign patterns.
    ``upper`` is the maximum row degree.
    """
    pos = omega.free_positions()
    k = len(pos)
    upper = float(omega.max_degree())
    if k == 0:
        return MuEstimate(0.0, 0.0, 0.0)
    d = omega.dim
    rows = np.array([p[0] for p in pos])
    cols = np.array([p[1] for p in pos])

    def norms(signs):
        mats = np.zeros((signs.shape[0], d, d))
        mats[:, rows, cols] = signs
        mats[:, cols, rows] = signs
        return np.max(np.abs(np.linalg.eigvalsh(mats)), axis=1)

    if (1 << (k - 1)) <= max_patterns:
        best = 0.0
        total = 1 << (k - 1)
        chunk = 1 << 14
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total))
            bits = (idx[:, None] >> np.arange(k - 1)) & 1
            signs = np.concatenate([np.ones((idx.size, 1)), 1.0 - 2.0 * bits], axis=1)
            best = max(best, float(np.max(norms(signs))))
        return MuEstimate(best, upper, best)
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(random_patterns, k))
    signs = np.concatenate([np.ones((1, k)), signs])
    return MuEstimate(None, upper, float(np.max(norms(signs))))


class XiEstimate(NamedTuple):
    lower: float
    upper: float


def _tangent_map(basis):
    u = basis.u

    def build(x):
        x = x.reshape(u.shape)
        ux = u @ x.T
        return ux + ux.T

    return build


def xi_t(basis, restarts=32, seed=0, max_iter=200):
    """Bracket for ``xi(T) = max ||M||_inf / ||M||`` over ``M`` in ``T``.

    ``upper = min(1, 2 coh(U))``. ``lower`` comes from normalised ascent of
    ``<A, M> / ||M||`` inside ``T`` (``A`` the symmetric unit matrix of the
    currently largest entry) started from ``P_T(A)`` for every entry pair
    and from ``restarts`` random tangent matrices.
    """
    if basis.rank == 0:
        return XiEstimate(0.0, 0.0)
    d = basis.dim
    upper = min(1.0, 2.0 * coherence(basis))
    rng = np.random.default_rng(seed)
    build = _tangent_map(basis)
    starts = []
    for i in range(d):
        for j in range(i, d):
            a = np.zeros((d, d))
            a[i, j] = a[j, i] = 1.0
            starts.append(project_t(basis, a))
    starts += [build(rng.normal(size=basis.u.size)) for _ in range(restarts)]

    best = 0.0
    for m in starts:
        nrm = spectral_norm(m)
        if nrm < 1e-14:
            continue
        m = m / nrm
        i, j = np.unravel_index(np.argmax(np.abs(m)), m.shape)
        sgn = 1.0 if m[i, j] >= 0 else -1.0
        a = np.zeros((d, d))
        a[i, j] = a[j, i] = sgn
        pa = project_t(basis, a)
        best = max(best, max_norm(m))
        step = 0.5
        for it in range(max_iter):
            w, q = np.linalg.eigh(m)
            k = int(np.argmax(np.abs(w)))
            v = q[:, k]
            s = 1.0 if w[k] >= 0 else -1.0
            grad = pa - m[i, j] * sgn * project_t(basis, s * np.outer(v, v))
            cand = m + step * grad
            cn = spectral_norm(cand)
            if cn < 1e-14:
                break
            cand = cand / cn
            if sgn * cand[i, j] > sgn * m[i, j]:
                m = cand
                best = max(best, max_norm(m))
            else:
                step *= 0.5
                if step < 1e-8:
                    break
    return XiEstimate(best, upper)


def twisted_xi_bound(xi_t1, rho):
    """``(xi(T1) + rho) / (1 - rho)``, valid for ``rho < 1``."""
    if rho >= 1:
        raise ValueError("twisting must be < 1")
    if rho < 0:
        raise ValueError("twisting must be >= 0")
    return (xi_t1 + rho) / (1.0 - rho)


class GammaRange(NamedTuple):
    gamma_min: float
    gamma_max: float
    feasible: bool
    product: float
    product_bound: float
    product_ok: bool


def gamma_range(alpha, beta, nu, xi, mu):
    """Interval of trade-off parameters allowed by the stability constants.

    ``gamma_min = 3 beta (2 - nu) xi / (nu alpha)`` and
    ``gamma_max = nu alpha / (2 beta (2 - nu) mu)``; non-empty iff
    ``mu xi <= (nu alpha / (beta (2 - nu)))**2 / 6``. ``mu == 0`` (empty
    support) gives ``gamma_max = inf``.
    """
    if not alpha > 0 or not beta > 0:
        raise ValueError("alpha and beta must be > 0")
    if not 0 < nu <= 0.5:
        raise ValueError("nu must lie in (0, 1/2]")
    if xi < 0 or mu < 0:
        raise ValueError("xi and mu must be >= 0")
    gmin = 3.0 * beta * (2.0 - nu) * xi / (nu * alpha)
    gmax = math.inf if mu == 0 else nu * alpha / (2.0 * beta * (2.0 - nu) * mu)
    bound = (nu * alpha / (beta * (2.0 - nu))) ** 2 / 6.0
    prod = mu * xi
    return GammaRange(gmin, gmax, gmin <= gmax, prod, bound, prod <= bound * (1 + 1e-12))


class GapCheck(NamedTuple):
    s_ok: bool
    sigma_ok: bool
    s_min: float
    sigma_min: float
    s_threshold: float
    sigma_threshold: float
    s_vacuous: bool
    sigma_vacuous: bool


def gap_check(s_star, l_star, lambda_n, mu, xi, c_s, c_l, zero_tol=0.0):
    """Compare the smallest non-zero entry of ``S*`` and eigenvalue of ``L*``
    with ``c_s lambda_n / mu`` and ``c_l lambda_n / xi**2``.

    A zero ``S*`` or ``L*`` makes the corresponding check vacuous (reported
    as satisfied with ``s_min``/``sigma_min`` set to ``inf``).
    """
    for name, v in (("lambda_n", lambda_n), ("mu", mu), ("xi", xi), ("c_s", c_s), ("c_l", c_l)):
        if not v > 0:
            raise ValueError(f"{name} must be > 0")
    s_star = as_symmetric(s_star, "S*")
    l_star = as_symmetric(l_star, "L*")
    nz = np.abs(s_star[np.abs(s_star) > zero_tol])
    s_thr = c_s * lambda_n / mu
    sig_thr = c_l * lambda_n / xi ** 2
    w = np.abs(np.linalg.eigvalsh(l_star))
    top = float(w.max())
    nzw = w[w > max(zero_tol, 1e-12 * top)] if top > 0 else w[:0]
    s_vac = nz.size == 0
    sig_vac = nzw.size == 0
    s_min = math.inf if s_vac else float(nz.min())
    sig_min = math.inf if sig_vac else float(nzw.min())
    return GapCheck(s_vac or s_min >= s_thr, sig_vac or sig_min >= sig_thr,
                    s_min, sig_min, s_thr, sig_thr, s_vac, sig_vac)


class PerturbationCheck(NamedTuple):
    applicable: bool
    twist_bound_ok: bool
    normal_bound_ok: bool
    twist_estimate: float
    twist_bound: float
    normal_value: float
    normal_bound: float
    reason: str


def perturbation_bounds_check(l, delta, rank_tol=1e-9, restarts=16, seed=0):
    """Check ``rho(T(L + D), T(L)) <= 2||D||/sigma`` and
    ``||P_T(L)perp(D)|| <= ||D||**2 / sigma``.

    Applicable only when ``||D|| <= sigma/8`` and ``L + D`` keeps the rank
    of ``L`` (``sigma`` = smallest non-zero singular value of ``L``).
    The twisting side uses the heuristic estimator, which never
    overestimates, so a pass there is a check of the estimate.
    """
    l = as_symmetric(l, "L")
    delta = as_symmetric(delta, "Delta", dim=l.shape[0])
    sv = np.abs(np.linalg.eigvalsh(l))
    top = float(sv.max())
    dn = spectral_norm(delta)
    if top == 0.0:
        return PerturbationCheck(False, False, False, math.nan, math.nan, math.nan, math.nan,
                                 "L is zero")
    nz = sv[sv > rank_tol * top]
    sigma = float(nz.min())
    r = nz.size
    base = lowrank_tangent(l, rank_tol)
    pert = lowrank_tangent(l + delta, rank_tol)
    if dn > sigma / 8.0:
        return PerturbationCheck(False, False, False, math.nan, 2 * dn / sigma, math.nan,
                                 dn ** 2 / sigma, "||Delta|| > sigma/8")
    if pert.rank != r:
        return PerturbationCheck(False, False, False, math.nan, 2 * dn / sigma, math.nan,
                                 dn ** 2 / sigma, "rank(L + Delta) != rank(L)")
    rho = twisting(pert, base, restarts=restarts, seed=seed) if dn > 0 else 0.0
    normal = spectral_norm(project_t_perp(base, delta))
    tb = 2.0 * dn / sigma
    nb = dn ** 2 / sigma
    slack = 1e-10 * max(1.0, top)
    return PerturbationCheck(True, rho <= tb + slack, normal <= nb + slack, rho, tb, normal, nb, "")


# --------------------------------------------------------------------------
# Hessian stability constants


@dataclass
class StabilityEstimates:
    alpha_omega: float
    alpha_t: float
    delta_omega: float
    delta_t: float
    beta_omega: float
    beta_t: float
    epsilon: float
    method_note: str
    sample_count: int
    max_sampled_twist: float = 0.0
    delta_omega_exact: bool = False
    heuristic: bool = True

    @property
    def alpha(self):
        return min(self.alpha_omega, self.alpha_t)

    @property
    def delta(self):
        return max(self.delta_omega, self.delta_t)

    @property
    def beta(self):
        return max(self.beta_omega, self.beta_t)

    def to_dict(self):
        out = asdict(self)
        out.update(alpha=self.alpha, delta=self.delta, beta=self.beta)
        return out


def as_operator(hessian, d):
    """Wrap a tabulated ``(d*d, d*d)`` matrix or a callable as ``M -> H M``."""
    if callable(hessian):
        return hessian
    k = np.asarray(hessian, dtype=np.float64)
    if k.shape != (d * d, d * d):
        raise ValueError(f"tabulated Hessian must have shape {(d * d, d * d)}, got {k.shape}")
    return lambda m: (k @ m.ravel()).reshape(d, d)


class _Tracker:
    """Records the best objective value seen at any feasible point."""

    def __init__(self, fn, maximize):
        self.fn = fn
        self.sign = -1.0 if maximize else 1.0
        self.best = math.inf
        self.arg = None

    def __call__(self, z):
        v = self.fn(z)
        if not np.isfinite(v):
            return math.inf
        v = self.sign * v
        if v < self.best:
            self.best = v
            self.arg = np.array(z, dtype=np.float64)
        return v

    @property
    def value(self):
        return self.sign * self.best


def _search(fn, dim, rng, restarts, maximize, starts=(), maxfev=None):
    track = _Tracker(fn, maximize)
    pts = [np.asarray(s, dtype=np.float64) for s in starts]
    pts += [rng.normal(size=dim) for _ in range(restarts)]
    opts = {"xtol": 1e-6, "ftol": 1e-9, "maxfev": maxfev or 400 * dim}
    for z0 in pts:
        track(z0)
        minimize(track, z0, method="Powell", options=opts)
    return track.value, track.arg


class _TwistBall:
    """Tangent spaces ``T(L')`` of rank-preserving perturbations of ``L*``.

    ``L' = top_r(L* + c (U X^T + X U^T))`` with ``c`` shrunk until the
    realised perturbation satisfies ``2 ||L' - L*|| / sigma_min <= epsilon``
    and ``||L' - L*|| <= sigma_min / 8``.
    """

    def __init__(self, basis, l_star, epsilon):
        self.u = basis.u
        self.r = basis.rank
        self.l_star = self.u @ self.u.T if l_star is None else as_symmetric(l_star, "L*")
        w = np.abs(np.linalg.eigvalsh(self.l_star))
        sigma = float(np.sort(w)[-self.r])
        self.budget = min(epsilon * sigma / 2.0, sigma / 8.0)

    def space(self, x):
        x = np.asarray(x, dtype=np.float64).reshape(self.u.shape)
        d0 = self.u @ x.T + x @ self.u.T
        n0 = spectral_norm(d0)
        if n0 < 1e-14:
            return None
        c = self.budget / n0
        for _ in range(60):
            ev, q = np.linalg.eigh(self.l_star + c * d0)
            idx = np.argsort(-np.abs(ev), kind="stable")[:self.r]
            lr = (q[:, idx] * ev[idx]) @ q[:, idx].T
            if spectral_norm(lr - self.l_star) <= self.budget:
                return LowRankBasis(q[:, idx])
            c *= 0.5
        return None

    def directions(self, count, rng):
        """Rotations of each basis vector towards each axis, then Gaussian draws."""
        u = self.u
        comp = np.eye(u.shape[0]) - u @ u.T
        dirs = []
        for k in range(self.r):
            for i in range(u.shape[0]):
                x = np.zeros(u.shape)
                x[:, k] = comp[:, i]
                if np.linalg.norm(x) > 1e-8:
                    dirs += [x, -x]
        return dirs + [rng.normal(size=u.shape) for _ in range(count)]


def _t_objectives(b, h):
    """Gain, effect and entrywise gain of ``h`` on ``T(b)`` in tangent coordinates."""
    build = _tangent_map(b)

    def gain(z):
        m = build(z)
        den = spectral_norm(m)
        return spectral_norm(project_t(b, h(m))) / den if den > 0 else math.nan

    def effect(z):
        m = build(z)
        den = spectral_norm(m)
        return spectral_norm(project_t_perp(b, h(m))) / den if den > 0 else math.nan

    def entrywise(z):
        m = build(z)
        den = max_norm(m)
        return max_norm(h(m)) / den if den > 0 else math.nan

    return gain, effect, entrywise


def stability_estimates(hessian, pair, epsilon=None, sample_count=32, restarts=8, seed=0,
                        l_star=None, xi=None):
    """Heuristic minimum gains / maximum effects of ``hessian`` on the tangent spaces.

    ``hessian`` is a callable ``M -> H M`` or a tabulated ``(d*d, d*d)``
    matrix. Omega quantities are optimised directly. For the low-rank side,
    ``sample_count`` nearby tangent spaces ``T'`` (twist radius ``epsilon``,
    default ``xi(T)/2``) are drawn and every quantity is optimised on each
    ``T'`` including ``T`` itself. ``delta_omega`` is exact when the
    support has at most 16 free positions (vertex enumeration).
    """
    d = pair.dim
    h = as_operator(hessian, d)
    rng = np.random.default_rng(seed)
    omega, basis = pair.omega, pair.t_basis
    if epsilon is None:
        if xi is None:
            xi = xi_t(basis, restarts=restarts, seed=seed).upper
        epsilon = xi / 2.0
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon > 0 and sample_count == 0 and basis.rank > 0:
        raise ValueError("sample_count must be >= 1 when epsilon > 0")

    pos = omega.free_positions()
    mask = omega.mask()
    notes = []
    delta_exact = False
    if pos:
        rows = np.array([p[0] for p in pos])
        cols = np.array([p[1] for p in pos])

        def build_omega(z):
            m = np.zeros((d, d))
            m[rows, cols] = z
            m[cols, rows] = z
            return m

        def ratio_inf(fn):
            def f(z):
                m = build_omega(z)
                den = max_norm(m)
                return fn(h(m)) / den if den > 0 else math.nan
            return f

        alpha_o, _ = _search(ratio_inf(lambda hm: max_norm(np.where(mask, hm, 0.0))),
                          len(pos), rng, restarts, False, starts=np.eye(len(pos)))
        k = len(pos)
        delta_fn = ratio_inf(lambda hm: max_norm(np.where(mask, 0.0, hm)))
        if k <= 16:
            delta_o = 0.0
            for signs in itertools.product([1.0, -1.0], repeat=k - 1):
                delta_o = max(delta_o, delta_fn(np.array((1.0,) + signs)))
            delta_exact = True
        else:
            delta_o, _ = _search(delta_fn, k, rng, restarts, True, starts=[np.ones(k)])

        def beta_fn(z):
            m = build_omega(z)
            den = spectral_norm(m)
            return spectral_norm(h(m)) / den if den > 0 else math.nan

        beta_o, _ = _search(beta_fn, k, rng, restarts, True, starts=np.eye(k))
    else:
        alpha_o, delta_o, beta_o = math.inf, 0.0, 0.0
        notes.append("empty support: Omega constants vacuous")

    if basis.rank > 0:
        maximize = (False, True, True)
        dim = basis.u.size
        objs = _t_objectives(basis, h)
        found = [_search(fn, dim, rng, restarts, mx) for fn, mx in zip(objs, maximize)]
        warm = [z for _, z in found]
        best = [v for v, _ in found]
        twists = []
        n_spaces = 1
        if epsilon > 0:
            ball = _TwistBall(basis, l_star, epsilon)

            def on_space(b, k):
                fn = _t_objectives(b, h)[k]
                return _search(fn, dim, rng, 0, maximize[k], starts=[warm[k]])[0]

            per_dir = []
            for x in ball.directions(sample_count, rng):
                b = ball.space(x)
                if b is None:
                    continue
                n_spaces += 1
                twists.append(twisting(b, basis, restarts=4, seed=seed))
                vals = [on_space(b, k) for k in range(3)]
                per_dir.append((x, vals))
            # refine the worst sampled direction for the gain and the effect
            for k in (0, 1):
                if not per_dir:
                    break
                sgn = -1.0 if maximize[k] else 1.0
                x0 = min(per_dir, key=lambda p: sgn * p[1][k])[0]
                tr = _Tracker(lambda x, k=k: (on_space(b, k) if (b := ball.space(x)) is not None
                                              else math.nan), maximize[k])
                minimize(tr, x0.ravel(), method="Powell",
                         options={"xtol": 1e-4, "ftol": 1e-6, "maxfev": 20 * dim})
                refined = list(per_dir[0][1])
                refined[k] = tr.value
                per_dir.append((x0, refined))
            for _, vals in per_dir:
                best[0] = min(best[0], vals[0])
                best[1] = max(best[1], vals[1])
                best[2] = max(best[2], vals[2])
        alpha_t, delta_t, beta_t = best
        max_twist = max(twists) if twists else 0.0
    else:
        alpha_t, delta_t, beta_t, max_twist, n_spaces = math.inf, 0.0, 0.0, 0.0, 0
        notes.append("rank 0: T constants vacuous")

    notes.append("Powell local search with restarts; minima are upper bounds and "
                 "maxima lower bounds of the true values")
    if delta_exact:
        notes.append("delta_omega exact by sign-pattern enumeration")
    return StabilityEstimates(alpha_o, alpha_t, delta_o, delta_t, beta_o, beta_t, float(epsilon),
                              "; ".join(notes), n_spaces, max_twist, delta_exact)


def diagnostics_report(s_star, l_star, hessian=None, nu=0.5, lambda_n=None, c_s=1.0, c_l=1.0,
                       support_tol=0.0, rank_tol=1e-9, restarts=8, sample_count=16, seed=0):
    """All geometric constants and condition checks at ``(S*, L*)`` as a dict.

    ``hessian`` defaults to the exact Ising Hessian at ``S* + L*``. The
    gamma-range uses the upper bounds of ``mu`` and ``xi``; stability
    constants are heuristic (see :func:`stability_estimates`). The gap check
    runs only when ``lambda_n`` is given.
    """
    from .ising import hessian_matrix

    s_star = as_symmetric(s_star, "S*")
    l_star = as_symmetric(l_star, "L*", dim=s_star.shape[0])
    pair = TangentPair(sparse_tangent(s_star, support_tol), lowrank_tangent(l_star, rank_tol))
    if hessian is None:
        hessian = hessian_matrix(s_star + l_star)
    mu = mu_omega(pair.omega)
    xi = xi_t(pair.t_basis, restarts=restarts, seed=seed)
    est = stability_estimates(hessian, pair, sample_count=sample_count, restarts=restarts,
                              seed=seed, l_star=l_star if pair.t_basis.rank else None, xi=xi.upper)
    ratio = est.delta / est.alpha if est.alpha > 0 else math.inf
    report = {
        "dim": pair.dim,
        "support_size": len(pair.omega),
        "rank": pair.t_basis.rank,
        "coherence": coherence(pair.t_basis),
        "mu": {"exact": mu.exact, "upper": mu.upper, "lower": mu.lower},
        "xi": {"lower": xi.lower, "upper": xi.upper, "heuristic_lower": True},
        "stability": est.to_dict(),
        "nu": nu,
        "stability_ratio": ratio,
        "stability_bound": 1.0 - 2.0 * nu,
        "stability_ok": ratio <= 1.0 - 2.0 * nu,
    }
    if est.alpha > 0 and math.isfinite(est.alpha) and est.beta > 0:
        gr = gamma_range(est.alpha, est.beta, nu, xi.upper, mu.upper)
        report["gamma_range"] = gr._asdict()
    else:
        report["gamma_range"] = None
    if lambda_n is not None:
        # an empty support or zero L* makes that half vacuous, so any positive constant will do
        report["gap"] = gap_check(s_star, l_star, lambda_n, mu.upper or 1.0, xi.upper or 1.0,
                                  c_s, c_l, zero_tol=support_tol)._asdict()
    else:
        report["gap"] = None
    return report
