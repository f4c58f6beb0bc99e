"""Sparse + low-rank regularised maximum likelihood for Ising models.

Solves::

    min_{S, L}  l(S + L) + lambda_n * (gamma * ||S||_1 + tr L)   s.t. L >= 0

by proximal gradient on the product space. Both blocks see the same
gradient ``grad l(S + L)``; the S-block is soft-thresholded and the L-block
has its eigenvalues shifted down and clamped at zero. Step sizes come from
backtracking only. Solutions are certified with the subgradient conditions
for the l1 and trace norms (see :func:`verify_kkt`).
"""

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, List, Optional, Sequence

import numpy as np

from .exceptions import ConfigError, DimensionError
from .ising import check_enumerable, expected_second_moment, nll_value_and_gradient
from .matrices import as_symmetric, inner, is_psd, l1_norm, max_norm, spectral_norm


@dataclass
class SolverConfig:
    max_iterations: int = 20000
    rel_objective_tol: float = 1e-15
    kkt_tol: float = 1e-9
    initial_step: float = 1.0
    backtracking_factor: float = 0.5
    acceleration: bool = True
    penalize_diagonal: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError("max_iterations", "must be >= 1")
        for name in ("rel_objective_tol", "kkt_tol", "initial_step"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        if not 0 < self.backtracking_factor < 1:
            raise ConfigError("backtracking_factor", "must lie in (0, 1)")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown solver option")
        return cls(**data)


@dataclass
class SparseLowRankPair:
    s: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        self.s = as_symmetric(self.s, "S")
        self.l = as_symmetric(self.l, "L", dim=self.s.shape[0])
        if not is_psd(self.l):
            raise ValueError("L must be positive semidefinite")

    @property
    def dim(self):
        return self.s.shape[0]

    @property
    def theta(self):
        return self.s + self.l

    @classmethod
    def zeros(cls, d):
        return cls(np.zeros((d, d)), np.zeros((d, d)))


@dataclass
class KktReport:
    """First-order certificate for a candidate ``(S, L)``.

    ``omega_residual`` and ``t_residual`` measure how far the gradient is
    from the required subgradient on the tangent spaces; the two slacks are
    the strict dual feasibility margins (negative means violated).
    ``psd_slack`` is ``lambda_n + lambda_min`` of the normal-space gradient
    on the null space of ``L``: the PSD constraint only needs that one to
    be non-negative, so ``optimal`` can hold while ``t_perp_slack < 0``.
    """

    omega_residual: float
    omega_perp_slack: float
    t_residual: float
    t_perp_slack: float
    strictly_dual_feasible: bool
    psd_slack: float = 0.0
    optimal: bool = False
    support_size: int = 0
    rank: int = 0
    tolerance: float = 1e-6

    def to_dict(self):
        return asdict(self)


@dataclass
class SolverResult:
    estimate: SparseLowRankPair
    objective: float
    iterations: int
    converged: bool
    kkt_report: Optional[KktReport] = None
    lambda_n: float = float("nan")
    gamma: float = float("nan")
    history: List[float] = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "lambda_n": self.lambda_n,
            "gamma": self.gamma,
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "S": self.estimate.s.tolist(),
            "L": self.estimate.l.tolist(),
            "kkt": self.kkt_report.to_dict() if self.kkt_report else None,
        }


def _check_t(t):
    if t < 0:
        raise ValueError(f"threshold must be >= 0, got {t}")


def prox_l1(m, t):
    """Soft threshold ``sign(m) * max(|m| - t, 0)``; ``t`` may be a matrix."""
    _check_t(np.min(t))
    return np.sign(m) * np.maximum(np.abs(m) - t, 0.0)


def prox_psd_trace(m, t):
    """``argmin_{Z >= 0} ||Z - m||_F^2 / 2 + t tr Z``: eigenvalues shifted and clamped."""
    _check_t(t)
    w, q = np.linalg.eigh(0.5 * (m + m.T))
    w = np.maximum(w - t, 0.0)
    z = (q * w) @ q.T
    return 0.5 * (z + z.T)


def l1_weights(d, penalize_diagonal=True):
    w = np.ones((d, d))
    if not penalize_diagonal:
        np.fill_diagonal(w, 0.0)
    return w


def gamma_norm(s, l, gamma):
    """``max(||S||_inf / gamma, ||L||)``, the dual norm of the regulariser."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    return max(max_norm(s) / gamma, spectral_norm(l))


def objective(pair, lambda_n, gamma, phi_n, penalize_diagonal=True):
    """``l(S + L) + lambda_n (gamma ||S||_1 + tr L)``."""
    phi_n = as_symmetric(phi_n, "phi_n", dim=pair.dim)
    check_enumerable(pair.dim)
    f, _ = nll_value_and_gradient(pair.theta, phi_n)
    w = l1_weights(pair.dim, penalize_diagonal)
    return f + lambda_n * (gamma * float(np.sum(w * np.abs(pair.s))) + float(np.trace(pair.l)))


# relative objective change treated as round-off, and the number of
# consecutive stalled iterations that ends the run
ROUNDOFF = 1e-13
STALL_LIMIT = 500
# after convergence, iterate until the gradient mapping drops by this factor
# or the extra budget is spent
POLISH_FACTOR = 0.1
POLISH_ITERATIONS = 50


class ProxGradOutput:
    __slots__ = ("blocks", "objective", "iterations", "converged", "history")

    def __init__(self, blocks, objective, iterations, converged, history):
        self.blocks = blocks
        self.objective = objective
        self.iterations = iterations
        self.converged = converged
        self.history = history


def proximal_gradient(
    smooth: Callable,
    blocks0: Sequence[np.ndarray],
    signs: Sequence[float],
    proxes: Sequence[Callable],
    penalty: Callable,
    measure: Callable,
    config: SolverConfig,
) -> ProxGradOutput:
    """Block proximal gradient for ``f(sum_k sign_k X_k) + penalty(X)``.

    ``smooth(theta)`` returns ``(f, grad)``; block ``k`` receives
    ``sign_k * grad``. ``proxes[k](V, t)`` is the prox of ``t`` times the
    block's penalty. ``measure`` maps block differences to the norm used for
    the stopping rule ``measure(x_plain_step - x) / t <= kkt_tol``.

    With ``acceleration`` the momentum is reset whenever the objective
    would increase, so accepted iterates are monotone in both variants.
    """
    x = [b.copy() for b in blocks0]
    combine = lambda bs: sum(sg * b for sg, b in zip(signs, bs))
    f_x, g_x = smooth(combine(x))
    big_f = f_x + penalty(x)
    history = [big_f]
    y, f_y, g_y = x, f_x, g_x
    tk = 1.0
    step = config.initial_step
    stall = 0
    converged = False
    tol = config.kkt_tol
    polish = None
    it = 0
    while it < config.max_iterations:
        it += 1
        if polish is not None:
            polish -= 1
            if polish < 0:
                break
        t = step
        while True:
            cand = [prox(yb - t * sg * g_y, t) for yb, sg, prox in zip(y, signs, proxes)]
            f_c, g_c = smooth(combine(cand))
            diff = [c - yb for c, yb in zip(cand, y)]
            lin = sum(sg * inner(g_y, dk) for sg, dk in zip(signs, diff))
            quad = sum(float(np.sum(dk * dk)) for dk in diff) / (2.0 * t)
            gap = f_c - f_y - lin
            if abs(gap) > ROUNDOFF * max(1.0, abs(f_y)):
                ok = gap <= quad
            else:
                # function values cannot resolve the step; test the local
                # Lipschitz constant on gradients instead
                ok = inner(g_c - g_y, combine(diff)) <= 2.0 * quad
            if ok:
                break
            t *= config.backtracking_factor
            if t < 1e-20:
                break
        big_c = f_c + penalty(cand)
        plain = y is x
        # objective differences below this are round-off
        floor = ROUNDOFF * max(1.0, abs(big_f))
        if big_c > big_f + floor and not plain:
            # momentum overshoot: restart from x with a plain step
            y, f_y, g_y, tk = x, f_x, g_x, 1.0
            continue
        moved = measure(diff) / t
        if plain and (moved <= tol or big_c > big_f + floor):
            if big_c <= big_f + floor:
                x, f_x, g_x, big_f = cand, f_c, g_c, big_c
                history.append(big_f)
            if moved <= tol and polish is None and it > 1:
                # converged; polish for a margin so that the returned point
                # passes the test again on a restart
                converged = True
                tol = config.kkt_tol * POLISH_FACTOR
                polish = POLISH_ITERATIONS
                y, f_y, g_y, tk = x, f_x, g_x, 1.0
                step = min(config.initial_step, t / config.backtracking_factor)
                continue
            # a plain step that raises the objective after a sufficient-decrease
            # line search means the gradient mapping is at round-off level
            converged = (converged or moved <= config.kkt_tol
                         or big_c - big_f <= 1e-10 * max(1.0, abs(big_f)))
            break
        rel = abs(big_f - big_c) / max(1.0, abs(big_f))
        stall = stall + 1 if rel <= config.rel_objective_tol else 0
        x_prev = x
        x, f_x, g_x, big_f = cand, f_c, g_c, big_c
        history.append(big_f)
        if stall >= STALL_LIMIT:
            converged = True
            break
        step = min(config.initial_step, t / config.backtracking_factor)
        # gradient restart: drop momentum once it points against the prox step
        if sum(inner(-dk, xb - pb) for dk, xb, pb in zip(diff, x, x_prev)) > 0:
            tk = 1.0
        if config.acceleration and not moved <= tol:
            tk_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            beta = (tk - 1.0) / tk_next
            tk = tk_next
            if beta > 0.0:
                y = [xb + beta * (xb - pb) for xb, pb in zip(x, x_prev)]
                f_y, g_y = smooth(combine(y))
            else:
                # zero momentum is a plain step from x
                y, f_y, g_y = x, f_x, g_x
        else:
            # a small step: check the fixed-point criterion with a plain step at x
            y, f_y, g_y, tk = x, f_x, g_x, 1.0
    return ProxGradOutput(x, big_f, it, converged, history)


def _nll_smooth(phi_n):
    return lambda theta: nll_value_and_gradient(theta, phi_n)


def solve_slr(phi_n, lambda_n, gamma, config=None, warm_start=None):
    """Proximal-gradient solution of the sparse + low-rank problem.

    Starts from ``(0, 0)`` unless ``warm_start`` is given. Returns the last
    accepted iterate with a KKT report; ``converged`` is False when the
    iteration budget ran out.
    """
    config = config or SolverConfig()
    phi_n = as_symmetric(phi_n, "phi_n")
    d = phi_n.shape[0]
    check_enumerable(d)
    if not lambda_n > 0 or not gamma > 0:
        raise ValueError("lambda_n and gamma must be > 0")
    start = warm_start or SparseLowRankPair.zeros(d)
    if start.dim != d:
        raise DimensionError("warm start dimension does not match phi_n")
    w = l1_weights(d, config.penalize_diagonal)
    s_thr = lambda_n * gamma * w

    def penalty(bs):
        return lambda_n * (gamma * float(np.sum(w * np.abs(bs[0]))) + float(np.trace(bs[1])))

    out = proximal_gradient(
        _nll_smooth(phi_n),
        [start.s, start.l],
        [1.0, 1.0],
        [lambda v, t: prox_l1(v, t * s_thr), lambda v, t: prox_psd_trace(v, t * lambda_n)],
        penalty,
        lambda bs: gamma_norm(bs[0], bs[1], gamma),
        config,
    )
    pair = SparseLowRankPair(out.blocks[0], out.blocks[1])
    report = verify_kkt(pair, lambda_n, gamma, phi_n, penalize_diagonal=config.penalize_diagonal)
    return SolverResult(pair, out.objective, out.iterations, out.converged, report,
                        lambda_n, gamma, out.history)


def support_mask(s, support_tol=None):
    """Entries with ``|S_ij| > support_tol`` (default ``1e-6 * max|S|``)."""
    top = max_norm(s)
    if top == 0.0:
        return np.zeros(s.shape, dtype=bool)
    tol = 1e-6 * top if support_tol is None else support_tol
    return np.abs(s) > tol


def range_basis(l, rank_tol=None):
    """Orthonormal eigenvectors of ``L`` with ``|eigenvalue| > rank_tol``.

    The default threshold is ``1e-6 * lambda_max(L)``.
    """
    w, q = np.linalg.eigh(l)
    top = float(np.max(np.abs(w))) if w.size else 0.0
    if top == 0.0:
        return q[:, :0]
    tol = 1e-6 * top if rank_tol is None else rank_tol
    keep = np.abs(w) > tol
    return q[:, keep]


def verify_kkt(pair, lambda_n, gamma, phi_n, rank_tol=None, support_tol=None,
               tol=1e-6, penalize_diagonal=True):
    """Subgradient certificate for ``pair`` as a solution.

    With ``G = grad l(S + L)``, ``Omega`` the thresholded support of ``S``
    and ``U`` the thresholded range of ``L``, reports

    * ``||P_Omega(-G) - lambda_n gamma sign(S)||_inf``
    * ``lambda_n gamma - ||P_Omega_perp(G)||_inf``
    * ``||P_T(-G) - lambda_n U U^T||``
    * ``lambda_n - ||P_T_perp(G)||``

    Empty ``Omega`` or ``T`` give a zero residual.
    """
    phi_n = as_symmetric(phi_n, "phi_n", dim=pair.dim)
    d = pair.dim
    g = expected_second_moment(pair.theta) - phi_n
    w = l1_weights(d, penalize_diagonal)
    thr = lambda_n * gamma * w

    on = support_mask(pair.s, support_tol)
    if on.any():
        omega_res = float(np.max(np.abs(-g[on] - thr[on] * np.sign(pair.s[on]))))
    else:
        omega_res = 0.0
    off = ~on
    if off.any():
        omega_slack = float(np.min(thr[off] - np.abs(g[off])))
    else:
        omega_slack = lambda_n * gamma

    u = range_basis(pair.l, rank_tol)
    pu = u @ u.T
    comp = np.eye(d) - pu
    g_perp = comp @ g @ comp
    g_tan = g - g_perp
    t_res = spectral_norm(-g_tan - lambda_n * pu) if u.shape[1] else 0.0
    t_slack = lambda_n - spectral_norm(g_perp)
    if u.shape[1] < d:
        w_all, q_all = np.linalg.eigh(pu)
        null = q_all[:, w_all < 0.5]
        psd_slack = lambda_n + float(np.linalg.eigvalsh(null.T @ g @ null)[0])
    else:
        psd_slack = lambda_n

    strict = omega_slack > 0 and t_slack > 0 and omega_res <= tol and t_res <= tol
    optimal = omega_res <= tol and t_res <= tol and omega_slack >= -tol and psd_slack >= -tol
    return KktReport(omega_res, omega_slack, t_res, t_slack, bool(strict), psd_slack,
                     bool(optimal), int(np.count_nonzero(on)), int(u.shape[1]), tol)


def zero_solution_threshold(phi_n, gamma):
    """Smallest ``lambda_n`` for which ``(0, 0)`` solves the problem.

    ``(0, 0)`` is optimal iff ``lambda_n gamma >= ||G0||_inf`` and
    ``lambda_n >= lambda_max(-G0)`` where ``G0 = Phi*(0) - Phi^n``.
    """
    phi_n = as_symmetric(phi_n, "phi_n")
    g0 = expected_second_moment(np.zeros_like(phi_n)) - phi_n
    return max(max_norm(g0) / gamma, float(np.linalg.eigvalsh(-g0)[-1]), 0.0)


def solve_path(phi_n, lambdas, gamma, config=None):
    """Warm-started solutions along a strictly decreasing ``lambda`` grid."""
    lambdas = [float(v) for v in lambdas]
    if not lambdas:
        raise ValueError("empty lambda grid")
    if any(v <= 0 for v in lambdas):
        raise ValueError("lambdas must be strictly positive")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly descending")
    results = []
    warm = None
    for lam in lambdas:
        res = solve_slr(phi_n, lam, gamma, config, warm_start=warm)
        results.append(res)
        warm = res.estimate
    return results


PATH_HEADER = ["lambda", "objective", "support_size", "rank", "omega_perp_slack",
               "t_perp_slack", "converged"]


def path_rows(results):
    rows = []
    for r in results:
        k = r.kkt_report
        rows.append([r.lambda_n, r.objective, k.support_size, k.rank,
                     k.omega_perp_slack, k.t_perp_slack, int(r.converged)])
    return rows
