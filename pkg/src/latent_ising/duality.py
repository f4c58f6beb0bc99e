"""Maximum-entropy duality for second-moment constraints on {0,1}^d.

The relaxed maximum-entropy problem

    max_p H(p)  s.t.  ||E_p[Phi] - Phi^n||_inf <= c,  ||E_p[Phi] - Phi^n|| <= lambda

has the dual, written with the positive log-likelihood ``l+ = -l``,

    max_{S, L1 >= 0, L2 >= 0}  l+(S + L1 - L2) - c ||S||_1 - lambda tr(L1 + L2),

and the optimal ``p`` is the Ising model with ``Theta = S + L1 - L2``.
Internally the equivalent minimisation of ``l(Theta) + c ||S||_1 +
lambda tr(L1 + L2)`` is solved; reported dual objectives use the max form
above, so strong duality reads ``H(p*) = -g*``.

For the model ``p_Theta`` one has the exact identity

    H(p_Theta) = -g(S, L1, L2) - correction,
    correction = <Theta, E - Phi^n> + c ||S||_1 + lambda tr(L1 + L2),

and ``correction`` splits into complementary-slackness products (one per
constraint), each non-negative whenever ``p_Theta`` is feasible.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import DimensionError
from .ising import (
    ENUMERATION_CAP,
    all_states,
    check_enumerable,
    nll_value_and_gradient,
    state_probs,
)
from .matrices import as_symmetric, inner, is_psd, max_norm, spectral_norm
from .solver import (
    SolverConfig,
    l1_weights,
    prox_l1,
    prox_psd_trace,
    proximal_gradient,
    range_basis,
    support_mask,
)

PRIMAL_ORACLE_CAP = 6


@dataclass
class DiscreteDistribution:
    """Probabilities of all ``2**dim`` states, indexed by packed state."""

    dim: int
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.shape != (1 << self.dim,):
            raise DimensionError(f"expected {1 << self.dim} probabilities, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {p.sum():.12g}, not 1")
        self.probabilities = p

    @classmethod
    def uniform(cls, d):
        return cls(d, np.full(1 << d, 1.0 / (1 << d)))

    def second_moment(self):
        """``E_p[x x^T]``."""
        x = all_states(self.dim)
        m = (x * self.probabilities[:, None]).T @ x
        return 0.5 * (m + m.T)


@dataclass
class TwoSidedDualSolution:
    s: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    c: float = float("nan")
    lam: float = float("nan")
    objective: float = float("nan")
    iterations: int = 0
    converged: bool = False

    def __post_init__(self):
        self.s = as_symmetric(self.s, "S")
        d = self.s.shape[0]
        self.l1 = as_symmetric(self.l1, "L1", dim=d)
        self.l2 = as_symmetric(self.l2, "L2", dim=d)
        if not is_psd(self.l1) or not is_psd(self.l2):
            raise ValueError("L1 and L2 must be positive semidefinite")

    @property
    def dim(self):
        return self.s.shape[0]

    @property
    def theta(self):
        return self.s + self.l1 - self.l2


def primal_from_dual(theta):
    """The Ising distribution ``p(x) = exp(<Theta, x x^T> - a(Theta))``."""
    theta = as_symmetric(theta, "theta")
    check_enumerable(theta.shape[0])
    p = state_probs(theta)
    return DiscreteDistribution(theta.shape[0], p / p.sum())


def entropy(p):
    """Shannon entropy in nats with ``0 log 0 = 0``."""
    q = p.probabilities
    nz = q[q > 0]
    return float(-np.sum(nz * np.log(nz)))


class ConstraintResiduals(NamedTuple):
    inf_violation: float
    spectral_violation: float
    one_sided_violation: float


def constraint_residuals(p, phi_n, c, lam):
    """Violations ``max(0, lhs - rhs)`` of the relaxed moment constraints."""
    phi_n = as_symmetric(phi_n, "phi_n", dim=p.dim)
    diff = p.second_moment() - phi_n
    return ConstraintResiduals(
        max(0.0, max_norm(diff) - c),
        max(0.0, spectral_norm(diff) - lam),
        max(0.0, float(np.linalg.eigvalsh(-diff)[-1]) - lam),
    )


def dual_objective(sol_or_blocks, phi_n, c, lam, penalize_diagonal=True):
    """Max-form value ``l+(S + L1 - L2) - c ||S||_1 - lambda tr(L1 + L2)``."""
    s, l1, l2 = _blocks(sol_or_blocks)
    phi_n = as_symmetric(phi_n, "phi_n", dim=s.shape[0])
    f, _ = nll_value_and_gradient(s + l1 - l2, phi_n)
    w = l1_weights(s.shape[0], penalize_diagonal)
    return -f - c * float(np.sum(w * np.abs(s))) - lam * float(np.trace(l1) + np.trace(l2))


def _blocks(x):
    if isinstance(x, TwoSidedDualSolution):
        return x.s, x.l1, x.l2
    s, l1, l2 = x
    return s, l1, l2


def _solve_dual(phi_n, c, lam, config, one_sided):
    config = config or SolverConfig()
    phi_n = as_symmetric(phi_n, "phi_n")
    d = phi_n.shape[0]
    check_enumerable(d)
    if not c > 0 or not lam > 0:
        raise ValueError("c and lambda must be > 0")
    w = l1_weights(d, config.penalize_diagonal)
    s_thr = c * w
    zero = np.zeros((d, d))

    def smooth(theta):
        return nll_value_and_gradient(theta, phi_n)

    def penalty(bs):
        return c * float(np.sum(w * np.abs(bs[0]))) + lam * float(np.trace(bs[1]) + np.trace(bs[2]))

    l2_prox = (lambda v, t: zero) if one_sided else (lambda v, t: prox_psd_trace(v, t * lam))
    out = proximal_gradient(
        smooth,
        [zero, zero, zero],
        [1.0, 1.0, -1.0],
        [lambda v, t: prox_l1(v, t * s_thr), lambda v, t: prox_psd_trace(v, t * lam), l2_prox],
        penalty,
        lambda bs: max(max_norm(bs[0]) * lam / c, spectral_norm(bs[1]), spectral_norm(bs[2])),
        config,
    )
    s, l1, l2 = out.blocks
    return TwoSidedDualSolution(s, l1, l2, c, lam, -out.objective, out.iterations, out.converged)


def solve_two_sided_dual(phi_n, c, lam, config=None):
    """Three-block proximal gradient on ``(S, L1, L2)``.

    All blocks share ``G = grad l(S + L1 - L2)`` with signs ``+, +, -``.
    ``objective`` holds the max-form dual value.
    """
    return _solve_dual(phi_n, c, lam, config, one_sided=False)


def solve_one_sided_dual(phi_n, c, lam, config=None):
    """Dual of the problem with only ``Phi^n - E[Phi] <= lambda I``: ``L2`` is fixed at 0."""
    return _solve_dual(phi_n, c, lam, config, one_sided=True)


@dataclass
class DualKkt:
    """Optimality residuals of a dual point, generalising the two-block certificate."""

    s_residual: float
    s_slack: float
    l1_residual: float
    l1_psd_slack: float
    l2_residual: float
    l2_psd_slack: float
    optimal: bool


def _psd_block_kkt(l, g, lam):
    """Residual of ``P_T(-g) = lam U U^T`` and ``lam + lambda_min`` of ``g`` on null(l)."""
    d = g.shape[0]
    u = range_basis(l)
    pu = u @ u.T
    if u.shape[1]:
        comp = np.eye(d) - pu
        res = spectral_norm(-(g - comp @ g @ comp) - lam * pu)
    else:
        res = 0.0
    if u.shape[1] < d:
        w, q = np.linalg.eigh(pu)
        null = q[:, w < 0.5]
        slack = lam + float(np.linalg.eigvalsh(null.T @ g @ null)[0])
    else:
        slack = lam
    return res, slack


def dual_kkt(sol, phi_n, tol=1e-6, penalize_diagonal=True):
    phi_n = as_symmetric(phi_n, "phi_n", dim=sol.dim)
    _, g = nll_value_and_gradient(sol.theta, phi_n)
    thr = sol.c * l1_weights(sol.dim, penalize_diagonal)
    on = support_mask(sol.s)
    s_res = float(np.max(np.abs(-g[on] - thr[on] * np.sign(sol.s[on])))) if on.any() else 0.0
    s_slack = float(np.min(thr[~on] - np.abs(g[~on]))) if (~on).any() else float(sol.c)
    r1, k1 = _psd_block_kkt(sol.l1, g, sol.lam)
    r2, k2 = _psd_block_kkt(sol.l2, -g, sol.lam)
    ok = max(s_res, r1, r2) <= tol and min(s_slack, k1, k2) >= -tol
    return DualKkt(s_res, s_slack, r1, k1, r2, k2, bool(ok))


def slackness_terms(sol_or_blocks, phi_n, c, lam, penalize_diagonal=True):
    """Complementary-slackness products, each zero at a primal-dual optimum.

    Returns ``(s_terms, l1_term, l2_term)`` where ``s_terms`` is the
    per-entry matrix ``S+ (c + D) + S- (c - D)`` with ``D = E_p[Phi] - Phi^n``,
    ``l1_term = <L1, lambda I - (Phi^n - E_p[Phi])>`` and
    ``l2_term = <L2, lambda I - (E_p[Phi] - Phi^n)>``.
    """
    s, l1, l2 = _blocks(sol_or_blocks)
    d = s.shape[0]
    p = primal_from_dual(s + l1 - l2)
    diff = p.second_moment() - as_symmetric(phi_n, "phi_n", dim=d)
    cw = c * l1_weights(d, penalize_diagonal)
    s_terms = np.maximum(s, 0.0) * (cw + diff) + np.maximum(-s, 0.0) * (cw - diff)
    eye = lam * np.eye(d)
    return s_terms, inner(l1, eye + diff), inner(l2, eye - diff)


def duality_report(dual, phi_n, c, lam, tol=1e-6, penalize_diagonal=True):
    """Gap, feasibility and slackness of ``dual`` as a JSON-ready dict.

    ``gap = |H(p) + g|`` with ``g`` the max-form dual objective (strong
    duality: ``H(p*) = -g*``). ``correction`` is the exact difference
    ``-g - H(p)``, equal to the sum of the slackness terms.
    """
    phi_n = as_symmetric(phi_n, "phi_n", dim=dual.dim)
    p = primal_from_dual(dual.theta)
    h = entropy(p)
    g = dual_objective(dual, phi_n, c, lam, penalize_diagonal)
    res = constraint_residuals(p, phi_n, c, lam)
    s_terms, t1, t2 = slackness_terms(dual, phi_n, c, lam, penalize_diagonal)
    kkt = dual_kkt(dual, phi_n, tol, penalize_diagonal)
    return {
        "dim": dual.dim,
        "c": float(c),
        "lambda": float(lam),
        "dual_objective": g,
        "primal_entropy": h,
        "gap": abs(h + g),
        "correction": -g - h,
        "constraint_residuals": res._asdict(),
        "slackness": {
            "s_max": float(np.max(np.abs(s_terms))),
            "s_sum": float(np.sum(s_terms)),
            "l1": t1,
            "l2": t2,
        },
        "kkt": {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                for k, v in vars(kkt).items()},
        "converged": bool(dual.converged),
        "iterations": int(dual.iterations),
        "l1_rank": int(range_basis(dual.l1).shape[1]),
        "l2_rank": int(range_basis(dual.l2).shape[1]),
    }


def solve_primal_maxent(phi_n, c, lam, one_sided=False):
    """Direct maximum-entropy solve over the simplex (``d <= 6``), for cross-checks.

    Needs the optional ``cvxpy`` dependency. Returns ``(p, H(p))``.
    """
    import cvxpy as cp

    phi_n = as_symmetric(phi_n, "phi_n")
    d = phi_n.shape[0]
    if d > PRIMAL_ORACLE_CAP:
        raise ValueError(f"primal oracle limited to d <= {PRIMAL_ORACLE_CAP}")
    x = all_states(d)
    feats = np.einsum("ki,kj->kij", x, x).reshape(x.shape[0], d * d)
    p = cp.Variable(x.shape[0], nonneg=True)
    moment = cp.reshape(feats.T @ p, (d, d), order="C")
    diff = moment - phi_n
    sym = 0.5 * (diff + diff.T)
    cons = [cp.sum(p) == 1, cp.abs(diff) <= c, lam * np.eye(d) + sym >> 0]
    if not one_sided:
        cons.append(lam * np.eye(d) - sym >> 0)
    prob = cp.Problem(cp.Maximize(cp.sum(cp.entr(p))), cons)
    prob.solve(solver=cp.CLARABEL)
    q = np.clip(np.asarray(p.value, dtype=np.float64), 0.0, None)
    dist = DiscreteDistribution(d, q / q.sum())
    return dist, float(prob.value)


__all__ = [
    "ENUMERATION_CAP",
    "ConstraintResiduals",
    "DiscreteDistribution",
    "DualKkt",
    "TwoSidedDualSolution",
    "constraint_residuals",
    "dual_kkt",
    "dual_objective",
    "duality_report",
    "entropy",
    "primal_from_dual",
    "slackness_terms",
    "solve_one_sided_dual",
    "solve_primal_maxent",
    "solve_two_sided_dual",
]
