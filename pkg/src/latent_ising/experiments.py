"""Synthetic recovery experiments and the gradient concentration experiment.

A sweep fixes one ground-truth model (``truth_seed``) and, for every sample
size ``n`` and data seed, draws ``n`` exact samples, fits the sparse +
low-rank estimator with the schedule

    lambda_n = c2_scale / xi_hat * sqrt(kappa * d * log(d) / n)

(``xi_hat = min(1, 2 coh(U*))``) and records recovery metrics. Every random
draw uses a generator seeded from ``(seed, n)`` so results do not depend on
execution order.
"""

import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple, Union

import numpy as np

from .exceptions import ConfigError
from .geometry import (
    TangentPair,
    coherence,
    gamma_range,
    lowrank_tangent,
    mu_omega,
    sparse_tangent,
    stability_estimates,
    xi_t,
)
from .ising import ENUMERATION_CAP, empirical_second_moment, expected_second_moment, hessian_matrix
from .latent import LatentCGModel, marginal_interaction
from .matrices import spectral_norm
from .sampling import exact_sample
from .solver import SolverConfig, gamma_norm, range_basis, solve_slr

SWEEP_HEADER = ["n", "seed", "lambda", "gamma", "precision", "recall", "sign_ok", "rank_true",
                "rank_est", "gnorm_err", "kkt_ok"]
TRUTH_RANK_TOL = 1e-9
AGGREGATE_HEADER = ["n", "trials", "median_gnorm_err", "recovery_rate", "median_lambda"]
CONCENTRATION_HEADER = ["n", "trials", "median_error", "p90_error"]


@dataclass
class ExperimentConfig:
    d: int = 10
    l: int = 1
    n_grid: List[int] = field(default_factory=lambda: [1000, 10000, 100000])
    support_density: float = 0.1
    s_magnitude_range: Tuple[float, float] = (0.4, 0.6)
    r_scale: float = 0.5
    c2_scale: float = 0.5
    kappa: float = 1.0
    gamma: Union[float, str] = 0.3
    seeds: List[int] = field(default_factory=lambda: list(range(10)))
    truth_seed: int = 0
    nu: float = 0.5
    solver: SolverConfig = field(default_factory=SolverConfig)
    support_tol: float = 0.05
    rank_tol: float = 0.05

    def __post_init__(self):
        if not isinstance(self.solver, SolverConfig):
            self.solver = SolverConfig.from_dict(dict(self.solver))
        self.n_grid = [int(n) for n in self.n_grid]
        self.seeds = [int(s) for s in self.seeds]
        self.s_magnitude_range = tuple(float(v) for v in self.s_magnitude_range)
        if not 2 <= self.d <= ENUMERATION_CAP:
            raise ConfigError("d", f"must lie in [2, {ENUMERATION_CAP}]")
        if self.l < 1:
            raise ConfigError("l", "must be >= 1")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid", "must be a non-empty list of positive sizes")
        if not 0 <= self.support_density <= 1:
            raise ConfigError("support_density", "must lie in [0, 1]")
        lo, hi = self.s_magnitude_range if len(self.s_magnitude_range) == 2 else (0, -1)
        if not 0 < lo <= hi:
            raise ConfigError("s_magnitude_range", "must be (lo, hi) with 0 < lo <= hi")
        if self.r_scale < 0:
            raise ConfigError("r_scale", "must be >= 0")
        for name in ("c2_scale", "kappa", "support_tol", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be > 0")
        if isinstance(self.gamma, str):
            if self.gamma != "auto":
                raise ConfigError("gamma", "must be a positive number or 'auto'")
        elif not self.gamma > 0:
            raise ConfigError("gamma", "must be > 0")
        if not 0 < self.nu <= 0.5:
            raise ConfigError("nu", "must lie in (0, 1/2]")
        if not self.seeds:
            raise ConfigError("seeds", "must be non-empty")

    def to_dict(self):
        out = asdict(self)
        out["s_magnitude_range"] = list(self.s_magnitude_range)
        out["solver"] = self.solver.to_dict()
        return out

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown experiment option")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("config", str(exc)) from None


@dataclass
class Truth:
    s_star: np.ndarray
    model: LatentCGModel
    l_star: np.ndarray
    degenerate: bool = False
    note: str = ""

    @property
    def theta(self):
        return self.s_star + self.l_star


@dataclass
class RecoveryMetrics:
    support_precision: float
    support_recall: float
    sign_consistent: bool
    rank_true: int
    rank_est: int
    rank_match: bool
    gamma_norm_error: float
    spectral_error_compound: float

    @property
    def recovered(self):
        return self.sign_consistent and self.rank_match


def generate_truth(config, seed=None):
    """Ground truth ``(S*, model, L*)`` drawn deterministically from ``seed``.

    Off-diagonal pairs enter the support independently with probability
    ``support_density``, with magnitudes uniform on ``[lo, hi]`` and random
    signs; ``S*`` has a zero diagonal. ``R`` is Gaussian times ``r_scale``
    and ``Lambda = I``, so ``L* = R^T R / 2``. A positive density that
    produces no edge gets one random edge and is flagged degenerate; a zero
    density gives ``S* = 0``, also flagged.
    """
    seed = config.truth_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    d = config.d
    lo, hi = config.s_magnitude_range
    iu, ju = np.triu_indices(d, 1)
    on = rng.random(iu.size) < config.support_density
    mags = rng.uniform(lo, hi, size=iu.size) * rng.choice([-1.0, 1.0], size=iu.size)
    degenerate, note = False, ""
    if not on.any():
        degenerate = True
        if config.support_density > 0:
            on[rng.integers(iu.size)] = True
            note = "empty support redrawn with one edge"
        else:
            note = "zero support density: S* = 0"
    s = np.zeros((d, d))
    s[iu[on], ju[on]] = mags[on]
    s = s + s.T
    r = config.r_scale * rng.normal(size=(config.l, d))
    model = LatentCGModel(s, r, np.eye(config.l))
    return Truth(s, model, marginal_interaction(model), degenerate, note)


def xi_hat(l_star):
    """``min(1, 2 coh)`` of the range of ``L*``; 1 when ``L* = 0``."""
    basis = lowrank_tangent(l_star, TRUTH_RANK_TOL)
    return min(1.0, 2.0 * coherence(basis)) if basis.rank else 1.0


def lambda_schedule(config, n, xi):
    d = config.d
    return config.c2_scale / xi * math.sqrt(config.kappa * d * math.log(d) / n)


def auto_gamma(config, truth, seed=0):
    """Geometric mean of the heuristic gamma-range at the truth, else 1."""
    pair = TangentPair(sparse_tangent(truth.s_star), lowrank_tangent(truth.l_star, TRUTH_RANK_TOL))
    est = stability_estimates(hessian_matrix(truth.theta), pair, sample_count=8, restarts=4,
                              seed=seed, l_star=truth.l_star)
    mu = mu_omega(pair.omega).upper
    xi = xi_t(pair.t_basis).upper
    alpha, beta = est.alpha, est.beta
    if not (math.isfinite(alpha) and alpha > 0 and beta > 0 and mu > 0):
        return 1.0, None
    gr = gamma_range(alpha, beta, config.nu, xi, mu)
    if gr.feasible and gr.gamma_min > 0 and math.isfinite(gr.gamma_max):
        return math.sqrt(gr.gamma_min * gr.gamma_max), gr
    return 1.0, gr


def recovery_metrics(s_hat, l_hat, truth, gamma, support_tol, rank_tol):
    """Support and sign agreement on off-diagonal pairs, rank and gamma-norm error.

    ``rank_tol`` is absolute: eigenvalues of ``L`` above it count.
    """
    iu, ju = np.triu_indices(s_hat.shape[0], 1)
    true_on = np.abs(truth.s_star[iu, ju]) > 0
    est_on = np.abs(s_hat[iu, ju]) > support_tol
    hits = int(np.sum(true_on & est_on))
    precision = hits / est_on.sum() if est_on.any() else 1.0
    recall = hits / true_on.sum() if true_on.any() else 1.0
    signs = np.sign(s_hat[iu, ju][true_on]) == np.sign(truth.s_star[iu, ju][true_on])
    sign_ok = bool(np.array_equal(true_on, est_on) and np.all(signs))
    rank_true = int(range_basis(truth.l_star, rank_tol).shape[1])
    rank_est = int(range_basis(l_hat, rank_tol).shape[1])
    return RecoveryMetrics(
        float(precision), float(recall), sign_ok, rank_true, rank_est, rank_true == rank_est,
        gamma_norm(s_hat - truth.s_star, l_hat - truth.l_star, gamma),
        spectral_norm(s_hat + l_hat - truth.theta),
    )


def run_single(config, seed, n=None, truth=None, gamma=None, population=False):
    """Sample, fit and score one trial.

    ``population=True`` replaces the sample moments by the exact ``Phi*``
    (the infinite-sample limit) while keeping the ``lambda_n`` of size
    ``n``. Returns ``(metrics, diagnostics)``.
    """
    truth = truth or generate_truth(config)
    n = config.n_grid[-1] if n is None else int(n)
    if gamma is None:
        gamma = auto_gamma(config, truth, seed)[0] if config.gamma == "auto" else float(config.gamma)
    xi = xi_hat(truth.l_star)
    lam = lambda_schedule(config, n, xi)
    if population:
        phi_n = expected_second_moment(truth.theta)
    else:
        data = exact_sample(truth.theta, n, seed=np.random.default_rng([seed, n]))
        phi_n = empirical_second_moment(data)
    res = solve_slr(phi_n, lam, gamma, config.solver)
    m = recovery_metrics(res.estimate.s, res.estimate.l, truth, gamma,
                         config.support_tol, config.rank_tol)
    diag = {
        "n": n,
        "seed": seed,
        "lambda_n": lam,
        "gamma": gamma,
        "xi_hat": xi,
        "population": population,
        "converged": res.converged,
        "iterations": res.iterations,
        "objective": res.objective,
        "kkt": res.kkt_report.to_dict(),
        "metrics": asdict(m),
        "truth_degenerate": truth.degenerate,
        "truth_note": truth.note,
        "thresholds": {"support_tol": config.support_tol, "rank_tol": config.rank_tol},
    }
    return m, diag


def loglog_slope(ns, values):
    """Least-squares slope of ``log(value)`` against ``log(n)``."""
    x = np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(np.asarray(values, dtype=np.float64))
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class SweepResult:
    rows: list
    aggregates: list
    slope: Optional[float]
    gamma: float
    truth: Truth = field(repr=False)

    def recovery_rate(self, n):
        for row in self.aggregates:
            if row[0] == n:
                return row[3]
        raise KeyError(n)


def consistency_sweep(config):
    """Metrics per ``(n, seed)``, medians per ``n`` and the error slope.

    A grid of several sizes needs at least 3 points spanning 2 decades.
    """
    grid = sorted(set(config.n_grid))
    if len(grid) > 1 and (len(grid) < 3 or grid[-1] / grid[0] < 100):
        raise ConfigError("n_grid", "needs at least 3 sizes spanning at least two decades")
    truth = generate_truth(config)
    gamma = auto_gamma(config, truth)[0] if config.gamma == "auto" else float(config.gamma)
    rows = []
    for n in grid:
        for seed in sorted(config.seeds):
            m, diag = run_single(config, seed, n, truth=truth, gamma=gamma)
            rows.append([n, seed, diag["lambda_n"], gamma, m.support_precision, m.support_recall,
                         m.sign_consistent, m.rank_true, m.rank_est, m.gamma_norm_error,
                         diag["kkt"]["optimal"]])
    aggregates = []
    for n in grid:
        sub = [r for r in rows if r[0] == n]
        errs = [r[9] for r in sub]
        rec = [bool(r[6]) and r[7] == r[8] for r in sub]
        aggregates.append([n, len(sub), float(np.median(errs)), float(np.mean(rec)),
                           float(np.median([r[2] for r in sub]))])
    slope = loglog_slope([a[0] for a in aggregates], [a[2] for a in aggregates]) if len(grid) > 1 else None
    return SweepResult(rows, aggregates, slope, gamma, truth)


@dataclass
class ConcentrationResult:
    rows: list
    raw: list
    slope: Optional[float]


def concentration_experiment(theta, n_grid, trials, seed=0):
    """Spread of ``||Phi^n - Phi*||`` over independent exact-sample datasets.

    Per ``n``: median and 90th percentile over ``trials`` (with one trial
    both equal the raw value) and the log-log slope of the medians.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = sorted({int(n) for n in n_grid})
    phi_star = expected_second_moment(theta)
    rows, raw = [], []
    for n in grid:
        errs = []
        for t in range(trials):
            data = exact_sample(theta, n, seed=np.random.default_rng([seed, n, t]))
            errs.append(spectral_norm(empirical_second_moment(data) - phi_star))
            raw.append([n, t, errs[-1]])
        if trials == 1:
            med = p90 = errs[0]
        else:
            med, p90 = float(np.median(errs)), float(np.percentile(errs, 90))
        rows.append([n, trials, med, p90])
    slope = loglog_slope([r[0] for r in rows], [r[2] for r in rows]) if len(grid) > 1 else None
    return ConcentrationResult(rows, raw, slope)
