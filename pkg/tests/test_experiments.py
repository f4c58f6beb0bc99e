import math

import numpy as np
import pytest

from latent_ising.exceptions import ConfigError
from latent_ising.experiments import (
    ExperimentConfig,
    RecoveryMetrics,
    auto_gamma,
    concentration_experiment,
    consistency_sweep,
    generate_truth,
    lambda_schedule,
    loglog_slope,
    recovery_metrics,
    run_single,
    xi_hat,
)


def small_config(**kw):
    base = dict(d=5, l=1, n_grid=[500], seeds=[0, 1], support_density=0.3)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_defaults_roundtrip(self):
        cfg = ExperimentConfig()
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
        assert cfg.d == 10 and cfg.l == 1 and cfg.n_grid == [1000, 10000, 100000]

    @pytest.mark.parametrize("field,value", [
        ("d", 1), ("d", 21), ("l", 0), ("n_grid", []), ("support_density", 1.5),
        ("s_magnitude_range", [0.5, 0.1]), ("gamma", "fast"), ("gamma", -1.0), ("nu", 0.6),
        ("seeds", []), ("kappa", 0.0),
    ])
    def test_invalid(self, field, value):
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_dict({field: value})
        assert str(exc.value).startswith(field)

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"dd": 3})

    def test_nested_solver(self):
        cfg = ExperimentConfig.from_dict({"solver": {"kkt_tol": 1e-8}})
        assert cfg.solver.kkt_tol == 1e-8


class TestTruth:
    def test_structure(self):
        t = generate_truth(small_config(), seed=3)
        assert np.all(np.diag(t.s_star) == 0) and np.allclose(t.s_star, t.s_star.T)
        nz = np.abs(t.s_star[t.s_star != 0])
        assert nz.min() >= 0.4 and nz.max() <= 0.6
        assert np.allclose(t.l_star, 0.5 * t.model.r.T @ t.model.r)
        assert np.linalg.matrix_rank(t.l_star) == 1

    def test_reproducible(self):
        a, b = generate_truth(small_config(), 4), generate_truth(small_config(), 4)
        assert np.array_equal(a.s_star, b.s_star) and np.array_equal(a.l_star, b.l_star)

    def test_degenerate(self):
        t = generate_truth(small_config(support_density=0.0))
        assert t.degenerate and np.all(t.s_star == 0)
        t = generate_truth(small_config(support_density=1e-9))
        assert t.degenerate and np.count_nonzero(t.s_star) == 2

    def test_zero_latent_coupling(self):
        t = generate_truth(small_config(r_scale=0.0))
        assert np.all(t.l_star == 0) and xi_hat(t.l_star) == 1.0


class TestSchedule:
    def test_formula(self):
        cfg = small_config(c2_scale=2.0, kappa=3.0)
        assert lambda_schedule(cfg, 100, 0.5) == pytest.approx(2.0 / 0.5 * math.sqrt(3 * 5 * math.log(5) / 100))

    def test_rate(self):
        cfg = small_config()
        assert lambda_schedule(cfg, 400, 1.0) / lambda_schedule(cfg, 100, 1.0) == pytest.approx(0.5)

    def test_xi_hat(self):
        assert xi_hat(np.ones((4, 4)) / 4) == pytest.approx(1.0)
        assert xi_hat(np.ones((16, 16)) / 16) == pytest.approx(0.5)


class TestMetrics:
    def test_perfect(self):
        t = generate_truth(small_config(), 1)
        m = recovery_metrics(t.s_star, t.l_star, t, 0.3, 0.05, 0.05)
        assert m.recovered and m.support_precision == 1 and m.support_recall == 1
        assert m.gamma_norm_error == 0 and m.spectral_error_compound == 0

    def test_sign_flip(self):
        t = generate_truth(small_config(), 1)
        m = recovery_metrics(-t.s_star, t.l_star, t, 0.3, 0.05, 0.05)
        assert not m.sign_consistent and m.support_recall == 1

    def test_rank_mismatch(self):
        t = generate_truth(small_config(), 1)
        m = recovery_metrics(t.s_star, np.eye(5), t, 0.3, 0.05, 0.05)
        assert m.rank_est == 5 and not m.rank_match and not m.recovered

    def test_gamma_norm(self):
        t = generate_truth(small_config(), 1)
        s = t.s_star.copy()
        s[0, 1] += 0.03
        s[1, 0] += 0.03
        m = recovery_metrics(s, t.l_star, t, 0.3, 0.05, 0.05)
        assert m.gamma_norm_error == pytest.approx(0.1)


class TestRunSingle:
    def test_population_limit_recovers(self):
        cfg = small_config()
        m, diag = run_single(cfg, 0, n=10 ** 6, population=True)
        assert diag["converged"] and m.recovered

    def test_deterministic(self):
        cfg = small_config()
        a = run_single(cfg, 3)[1]
        b = run_single(cfg, 3)[1]
        assert a == b

    def test_auto_gamma(self):
        cfg = small_config(gamma="auto")
        g, gr = auto_gamma(cfg, generate_truth(cfg))
        if gr is not None and gr.feasible:
            assert gr.gamma_min <= g <= gr.gamma_max
        else:
            assert g == 1.0


class TestSweep:
    def test_grid_precondition(self):
        with pytest.raises(ConfigError):
            consistency_sweep(small_config(n_grid=[100, 1000]))
        with pytest.raises(ConfigError):
            consistency_sweep(small_config(n_grid=[100, 200, 400]))

    def test_single_size(self):
        res = consistency_sweep(small_config())
        assert res.slope is None and len(res.rows) == 2 and len(res.aggregates) == 1
        assert 0.0 <= res.recovery_rate(500) <= 1.0
        with pytest.raises(KeyError):
            res.recovery_rate(7)

    def test_error_decreases(self):
        res = consistency_sweep(small_config(n_grid=[300, 3000, 30000], seeds=[0, 1, 2]))
        errs = [a[2] for a in res.aggregates]
        assert errs[0] > errs[-1] and res.slope < 0


class TestConcentration:
    def test_slope_and_rows(self):
        res = concentration_experiment(np.zeros((4, 4)), [100, 1000, 10000], 20, seed=0)
        assert [r[0] for r in res.rows] == [100, 1000, 10000]
        assert all(r[3] >= r[2] for r in res.rows)
        assert -0.7 < res.slope < -0.3
        assert len(res.raw) == 60

    def test_single_trial(self):
        res = concentration_experiment(np.zeros((3, 3)), [50], 1)
        assert res.rows[0][2] == res.rows[0][3] == res.raw[0][2] and res.slope is None

    def test_invalid_trials(self):
        with pytest.raises(ValueError):
            concentration_experiment(np.zeros((3, 3)), [50], 0)

    def test_loglog_slope(self):
        assert loglog_slope([10, 100, 1000], [1, 0.1, 0.01]) == pytest.approx(-1.0)
