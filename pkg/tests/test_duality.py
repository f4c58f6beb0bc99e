import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_theta
from latent_ising.duality import (
    DiscreteDistribution,
    TwoSidedDualSolution,
    constraint_residuals,
    dual_kkt,
    dual_objective,
    duality_report,
    entropy,
    primal_from_dual,
    slackness_terms,
    solve_one_sided_dual,
    solve_primal_maxent,
    solve_two_sided_dual,
)
from latent_ising.exceptions import DimensionError
from latent_ising.ising import empirical_second_moment, expected_second_moment
from latent_ising.sampling import exact_sample
from latent_ising.solver import solve_slr


def random_moments(seed, d=3, n=300):
    rng = np.random.default_rng(seed)
    return empirical_second_moment(exact_sample(random_theta(rng, d, 0.6), n, seed=seed))


def random_psd(rng, d, scale=0.3):
    b = rng.normal(scale=scale, size=(d, d))
    return b @ b.T


class TestDistribution:
    def test_uniform_entropy(self):
        assert entropy(DiscreteDistribution.uniform(3)) == pytest.approx(3 * math.log(2))

    def test_point_mass_entropy(self):
        p = np.zeros(4)
        p[2] = 1.0
        assert entropy(DiscreteDistribution(2, p)) == 0.0

    def test_validation(self):
        with pytest.raises(DimensionError):
            DiscreteDistribution(2, np.ones(3) / 3)
        with pytest.raises(ValueError):
            DiscreteDistribution(1, [1.5, -0.5])
        with pytest.raises(ValueError):
            DiscreteDistribution(1, [0.5, 0.6])

    def test_second_moment(self, rng):
        th = random_theta(rng, 4)
        assert np.allclose(primal_from_dual(th).second_moment(), expected_second_moment(th), atol=1e-14)

    def test_entropy_of_ising(self, rng):
        # H(p_Theta) = a(Theta) - <Theta, E[Phi]>
        from latent_ising.ising import log_partition
        from latent_ising.matrices import inner
        th = random_theta(rng, 4)
        h = entropy(primal_from_dual(th))
        assert h == pytest.approx(log_partition(th) - inner(th, expected_second_moment(th)), rel=1e-12)


class TestUniformInstance:
    def test_zero_dual(self):
        d = 3
        phi = DiscreteDistribution.uniform(d).second_moment()
        sol = solve_two_sided_dual(phi, 0.1, 0.1)
        assert sol.converged
        assert np.abs(sol.theta).max() < 1e-12
        rep = duality_report(sol, phi, 0.1, 0.1)
        assert rep["dual_objective"] == pytest.approx(-d * math.log(2), abs=1e-12)
        assert rep["primal_entropy"] == pytest.approx(d * math.log(2), abs=1e-12)
        assert rep["gap"] <= 1e-12


class TestIdentities:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10 ** 6), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
    def test_correction_is_slackness_sum(self, seed, c, lam):
        rng = np.random.default_rng(seed)
        phi = random_moments(seed % 50)
        sol = TwoSidedDualSolution(random_theta(rng, 3), random_psd(rng, 3), random_psd(rng, 3), c, lam)
        rep = duality_report(sol, phi, c, lam)
        s_terms, t1, t2 = slackness_terms(sol, phi, c, lam)
        assert rep["correction"] == pytest.approx(np.sum(s_terms) + t1 + t2, abs=1e-10)

    def test_weak_duality(self, rng):
        # any dual point bounds the entropy of any feasible distribution
        phi = random_moments(1)
        c, lam = 0.05, 0.05
        p, h = solve_primal_maxent(phi, c, lam)
        for _ in range(10):
            blocks = (random_theta(rng, 3), random_psd(rng, 3), random_psd(rng, 3))
            assert h <= -dual_objective(blocks, phi, c, lam) + 1e-7


class TestSolve:
    def test_validation(self):
        with pytest.raises(ValueError):
            solve_two_sided_dual(np.eye(2) * 0.5, 0.0, 0.1)

    @pytest.mark.parametrize("seed", range(4))
    def test_gap_and_slackness(self, seed):
        phi = random_moments(seed)
        c, lam = 0.05, 0.08
        sol = solve_two_sided_dual(phi, c, lam)
        rep = duality_report(sol, phi, c, lam)
        assert sol.converged and rep["kkt"]["optimal"]
        assert rep["gap"] <= 1e-6
        sl = rep["slackness"]
        assert max(sl["s_max"], abs(sl["l1"]), abs(sl["l2"])) <= 1e-5
        assert max(rep["constraint_residuals"].values()) <= 1e-6

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_primal_oracle(self, seed):
        phi = random_moments(seed)
        c, lam = 0.05, 0.08
        sol = solve_two_sided_dual(phi, c, lam)
        p, h = solve_primal_maxent(phi, c, lam)
        assert h == pytest.approx(-sol.objective, abs=1e-6)
        assert np.abs(p.probabilities - primal_from_dual(sol.theta).probabilities).max() < 1e-4

    def test_tight_spectral_budget_uses_both_blocks(self):
        phi = random_moments(2)
        sol = solve_two_sided_dual(phi, 0.1, 0.01)
        rep = duality_report(sol, phi, 0.1, 0.01)
        assert rep["l1_rank"] >= 1 and rep["l2_rank"] >= 1
        assert rep["gap"] <= 1e-6

    @pytest.mark.parametrize("seed", range(3))
    def test_one_sided_matches_slr(self, seed):
        phi = random_moments(seed)
        lam_n, gamma = 0.04, 0.5
        one = solve_one_sided_dual(phi, lam_n * gamma, lam_n)
        slr = solve_slr(phi, lam_n, gamma)
        assert np.abs(one.l2).max() == 0.0
        assert one.objective == pytest.approx(-slr.objective, abs=1e-6)

    def test_one_sided_primal_oracle(self):
        phi = random_moments(4)
        one = solve_one_sided_dual(phi, 0.03, 0.05)
        _, h = solve_primal_maxent(phi, 0.03, 0.05, one_sided=True)
        assert h == pytest.approx(-one.objective, abs=1e-6)

    def test_kkt_detects_non_optimal(self):
        phi = random_moments(0)
        sol = TwoSidedDualSolution(np.eye(3), np.zeros((3, 3)), np.zeros((3, 3)), 0.05, 0.05)
        assert not dual_kkt(sol, phi).optimal

    def test_residuals_of_feasible_point(self):
        phi = random_moments(0)
        assert max(constraint_residuals(DiscreteDistribution.uniform(3), phi, 1.0, 5.0)) == 0.0

    def test_primal_oracle_cap(self):
        with pytest.raises(ValueError):
            solve_primal_maxent(np.eye(7) * 0.5, 0.1, 0.1)
