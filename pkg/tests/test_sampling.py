import time

import numpy as np
import pytest
from scipy.special import expit

from conftest import brute_probs, brute_states, random_theta
from latent_ising.exceptions import DimensionError
from latent_ising.ising import BinaryDataset, empirical_second_moment, expected_second_moment
from latent_ising.sampling import (
    GibbsConfig,
    empirical_vs_exact_tv,
    exact_sample,
    gibbs_conditional,
    gibbs_sample,
)


class TestConditional:
    def test_uniform(self):
        assert gibbs_conditional(np.zeros((2, 2)), [0, 0], 0) == 0.5

    def test_coupled(self):
        th = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert gibbs_conditional(th, [0, 1], 0) == pytest.approx(expit(2.0), abs=1e-12)

    def test_bias(self):
        assert gibbs_conditional([[1.0]], [0], 0) == pytest.approx(expit(1.0), abs=1e-12)

    def test_own_value_ignored(self, rng):
        th = random_theta(rng, 4)
        assert gibbs_conditional(th, [1, 0, 1, 1], 2) == pytest.approx(
            gibbs_conditional(th, [1, 0, 0, 1], 2), abs=1e-15)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_matches_joint_ratio(self, rng, d):
        th = random_theta(rng, d)
        x = brute_states(d)
        p = brute_probs(th)
        index = {tuple(r): k for k, r in enumerate(x.astype(int))}
        for k in range(0, 1 << d, 3):
            for i in range(d):
                one = x[k].copy(); one[i] = 1
                zero = x[k].copy(); zero[i] = 0
                p1, p0 = p[index[tuple(one.astype(int))]], p[index[tuple(zero.astype(int))]]
                assert gibbs_conditional(th, x[k], i) == pytest.approx(p1 / (p1 + p0), abs=1e-10)

    def test_bad_index(self):
        with pytest.raises(IndexError):
            gibbs_conditional(np.zeros((2, 2)), [0, 0], 2)

    def test_bad_state(self):
        with pytest.raises(DimensionError):
            gibbs_conditional(np.zeros((2, 2)), [0, 0, 0], 0)


class TestExactSample:
    def test_uniform_marginals(self):
        data = exact_sample(np.zeros((3, 3)), 20000, seed=0)
        assert np.allclose(data.samples.mean(axis=0), 0.5, atol=0.02)

    def test_suppressed_bit(self):
        data = exact_sample([[-50.0]], 1000, seed=0)
        assert data.samples.sum() == 0

    def test_zero_count(self):
        assert exact_sample(np.zeros((2, 2)), 0).count == 0

    def test_negative_count(self):
        with pytest.raises(ValueError):
            exact_sample(np.zeros((2, 2)), -1)

    def test_reproducible(self, rng):
        th = random_theta(rng, 4)
        a = exact_sample(th, 100, seed=7).samples
        b = exact_sample(th, 100, seed=7).samples
        c = exact_sample(th, 100, seed=8).samples
        assert np.array_equal(a, b) and not np.array_equal(a, c)

    def test_tv_shrinks(self, rng):
        th = random_theta(rng, 4)
        tv = [empirical_vs_exact_tv(exact_sample(th, n, seed=1), th) for n in (100, 100000)]
        assert tv[1] < tv[0] and tv[1] < 0.02

    def test_moments_converge(self, rng):
        th = random_theta(rng, 4)
        m = empirical_second_moment(exact_sample(th, 100000, seed=3))
        assert np.abs(m - expected_second_moment(th)).max() < 0.01


class TestGibbs:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            GibbsConfig(thinning=0)
        with pytest.raises(ValueError):
            GibbsConfig(burn_in=-1)

    def test_uniform(self):
        data = gibbs_sample(np.zeros((2, 2)), 20000, GibbsConfig(burn_in=10, thinning=1))
        assert np.allclose(data.samples.mean(axis=0), 0.5, atol=0.02)

    def test_reproducible(self, rng):
        th = random_theta(rng, 3)
        cfg = GibbsConfig(burn_in=50, thinning=2, seed=4)
        assert np.array_equal(gibbs_sample(th, 200, cfg).samples, gibbs_sample(th, 200, cfg).samples)

    def test_matches_exact_distribution(self, rng):
        th = random_theta(rng, 3)
        start = time.perf_counter()
        data = gibbs_sample(th, 50000, GibbsConfig(burn_in=1000, thinning=10, seed=0))
        assert time.perf_counter() - start < 60
        assert empirical_vs_exact_tv(data, th) < 0.02

    def test_strong_bias(self):
        data = gibbs_sample([[-30.0, 0.0], [0.0, 30.0]], 500, GibbsConfig(burn_in=5, thinning=1))
        assert np.all(data.samples[:, 0] == 0) and np.all(data.samples[:, 1] == 1)


class TestTV:
    def test_all_zero_vs_uniform(self):
        data = BinaryDataset(np.zeros((10, 1), dtype=int))
        assert empirical_vs_exact_tv(data, np.zeros((1, 1))) == pytest.approx(0.5)

    def test_bounded(self, rng):
        th = random_theta(rng, 3)
        tv = empirical_vs_exact_tv(exact_sample(th, 30, seed=0), th)
        assert 0 <= tv <= 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            empirical_vs_exact_tv(BinaryDataset([[0, 1]]), np.zeros((3, 3)))


class TestWorkedExamples:
    def test_single_bit(self):
        assert gibbs_conditional([[0.7]], [0], 0) == pytest.approx(expit(0.7), abs=1e-15)
        assert gibbs_conditional([[0.0]], [1], 0) == 0.5

    def test_identical_distribution_tv(self):
        # every state once under the uniform model
        data = BinaryDataset.from_states(np.arange(8), 3)
        assert empirical_vs_exact_tv(data, np.zeros((3, 3))) == pytest.approx(0, abs=1e-15)

    def test_burn_in_budget(self, rng):
        # a strongly coupled chain started at random needs the burn-in
        th = random_theta(rng, 3, 1.5)
        tv = [empirical_vs_exact_tv(gibbs_sample(th, 20000, GibbsConfig(burn_in=b, thinning=2, seed=5)), th)
              for b in (10, 100, 1000)]
        assert tv[2] <= tv[1] + 0.01 and tv[1] <= tv[0] + 0.01
