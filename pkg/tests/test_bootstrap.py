from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from splab.core.bootstrap import (
    bootstrap_quantile,
    bootstrap_replicate,
    bootstrap_run,
    coverage_experiment,
    sigma_w_squared,
    weighted_covariance,
)
from splab.core.errors import InvalidInput
from splab.core.laws import KLLaw, MultiplierLaw
from splab.core.models import BootstrapRun, Dataset, EigenProfile, IndexBlock
from splab.core.sampling import build_model, empirical_covariance, sample_dataset

GAUSS = KLLaw("gaussian")
W_GAUSS = MultiplierLaw("gaussian")


def leading_angle(matrix: np.ndarray) -> float:
    a, b, c = matrix[0, 0], matrix[0, 1], matrix[1, 1]
    return 0.5 * math.atan2(2.0 * b, a - c)


class TestReplicate:
    def test_unit_multipliers_give_zero(self):
        data = sample_dataset(build_model(EigenProfile("exp-decay", 5)), GAUSS, 40, seed=1)
        value = bootstrap_replicate(data, IndexBlock(1, 2, 5), W_GAUSS, seed=1, weights=np.ones(40))
        assert value == 0.0

    def test_two_by_two_closed_form(self):
        model = build_model(EigenProfile("exp-decay", 2, a=1.0))
        data = sample_dataset(model, GAUSS, 30, seed=4)
        weights = np.random.default_rng(4).standard_normal(30)
        value = bootstrap_replicate(data, IndexBlock(1, 1, 2), W_GAUSS, seed=4, weights=weights)
        hat = leading_angle(empirical_covariance(data).entries)
        tilde = leading_angle(weighted_covariance(data, weights).entries)
        expected = 30 / 2.0 * 2.0 * math.sin(hat - tilde) ** 2
        assert value == pytest.approx(expected, rel=1e-10, abs=1e-14)

    def test_scale_invariant(self):
        data = sample_dataset(build_model(EigenProfile("poly-decay", 6, a=2.0)), GAUSS, 50, seed=9)
        J = IndexBlock(1, 2, 6)
        plain = bootstrap_replicate(data, J, W_GAUSS, seed=9, replicate=3)
        scaled = bootstrap_replicate(Dataset(3.0 * data.rows), J, W_GAUSS, seed=9, replicate=3)
        assert scaled == pytest.approx(plain, rel=1e-8)

    def test_weight_shape_checked(self):
        data = Dataset(np.eye(3))
        with pytest.raises(InvalidInput):
            bootstrap_replicate(data, IndexBlock(1, 1, 3), W_GAUSS, seed=0, weights=np.ones(4))

    def test_sigma_w(self):
        assert sigma_w_squared(W_GAUSS) == 2.0
        assert sigma_w_squared(MultiplierLaw("sqrt-exponential")) == 1.0


class TestRun:
    def test_nonnegative_and_ordered(self):
        data = sample_dataset(build_model(EigenProfile("exp-decay", 5)), GAUSS, 60, seed=2)
        run = bootstrap_run(data, IndexBlock(1, 1, 5), W_GAUSS, B=25, seed=2)
        assert run.B == 25
        assert np.all(run.statistics >= 0.0)
        third = bootstrap_replicate(data, IndexBlock(1, 1, 5), W_GAUSS, seed=2, replicate=3)
        assert run.statistics[3] == third

    def test_thread_count_does_not_matter(self):
        data = sample_dataset(build_model(EigenProfile("exp-decay", 5)), GAUSS, 60, seed=3)
        J = IndexBlock(1, 1, 5)
        assert_array_equal(
            bootstrap_run(data, J, W_GAUSS, B=20, seed=3, threads=1).statistics,
            bootstrap_run(data, J, W_GAUSS, B=20, seed=3, threads=4).statistics,
        )


class TestQuantile:
    def test_order_statistic(self):
        assert bootstrap_quantile(BootstrapRun(np.array([4.0, 1.0, 3.0, 2.0])), 0.25) == 3.0

    def test_constant(self):
        run = BootstrapRun(np.full(11, 2.5))
        assert all(bootstrap_quantile(run, alpha) == 2.5 for alpha in (0.01, 0.1, 0.5, 0.9))

    def test_complement_level_is_exact(self):
        # 1 - 0.7 在浮点下略大于 0.3
        run = BootstrapRun(np.arange(1.0, 11.0))
        assert bootstrap_quantile(run, 0.7) == 3.0

    def test_small_alpha_gives_max(self):
        run = BootstrapRun(np.array([0.2, 0.9, 0.4]))
        assert bootstrap_quantile(run, 1e-6) == 0.9

    def test_invalid_alpha(self):
        with pytest.raises(InvalidInput):
            bootstrap_quantile(BootstrapRun(np.ones(3)), 1.0)


class TestCoverage:
    MODEL = build_model(EigenProfile("exp-decay", 5, a=1.0))
    J = IndexBlock(1, 1, 5)

    def run(self, alpha: float, scale: float = 1.0):
        return coverage_experiment(
            self.MODEL, GAUSS, W_GAUSS, self.J, n=200, B=49, mc_runs=60, alpha=alpha, seed=11, statistic_scale=scale
        )

    def test_needs_enough_runs(self):
        with pytest.raises(InvalidInput):
            coverage_experiment(self.MODEL, GAUSS, W_GAUSS, self.J, 200, 49, 10, 0.1, seed=1)

    def test_level_monotone(self):
        low, high = self.run(0.1), self.run(0.5)
        assert high.rejection_rate >= low.rejection_rate
        assert low.binomial_se == pytest.approx(math.sqrt(0.09 / 60))
        assert low.runs == 60

    def test_inflated_bootstrap_rarely_rejects(self):
        assert self.run(0.1, scale=100.0).rejection_rate < 0.1

    @pytest.mark.slow
    def test_acceptance_rate(self):
        model = build_model(EigenProfile("exp-decay", 20, a=1.0))
        record = coverage_experiment(
            model, GAUSS, W_GAUSS, IndexBlock(1, 1, 20), n=1000, B=499, mc_runs=400, alpha=0.1, seed=2024, threads=4
        )
        assert abs(record.rejection_rate - 0.1) <= 0.045
