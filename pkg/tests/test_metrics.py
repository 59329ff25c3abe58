from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from splab.core.errors import InvalidInput
from splab.core.metrics import (
    empirical_quantile,
    ks_noise_floor,
    ks_two_sample,
    ks_vs_normal,
    wasserstein1,
)


SMALL_VALUES = (0.0, 1.0, 2.0, 3.0)
SMALL_SAMPLES = [s for size in range(1, 5) for s in itertools.product(SMALL_VALUES, repeat=size)]


def cdf(sample, x) -> float:
    return sum(1 for v in sample if v <= x) / len(sample)


def brute_ks(a, b) -> float:
    return max(abs(cdf(a, x) - cdf(b, x)) for x in set(a) | set(b))


def brute_w1_area(a, b) -> float:
    # ∫|F_a − G_b|，在合并网格的相邻点之间逐段求和
    grid = sorted(set(a) | set(b))
    return sum(abs(cdf(a, lo) - cdf(b, lo)) * (hi - lo) for lo, hi in zip(grid, grid[1:]))


def brute_w1(a, b) -> float:
    # 等长样本：枚举所有一一配对
    return min(np.mean(np.abs(np.asarray(a) - np.asarray(perm))) for perm in itertools.permutations(b))


class TestKolmogorov:
    def test_identical(self):
        assert ks_two_sample([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_shifted_pair(self):
        assert ks_two_sample([0.0, 1.0], [1.0, 2.0]) == pytest.approx(0.5)

    def test_disjoint_points(self):
        assert ks_two_sample([0.0], [1.0]) == pytest.approx(1.0)

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        a, b = rng.standard_normal(50), rng.standard_normal(70)
        assert ks_two_sample(a, b) == ks_two_sample(b, a)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal(40), rng.standard_normal(40) + 0.3
        assert ks_two_sample(np.exp(a), np.exp(b)) == pytest.approx(ks_two_sample(a, b))

    def test_brute_force_grid(self):
        for a in SMALL_SAMPLES:
            for b in SMALL_SAMPLES:
                assert ks_two_sample(a, b) == pytest.approx(brute_ks(a, b))

    def test_empty(self):
        with pytest.raises(InvalidInput):
            ks_two_sample([], [1.0])

    def test_non_finite(self):
        with pytest.raises(InvalidInput):
            ks_two_sample([np.nan], [1.0])


class TestNormal:
    def test_single_point(self):
        assert ks_vs_normal([0.0]) == pytest.approx(0.5)

    def test_large_gaussian_sample(self):
        sample = np.random.default_rng(3).standard_normal(1_000_000)
        assert ks_vs_normal(sample) <= 0.005

    def test_far_shift(self):
        sample = np.random.default_rng(4).standard_normal(1000) + 10.0
        assert ks_vs_normal(sample) >= 0.999


class TestWasserstein:
    def test_identical(self):
        assert wasserstein1([0.5, 1.5], [1.5, 0.5]) == 0.0

    def test_sorted_coupling(self):
        assert wasserstein1([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0)

    def test_unequal_lengths(self):
        assert wasserstein1([0.0], [0.0, 2.0]) == pytest.approx(1.0)

    def test_matches_all_couplings(self):
        for size in (1, 2, 3):
            samples = list(itertools.product(SMALL_VALUES, repeat=size))
            for a in samples:
                for b in samples:
                    assert wasserstein1(a, b) == pytest.approx(brute_w1(a, b))

    def test_matches_cdf_area_for_all_lengths(self):
        for a in SMALL_SAMPLES:
            for b in SMALL_SAMPLES:
                assert wasserstein1(a, b) == pytest.approx(brute_w1_area(a, b))

    def test_triangle_inequality(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            a, b, c = rng.standard_normal(30), rng.exponential(size=45), rng.uniform(size=20)
            assert wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-12

    @pytest.mark.parametrize("scale", [2.0, -0.5])
    def test_scale_shift_equivariance(self, scale):
        rng = np.random.default_rng(6)
        a, b = rng.standard_normal(25), rng.standard_normal(25)
        moved = wasserstein1(scale * a + 3.0, scale * b + 3.0)
        assert moved == pytest.approx(abs(scale) * wasserstein1(a, b))


class TestQuantile:
    def test_convention(self):
        assert empirical_quantile([4.0, 2.0, 3.0, 1.0], 0.75) == 3.0

    def test_constant(self):
        assert empirical_quantile([7.0] * 9, 0.3) == 7.0

    def test_upper_limit(self):
        assert empirical_quantile([1.0, 5.0, 2.0], 0.999) == 5.0

    def test_rounding_guard(self):
        assert empirical_quantile(np.arange(1.0, 11.0), 0.9) == 9.0

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.1])
    def test_invalid_level(self, beta):
        with pytest.raises(InvalidInput):
            empirical_quantile([1.0, 2.0], beta)


class TestNoiseFloor:
    def test_two_sample(self):
        assert ks_noise_floor(2000, 100_000) == pytest.approx(1.36 * math.sqrt(1 / 2000 + 1 / 100_000))

    def test_one_sample(self):
        assert ks_noise_floor(400) == pytest.approx(0.068)

    def test_invalid(self):
        with pytest.raises(InvalidInput):
            ks_noise_floor(0)
