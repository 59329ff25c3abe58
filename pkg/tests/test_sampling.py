from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from splab.core.errors import InvalidInput
from splab.core.laws import KLLaw
from splab.core.metrics import ks_noise_floor, ks_two_sample
from splab.core.models import Dataset, EigenProfile, IndexBlock, PsiSpectrum, SpectralModel, SymOperator
from splab.core.operators import eigh, hs_distance_sq, projector
from splab.core.sampling import (
    build_model,
    check_block,
    dataset_from_csv,
    dataset_to_csv,
    empirical_covariance,
    empirical_projector,
    projector_statistic,
    sample_dataset,
    sample_limit_stat,
    sample_statistic,
)
from splab.core.spectral import gap
from splab.core.streams import substream

GAUSS = KLLaw("gaussian")


class TestProfiles:
    def test_exp_decay(self):
        model = build_model(EigenProfile("exp-decay", 3, a=1.0))
        assert_allclose(model.lambdas, np.exp(-np.arange(1.0, 4.0)))

    def test_poly_decay(self):
        model = build_model(EigenProfile("poly-decay", 4, a=2.0))
        assert_allclose(model.lambdas, [1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0])

    def test_spiked_single(self):
        model = build_model(EigenProfile("spiked", 6, spike_size=1, gap=0.5))
        assert model.lambdas[0] == pytest.approx(1.5)
        assert_allclose(model.lambdas[1:], np.ones(5), atol=1e-8)
        assert np.all(np.diff(model.lambdas) < 0)

    def test_spiked_block_shape(self):
        model = build_model(EigenProfile("spiked", 12, spike_size=3, gap=0.4, spread=2.0))
        lam = model.lambdas
        assert lam[2] == pytest.approx(1.4)
        assert lam[0] <= 1.0 + 2.0 * 0.4 + 1e-8
        assert lam[2] - lam[3] == pytest.approx(0.4)

    def test_pervasive_conditions(self):
        c, C = 0.3, 2.5
        model = build_model(EigenProfile("pervasive", 30, spike_size=3, pervasive_c=c, pervasive_C=C, tail_power=2.0))
        lam = model.lambdas
        assert lam[0] <= C * lam[2] * (1 + 1e-9)
        assert lam[2] - lam[3] >= c * lam[2] * (1 - 1e-12)
        assert lam[3:].sum() / lam[0] <= C * (1 + 1e-9)

    @pytest.mark.parametrize(
        "profile",
        [
            EigenProfile("exp-decay", 5, a=0.0),
            EigenProfile("poly-decay", 5, a=1.0),
            EigenProfile("spiked", 5, spike_size=1),
            EigenProfile("spiked", 10, spike_size=6),
            EigenProfile("spiked", 10, spike_size=2, gap=1.5),
            EigenProfile("pervasive", 5, spike_size=5),
            EigenProfile("unknown", 5),
        ],
    )
    def test_invalid_profiles(self, profile):
        with pytest.raises(InvalidInput):
            build_model(profile)

    def test_block_cannot_reach_flat_tail(self):
        profile = EigenProfile("spiked", 12, spike_size=2)
        with pytest.raises(InvalidInput):
            check_block(profile, IndexBlock(1, 3, 12))
        assert check_block(profile, IndexBlock(1, 2, 12)) == IndexBlock(1, 2, 12)

    @pytest.mark.parametrize("block", [(1, 1), (1, 3), (2, 4), (3, 3)])
    def test_equal_spikes_cannot_be_split(self, block):
        profile = EigenProfile("spiked", 12, spike_size=4, spread=1.0)
        with pytest.raises(InvalidInput):
            check_block(profile, IndexBlock(*block, 12))

    def test_whole_spike_block_or_distinct_spikes_accepted(self):
        equal = EigenProfile("spiked", 12, spike_size=4, spread=1.0)
        assert check_block(equal, IndexBlock(1, 4, 12)) == IndexBlock(1, 4, 12)
        distinct = EigenProfile("spiked", 12, spike_size=4, spread=2.0)
        assert check_block(distinct, IndexBlock(1, 1, 12)) == IndexBlock(1, 1, 12)
        assert gap(build_model(distinct), IndexBlock(1, 1, 12)) > 1e-2

    def test_equal_pervasive_block_cannot_be_split(self):
        profile = EigenProfile("pervasive", 20, spike_size=3, pervasive_C=1.0)
        with pytest.raises(InvalidInput):
            check_block(profile, IndexBlock(1, 2, 20))
        assert check_block(profile, IndexBlock(1, 3, 20)) == IndexBlock(1, 3, 20)
        assert check_block(profile, IndexBlock(4, 6, 20)) == IndexBlock(4, 6, 20)

    def test_block_must_leave_complement(self):
        with pytest.raises(InvalidInput):
            check_block(EigenProfile("exp-decay", 4), IndexBlock(1, 4, 4))


class TestSampleDataset:
    def test_two_point_support(self):
        data = sample_dataset(SpectralModel(np.array([1.0])), KLLaw("two-point"), 50, seed=3)
        assert set(np.unique(data.rows)) <= {-1.0, 1.0}

    def test_column_second_moments(self):
        model = SpectralModel(np.array([2.0, 1.0]))
        n = 100_000
        data = sample_dataset(model, GAUSS, n, seed=8)
        moments = np.mean(data.rows**2, axis=0)
        se = model.lambdas * math.sqrt(2.0 / n)
        assert np.all(np.abs(moments - model.lambdas) <= 4.0 * se)

    def test_deterministic(self):
        model = build_model(EigenProfile("exp-decay", 5))
        first = sample_dataset(model, GAUSS, 20, seed=42, replicate=3)
        second = sample_dataset(model, GAUSS, 20, seed=42, replicate=3)
        assert_array_equal(first.rows, second.rows)
        assert first.lambda_hash == second.lambda_hash

    def test_replicates_and_cells_differ(self):
        model = build_model(EigenProfile("exp-decay", 5))
        base = sample_dataset(model, GAUSS, 20, seed=42).rows
        assert not np.array_equal(base, sample_dataset(model, GAUSS, 20, seed=42, replicate=1).rows)
        assert not np.array_equal(base, sample_dataset(model, GAUSS, 20, seed=42, cell=1).rows)

    def test_substream_independent_of_order(self):
        late = substream(5, 0, 7).standard_normal(3)
        for replicate in range(7):
            substream(5, 0, replicate).standard_normal(100)
        assert_array_equal(late, substream(5, 0, 7).standard_normal(3))


class TestEmpiricalCovariance:
    def test_single_row(self):
        x = np.array([[1.0, -2.0, 0.5]])
        assert_allclose(empirical_covariance(Dataset(x)).entries, np.outer(x[0], x[0]))

    def test_basis_rows(self):
        assert_allclose(empirical_covariance(Dataset(np.eye(2))).entries, np.diag([0.5, 0.5]))

    def test_concentration(self):
        model = SpectralModel(np.array([2.0, 1.0]))
        data = sample_dataset(model, GAUSS, 100_000, seed=12)
        diff = empirical_covariance(data) - model.covariance()
        assert math.sqrt(hs_distance_sq(diff, SymOperator.zeros(2))) <= 0.1


class TestEmpiricalProjector:
    def test_exact_covariance(self):
        model = SpectralModel(np.array([2.0, 0.5]))
        data = Dataset(np.array([[2.0, 0.0], [0.0, 1.0]]))
        estimate = empirical_projector(data, IndexBlock(1, 1, 2), model)
        assert_allclose(estimate.projector.entries, np.diag([1.0, 0.0]), atol=1e-15)
        assert np.all(estimate.perturbation.entries == 0.0)
        assert projector_statistic(estimate, IndexBlock(1, 1, 2), 2) == pytest.approx(0.0, abs=1e-28)

    def test_first_order_closed_form(self):
        hat = projector(eigh(SymOperator(np.array([[2.0, 0.01], [0.01, 1.0]]))), IndexBlock(1, 1, 2))
        assert math.sqrt(hs_distance_sq(hat, SymOperator.diag([1.0, 0.0]))) <= 0.011

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            empirical_projector(Dataset(np.ones((3, 2))), IndexBlock(1, 1, 3), build_model(EigenProfile("exp-decay", 3)))

    def test_statistic_scale_invariant(self):
        model = build_model(EigenProfile("exp-decay", 6, a=0.8))
        J = IndexBlock(1, 2, 6)
        plain = sample_statistic(model, GAUSS, J, 200, seed=1, replicate=0)
        scaled = sample_statistic(model.scaled(4.0), GAUSS, J, 200, seed=1, replicate=0)
        assert scaled == pytest.approx(plain, rel=1e-8)


class TestLimitDraws:
    def test_chi_square_moments(self):
        draws = sample_limit_stat(PsiSpectrum(((1, 2, 4.0),)), 100_000, seed=6)
        assert draws.mean() == pytest.approx(4.0, abs=3.0 * math.sqrt(32.0 / 100_000))
        assert draws.var() == pytest.approx(32.0, abs=3.0 * 0.38)

    def test_matches_scaled_chi_square(self):
        draws = sample_limit_stat(PsiSpectrum(((1, 2, 4.0),)), 20_000, seed=6)
        reference = 4.0 * np.random.default_rng(99).chisquare(1, 20_000)
        assert ks_two_sample(draws, reference) <= 3.0 * ks_noise_floor(20_000, 20_000)

    def test_batching_is_transparent(self):
        ps = PsiSpectrum(((1, 2, 1.0), (1, 3, 0.5)))
        assert sample_limit_stat(ps, 25_000, seed=2).shape == (25_000,)
        assert_array_equal(sample_limit_stat(ps, 25_000, seed=2), sample_limit_stat(ps, 25_000, seed=2))

    def test_empty_spectrum(self):
        with pytest.raises(InvalidInput):
            sample_limit_stat(PsiSpectrum(()), 10, seed=1)


class TestCsv:
    def test_round_trip(self, tmp_path):
        data = sample_dataset(build_model(EigenProfile("exp-decay", 4)), GAUSS, 30, seed=5)
        path = tmp_path / "data.csv"
        dataset_to_csv(data, path)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "x1,x2,x3,x4"
        assert_array_equal(dataset_from_csv(path).rows, data.rows)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b\n1,2\n", encoding="utf-8")
        with pytest.raises(InvalidInput):
            dataset_from_csv(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x1,x2\n1,2\n3\n", encoding="utf-8")
        with pytest.raises(InvalidInput, match="第 3 行"):
            dataset_from_csv(path)

    def test_non_finite(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x1,x2\n1,inf\n", encoding="utf-8")
        with pytest.raises(InvalidInput):
            dataset_from_csv(path)
