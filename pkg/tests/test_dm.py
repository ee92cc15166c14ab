import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import mnpred as mp
from mnpred.errors import InvalidDispersion, ValidationError, ZeroProbability


class TestEta0:
    def test_oracles(self):
        assert mp.derive_eta0(50, 5.0) == pytest.approx(11.25, rel=1e-9)
        assert mp.derive_eta0(10, 1.01) == pytest.approx(899.0, rel=1e-9)

    def test_domain(self):
        for phi in (1.0, 0.5, 50.0, 51.0):
            with pytest.raises(InvalidDispersion):
                mp.derive_eta0(50, phi)

    def test_dispersion_roundtrip_oracle(self):
        assert mp.dm_dispersion(50, 11.25) == pytest.approx(5.0, rel=1e-12)

    @given(st.integers(3, 1000), st.floats(1e-6, 0.999, allow_nan=False))
    def test_roundtrip_property(self, n, frac):
        phi = 1.0 + frac * (n - 1.0)  # strictly inside (1, n)
        eta0 = mp.derive_eta0(n, phi)
        assert eta0 > 0
        assert mp.dm_dispersion(n, eta0) == pytest.approx(phi, rel=1e-9)


class TestDirichlet:
    def test_rows_sum_to_one(self):
        draws = mp.sample_dirichlet(np.array([2.0, 3.0, 5.0]), mp.RngStream(1), size=500)
        assert draws.shape == (500, 3)
        np.testing.assert_allclose(draws.sum(axis=1), 1.0, atol=1e-12)

    def test_mean_matches_normalized_eta(self):
        eta = np.array([4.0, 1.0, 5.0])
        draws = mp.sample_dirichlet(eta, mp.RngStream(2), size=40_000)
        target = eta / eta.sum()
        se = np.sqrt(target * (1 - target) / (eta.sum() + 1) / 40_000)
        np.testing.assert_allclose(draws.mean(axis=0), target, atol=5 * np.max(se))

    def test_single_draw_shape(self):
        one = mp.sample_dirichlet(np.array([1.0, 1.0]), mp.RngStream(3))
        assert one.shape == (2,)

    def test_batched_eta(self):
        eta = np.tile([2.0, 2.0], (7, 1))
        draws = mp.sample_dirichlet(eta, mp.RngStream(4))
        assert draws.shape == (7, 2)
        np.testing.assert_allclose(draws.sum(axis=1), 1.0, atol=1e-12)


class TestDMCounts:
    def test_row_sums(self):
        draws = mp.sample_dm_counts(23, (0.2, 0.3, 0.5), 4.0, mp.RngStream(5), size=200)
        assert draws.shape == (200, 3)
        assert np.all(draws.sum(axis=1) == 23)

    def test_unit_cluster_is_plain_multinomial(self):
        # n=1 carve-out: DM margin is exactly multinomial regardless of phi
        draws = mp.sample_dm_counts(1, (0.3, 0.7), 0.999, mp.RngStream(6), size=30_000)
        assert np.all(draws.sum(axis=1) == 1)
        freq = draws.mean(axis=0)
        np.testing.assert_allclose(freq, [0.3, 0.7], atol=4 * np.sqrt(0.3 * 0.7 / 30_000))

    def test_variance_inflation(self):
        pi = np.array([0.3, 0.7])
        draws = mp.sample_dm_counts(50, pi, 5.0, mp.RngStream(8), size=40_000)
        ratio = draws.var(axis=0, ddof=1) / (50 * pi * (1 - pi))
        np.testing.assert_allclose(ratio, 5.0, rtol=0.06)

    def test_zero_probability_category_stays_empty(self):
        draws = mp.sample_dm_counts(12, (0.5, 0.0, 0.5), 3.0, mp.RngStream(9), size=100)
        assert np.all(draws[:, 1] == 0)
        assert np.all(draws.sum(axis=1) == 12)

    def test_dispersion_domain(self):
        with pytest.raises(InvalidDispersion):
            mp.sample_dm_counts(10, (0.5, 0.5), 10.0, mp.RngStream(10))

    def test_bad_probability_sum(self):
        with pytest.raises(ValidationError):
            mp.sample_dm_counts(10, (0.2, 0.2), 2.0, mp.RngStream(11))

    def test_negative_probability(self):
        with pytest.raises(ZeroProbability):
            mp.sample_dm_counts(10, (-0.1, 1.1), 2.0, mp.RngStream(12))


class TestDMMatrix:
    def test_equal_sizes(self):
        counts = mp.sample_dm_matrix([20] * 6, (0.25, 0.75), 3.0, mp.RngStream(13))
        assert counts.shape == (6, 2)
        assert np.all(counts.sum(axis=1) == 20)

    def test_unequal_sizes_respected(self):
        sizes = [10, 30, 20, 30]
        counts = mp.sample_dm_matrix(sizes, (0.5, 0.5), 2.5, mp.RngStream(14))
        np.testing.assert_array_equal(counts.sum(axis=1), sizes)

    def test_batched(self):
        counts = mp.sample_dm_matrix([15, 25], (0.4, 0.6), 2.0, mp.RngStream(15), size=9)
        assert counts.shape == (9, 2, 2)
        np.testing.assert_array_equal(counts.sum(axis=2), np.tile([15, 25], (9, 1)))

    def test_deterministic_given_stream(self):
        a = mp.sample_dm_matrix([10, 10], (0.5, 0.5), 2.0, mp.RngStream(16), size=4)
        b = mp.sample_dm_matrix([10, 10], (0.5, 0.5), 2.0, mp.RngStream(16), size=4)
        np.testing.assert_array_equal(a, b)
        c = mp.sample_dm_matrix([10, 10], (0.5, 0.5), 2.0, mp.RngStream(16).child(1), size=4)
        assert not np.array_equal(a, c)


class TestRepair:
    def test_adds_single_count_to_zero_column(self):
        counts = np.array([[5, 0], [7, 0]])
        fixed = mp.repair_zero_columns(counts, mp.RngStream(17))
        assert fixed[:, 1].sum() == 1
        assert fixed[:, 0].sum() == 12
        np.testing.assert_array_equal(fixed.sum(axis=1) - counts.sum(axis=1), fixed[:, 1])

    def test_leaves_complete_tables_alone(self):
        counts = np.array([[5, 1], [7, 2]])
        fixed = mp.repair_zero_columns(counts, mp.RngStream(18))
        np.testing.assert_array_equal(fixed, counts)

    def test_batched_repair_is_per_replicate(self):
        counts = np.zeros((4, 3, 2), dtype=np.int64)
        counts[..., 0] = 5
        counts[2, 1, 1] = 1  # replicate 2 already has the category
        fixed = mp.repair_zero_columns(counts, mp.RngStream(19))
        assert np.all(fixed[..., 1].sum(axis=1) >= 1)
        np.testing.assert_array_equal(fixed[2], counts[2])


class TestGenerateDataset:
    def test_returns_dataset_with_labels(self):
        data = mp.generate_dataset(
            5, 30, (0.3, 0.3, 0.4), 2.0, mp.RngStream(20), categories=("a", "b", "c")
        )
        assert data.n_clusters == 5
        assert data.categories == ("a", "b", "c")
        assert np.all(data.cluster_sizes == 30)

    def test_repair_bumps_cluster_size(self):
        # tiny category: with repair on, the lucky cluster gets one extra unit
        data = mp.generate_dataset(3, 8, (0.001, 0.999), 1.5, mp.RngStream(21), repair=True)
        assert data.counts[:, 0].sum() >= 1
        assert data.n_total in (24, 25)

    def test_accepts_rounded_published_vectors(self):
        data = mp.generate_dataset(
            4, 46, (0.224, 0.466, 0.273, 0.031, 0.004), 3.19, mp.RngStream(22), repair=True
        )
        assert data.n_categories == 5
