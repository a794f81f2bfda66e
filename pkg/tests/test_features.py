import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nndoa.array_signal import ArrayConfig, SourceScene, SpacingPerturbation, synthesize
from nndoa.errors import ShapeError
from nndoa.features import (Dataset, NormStats, close_pair_angles, covariance, extract_features,
                            feature_length, features_to_covariance, generate_dataset, normalize)


def complex_matrix(rng, m, n):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


class TestCovariance:
    def test_constant_data(self):
        np.testing.assert_allclose(covariance(np.ones((2, 4))), [[1, 1], [1, 1]])

    def test_noiseless_single_source_rank_one(self, half_wave):
        r = covariance(synthesize(half_wave, SourceScene((0.4,), snr_db=np.inf), rng_seed=2))
        w = np.linalg.eigvalsh(r)
        assert w[-2] < 1e-8 * w[-1]

    def test_exactly_hermitian(self, rng):
        r = covariance(complex_matrix(rng, 5, 37))
        assert np.max(np.abs(r - r.conj().T)) == 0.0

    def test_accepts_snapshot_matrix(self, half_wave):
        x = synthesize(half_wave, SourceScene((0.1,)), rng_seed=0)
        assert np.array_equal(covariance(x), covariance(x.data))

    def test_rejects_vector(self):
        with pytest.raises(ShapeError):
            covariance(np.ones(4))

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1))
    def test_time_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = complex_matrix(rng, 4, 50)
        perm = rng.permutation(50)
        np.testing.assert_allclose(extract_features(covariance(x[:, perm])),
                                   extract_features(covariance(x)), rtol=1e-12, atol=1e-12)

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
    def test_real_scaling(self, seed, alpha):
        x = complex_matrix(np.random.default_rng(seed), 3, 20)
        np.testing.assert_allclose(extract_features(covariance(alpha * x)),
                                   alpha ** 2 * extract_features(covariance(x)), rtol=1e-10, atol=1e-12)


class TestExtractFeatures:
    def test_length_six_antennas(self):
        assert extract_features(np.eye(6)).size == 42

    @pytest.mark.parametrize("m", range(2, 17))
    def test_length_formula(self, m):
        assert extract_features(np.eye(m)).size == m * (m + 1) == feature_length(m)

    def test_identity_two_by_two(self):
        # slots are (0,0),(0,1),(1,1): the off-diagonal real part is 0
        np.testing.assert_array_equal(extract_features(np.eye(2)), [1, 0, 1, 0, 0, 0])

    def test_direct_placement(self):
        r = np.array([[1, 3 + 4j], [3 - 4j, 2]])
        v = extract_features(r)
        assert v[1] == 3 and v[3 + 1] == 4

    def test_non_square(self):
        with pytest.raises(ShapeError):
            extract_features(np.ones((2, 3)))

    @given(st.integers(2, 8), st.integers(0, 2**32 - 1))
    def test_round_trip(self, m, seed):
        a = complex_matrix(np.random.default_rng(seed), m, m)
        r = (a + a.conj().T) / 2
        np.testing.assert_array_equal(features_to_covariance(extract_features(r)), r)

    def test_bad_length_to_covariance(self):
        with pytest.raises(ShapeError):
            features_to_covariance(np.zeros(7))


class TestNormalize:
    def test_mean_vector_maps_to_zero(self):
        stats = NormStats(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        assert np.array_equal(normalize(stats.mean, stats), [0.0, 0.0])

    def test_scalar_example(self):
        assert normalize(np.array([4.0]), NormStats(np.array([0.0]), np.array([2.0])))[0] == 2.0

    def test_degenerate_std_guard(self):
        x = np.column_stack([np.arange(5.0), np.full(5, 7.0)])
        stats = NormStats.fit(x)
        assert stats.std[1] == 1.0
        assert np.all(np.isfinite(normalize(x, stats)))

    def test_training_statistics(self, rng):
        x = rng.normal(3, 5, (500, 6))
        z = normalize(x, NormStats.fit(x))
        assert np.all(np.abs(z.mean(axis=0)) < 1e-10)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-6)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            normalize(np.zeros(3), NormStats.identity(2))

    def test_stats_dict_round_trip(self, rng):
        s = NormStats.fit(rng.normal(size=(10, 4)))
        t = NormStats.from_dict(json.loads(json.dumps(s.to_dict())))
        assert np.array_equal(s.mean, t.mean) and np.array_equal(s.std, t.std)


@pytest.fixture(scope="module")
def small_config():
    return ArrayConfig.half_wavelength(snapshot_len=64)


class TestGenerateDataset:
    def test_shape(self, small_config):
        d = generate_dataset(small_config, 400, 2, 20.0, seed=0)
        assert d.features.shape == (400, 42) and d.labels.shape == (400, 2)

    def test_labels_sorted_in_degrees(self, small_config):
        d = generate_dataset(small_config, 100, 3, 20.0, seed=1)
        assert np.all(np.diff(d.labels, axis=1) >= 0)
        assert np.all(np.abs(d.labels) <= 90)

    def test_deterministic(self, small_config):
        a = generate_dataset(small_config, 20, 2, 10.0, seed=5)
        b = generate_dataset(small_config, 20, 2, 10.0, seed=5)
        assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)

    def test_per_sample_seeds(self, small_config):
        full = generate_dataset(small_config, 10, 2, 10.0, seed=100)
        tail = generate_dataset(small_config, 4, 2, 10.0, seed=106)
        assert np.array_equal(full.features[6:], tail.features)

    def test_labels_uniform_ks(self):
        cfg = ArrayConfig.half_wavelength(snapshot_len=4)
        d = generate_dataset(cfg, 10_000, 1, 20.0, seed=11)
        u = np.sort(d.labels.ravel())
        cdf = (u + 90) / 180
        n = u.size
        ks = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
        assert ks < 0.02

    def test_explicit_angles(self, small_config):
        ang = np.deg2rad([[10.0, -5.0], [0.0, 30.0]])
        d = generate_dataset(small_config, 2, 2, 20.0, seed=0, angles=ang)
        np.testing.assert_allclose(d.labels, [[-5, 10], [0, 30]])

    def test_save_load_round_trip(self, small_config, tmp_path):
        eps = SpacingPerturbation.uniform(small_config, 0.05, 3)
        d = generate_dataset(small_config, 15, 2, 10.0, seed=2, perturbation=eps)
        d.save(tmp_path / "d.csv")
        e = Dataset.load(tmp_path / "d.csv")
        assert np.array_equal(d.features, e.features) and np.array_equal(d.labels, e.labels)
        assert e.config == small_config and e.perturbation == eps and e.seed == 2
        header = (tmp_path / "d.csv").read_text().splitlines()[0].split(",")
        assert header[0] == "f0" and header[41] == "f41" and header[-2:] == ["theta0", "theta1"]
        meta = json.loads((tmp_path / "d.json").read_text())
        assert meta["feature_layout_version"] == 1 and "normalization" in meta

    def test_close_pairs(self):
        ang = np.rad2deg(close_pair_angles(200, 2.0, seed=0))
        sep = ang[:, 1] - ang[:, 0]
        assert np.all((sep >= 0) & (sep < 2.0)) and np.all(np.abs(ang) <= 90)
