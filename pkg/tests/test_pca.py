import numpy as np
import pytest

from nxbar import pca


class TestFit:
    def test_rank_one_data(self):
        rng = np.random.default_rng(0)
        t = rng.normal(size=100)
        data = np.outer(t, [3.0, -4.0]) + np.array([1.0, 2.0])
        model = pca.fit(data, variance_target=0.9)
        assert model.n_components == 1
        assert model.explained_variance_ratio[0] == pytest.approx(1.0)

    def test_full_rank_round_trip(self):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(50, 10))
        model = pca.fit(data, variance_target=1.0)
        recon = pca.inverse_transform(model, pca.transform(model, data))
        np.testing.assert_allclose(recon, data, atol=1e-6)

    def test_orthonormal_descending(self):
        rng = np.random.default_rng(2)
        data = rng.normal(size=(200, 8)) * np.linspace(3.0, 0.3, 8)
        model = pca.fit(data, variance_target=0.99)
        gram = model.components @ model.components.T
        np.testing.assert_allclose(gram, np.eye(model.n_components), atol=1e-8)
        ratios = model.explained_variance_ratio
        assert np.all(ratios >= 0)
        assert np.all(np.diff(ratios) <= 1e-12)
        assert ratios.sum() <= 1.0 + 1e-8

    def test_ratios_match_transformed_variance(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(300, 6)) * np.array([5, 3, 2, 1, 0.5, 0.1])
        model = pca.fit(data, variance_target=0.95)
        z = pca.transform(model, data)
        total = np.sum(np.var(data, axis=0, ddof=1))
        recomputed = np.var(z, axis=0, ddof=1) / total
        np.testing.assert_allclose(recomputed, model.explained_variance_ratio, atol=1e-6)

    def test_transformed_training_data_is_centered(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(120, 5)) + 7.0
        model = pca.fit(data, variance_target=0.9)
        z = pca.transform(model, data)
        assert np.max(np.abs(z.mean(axis=0))) <= 1e-6

    def test_minimal_k_rule(self):
        rng = np.random.default_rng(5)
        # variances 4, 1, ~0 -> 0.8 of variance needs exactly the first axis
        data = rng.normal(size=(500, 3)) * np.array([2.0, 1.0, 1e-4])
        model = pca.fit(data, variance_target=0.75)
        assert model.n_components == 1

    def test_degenerate_data_rejected(self):
        with pytest.raises(ValueError):
            pca.fit(np.ones((10, 3)), 0.9)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            pca.fit(np.random.default_rng(0).normal(size=(1, 3)), 0.9)
        with pytest.raises(ValueError):
            pca.fit(np.random.default_rng(0).normal(size=(5, 3)), 0.0)

    def test_sign_fix_is_deterministic(self):
        rng = np.random.default_rng(6)
        data = rng.normal(size=(50, 4))
        a = pca.fit(data, 0.99)
        b = pca.fit(data.copy(), 0.99)
        np.testing.assert_array_equal(a.components, b.components)
        for row in a.components:
            assert row[np.argmax(np.abs(row))] > 0


class TestTransform:
    def test_mean_maps_to_zero(self):
        rng = np.random.default_rng(7)
        data = rng.normal(size=(60, 4))
        model = pca.fit(data, 0.9)
        np.testing.assert_allclose(pca.transform(model, model.mean), 0.0, atol=1e-12)

    def test_dominant_axis_recovered_up_to_sign(self):
        rng = np.random.default_rng(8)
        data = np.column_stack([rng.normal(scale=5.0, size=400), rng.normal(scale=0.1, size=400)])
        model = pca.fit(data, 0.9)
        assert model.n_components == 1
        z = pca.transform(model, data)[:, 0]
        corr = np.corrcoef(z, data[:, 0])[0, 1]
        assert abs(corr) > 0.999

    def test_dimension_mismatch(self):
        model = pca.fit(np.random.default_rng(9).normal(size=(20, 4)), 0.9)
        with pytest.raises(ValueError):
            pca.transform(model, np.ones(5))
