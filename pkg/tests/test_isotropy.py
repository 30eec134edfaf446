import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from isopca.isotropy import DegenerateCellError, IsotropicWhitener, estimate_moments, whiten
from isopca.mixture import GaussianMixture, random_affine, sample


def orthogonality_error(W):
    return np.max(np.abs(W @ W.T - np.eye(W.shape[0])))


class TestEstimateMoments:
    def test_two_points(self):
        est = estimate_moments([[1.0, 0.0], [-1.0, 0.0]])
        np.testing.assert_array_equal(est.mean, [0.0, 0.0])
        np.testing.assert_array_equal(est.covariance, np.diag([1.0, 0.0]))
        assert est.count == 2

    def test_standard_normal(self):
        pts = sample(GaussianMixture([1.0], np.zeros((1, 3)), np.eye(3)[None]), 100_000, seed=0).points
        est = estimate_moments(pts)
        assert np.linalg.norm(est.mean) <= 0.02
        assert np.linalg.norm(est.covariance - np.eye(3), 2) <= 0.05

    def test_repeated_point(self):
        est = estimate_moments(np.tile([3.0, -1.0, 2.0], (50, 1)))
        np.testing.assert_array_equal(est.covariance, np.zeros((3, 3)))

    def test_divisor_is_m(self, rng):
        pts = rng.standard_normal((7, 2))
        np.testing.assert_allclose(estimate_moments(pts).covariance, np.cov(pts.T, bias=True), atol=1e-14)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            estimate_moments([[1.0, 2.0]])


class TestWhiten:
    def test_output_isotropic(self, rng):
        pts = rng.standard_normal((500, 4)) @ rng.standard_normal((4, 4)) + 3.0
        amap, out = whiten(pts)
        est = estimate_moments(out)
        assert np.abs(est.mean).max() <= 1e-12
        vals = np.linalg.eigvalsh(est.covariance)
        assert np.all(np.abs(vals - 1.0) <= 1e-8)
        np.testing.assert_allclose(amap(pts), out, atol=1e-12)

    def test_already_white_is_orthogonal(self, rng):
        _, white = whiten(rng.standard_normal((300, 5)))
        amap, out = whiten(white)
        assert orthogonality_error(amap.linear) <= 1e-8
        assert np.linalg.norm(estimate_moments(out).covariance - np.eye(5), 2) <= 1e-8

    def test_rectangle(self):
        pts = np.array([[1.0, 2.0], [1.0, -2.0], [-1.0, 2.0], [-1.0, -2.0]])
        amap, out = whiten(pts)
        np.testing.assert_allclose(estimate_moments(out).covariance, np.eye(2), atol=1e-15)
        # symmetric whitening of diag(1, 4)
        np.testing.assert_allclose(amap.linear, np.diag([1.0, 0.5]), atol=1e-15)

    def test_rank_deficient_floor(self, rng):
        plane = rng.standard_normal((200, 2))
        pts = np.column_stack([plane, np.zeros(200)])
        amap, _ = whiten(pts, eps_floor=1e-6)
        e3 = np.array([0.0, 0.0, 1.0])
        np.testing.assert_allclose(amap.linear @ e3, e3 / np.sqrt(1e-6), rtol=1e-9)

    def test_default_floor_keeps_map_finite(self, rng):
        pts = np.column_stack([rng.standard_normal((100, 2)), np.zeros(100)])
        amap, out = whiten(pts)
        assert np.all(np.isfinite(amap.linear)) and np.all(np.isfinite(out))

    def test_degenerate_cell(self):
        with pytest.raises(DegenerateCellError):
            whiten(np.ones((10, 3)))

    def test_needs_n_plus_one(self, rng):
        with pytest.raises(ValueError, match="at least 4"):
            whiten(rng.standard_normal((3, 3)))

    def test_idempotent(self, rng):
        pts = rng.standard_normal((400, 6)) @ random_affine(6, 1e3, seed=1).linear.T
        _, once = whiten(pts)
        amap, _ = whiten(once)
        assert orthogonality_error(amap.linear) <= 1e-8

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_affine_cancellation(self, seed):
        """Whitening A x + b and whitening x agree up to an orthogonal matrix."""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        pts = rng.standard_normal((300, n)) * rng.uniform(0.5, 2.0, n)
        amap = random_affine(n, 1e3, seed=seed)
        _, a = whiten(pts)
        _, b = whiten(amap(pts))
        s = np.linalg.svd(a.T @ b / len(pts), compute_uv=False)
        assert np.all(np.abs(s - 1.0) <= 1e-6)


class TestIsotropicWhitener:
    def test_roundtrip(self, rng):
        X = rng.standard_normal((200, 3)) @ np.diag([5.0, 1.0, 0.1]) + 1.0
        w = IsotropicWhitener().fit(X)
        np.testing.assert_allclose(w.inverse_transform(w.transform(X)), X, atol=1e-10)
        np.testing.assert_allclose(w.mean_, X.mean(axis=0))

    def test_sklearn_protocol(self, rng):
        w = IsotropicWhitener(eps_floor=1e-5)
        assert clone(w).get_params() == {"eps_floor": 1e-5}
        out = w.fit_transform(rng.standard_normal((50, 2)))
        assert out.shape == (50, 2)

    def test_feature_mismatch(self, rng):
        w = IsotropicWhitener().fit(rng.standard_normal((50, 2)))
        with pytest.raises(ValueError):
            w.transform(rng.standard_normal((5, 3)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            IsotropicWhitener().fit(np.array([[1.0, np.nan], [0.0, 1.0], [2.0, 2.0]]))
