import warnings

import numpy as np
import pytest
from sklearn.base import clone

from isopca.clusterer import (
    Leaf,
    PCABaseline,
    PolyhedralPartition,
    Split,
    Unravel,
    UnravelConfig,
    baseline_pca_cluster,
    largest_gap_threshold,
    unravel,
)
from isopca.evaluation import partition_error, pancake_mixture, recursion_overlaps
from isopca.mixture import (
    AffineMap,
    GaussianMixture,
    isotropic_params,
    parallel_pancakes,
    random_affine,
    random_separable_mixture,
    sample,
)


def leaf_constraints(partition):
    """(leaf_id, [(split, goes_right)]) for every leaf."""
    out = []

    def walk(node, path):
        if isinstance(node, Leaf):
            out.append((node.leaf_id, path))
            return
        walk(node.left, path + [(node, False)])
        walk(node.right, path + [(node, True)])

    walk(partition.root, [])
    return out


def membership(partition, points):
    """Boolean (leaves, points) matrix computed from each leaf's halfspaces independently."""
    rows = []
    for _, path in sorted(leaf_constraints(partition), key=lambda item: item[0]):
        inside = np.ones(len(points), dtype=bool)
        for node, right in path:
            inside &= node.goes_right(points) == right
        rows.append(inside)
    return np.array(rows)


def stump(t=0.0, n=1):
    h = np.zeros(n)
    h[0] = 1.0
    return PolyhedralPartition(Split(h, t, AffineMap.identity(n), Leaf(), Leaf()), n)


class TestLargestGap:
    def test_two_clusters(self):
        t = largest_gap_threshold([-0.4, -0.39, 0.38, 0.41], 2)
        assert t == pytest.approx(-0.005, abs=1e-12)

    def test_uniform_has_no_gap(self):
        assert largest_gap_threshold(np.linspace(-0.5, 0.5, 100), 2) is None

    def test_single_gap_k3(self):
        assert largest_gap_threshold([-0.3, 0.3], 3) == 0.0

    def test_min_gap_depends_on_k(self):
        pts = [-0.1, 0.1]
        assert largest_gap_threshold(pts, 2) is None
        assert largest_gap_threshold(pts, 3) == pytest.approx(0.0)

    def test_clipping(self):
        # values beyond the interval pile up at its ends
        assert largest_gap_threshold([-3.0, 0.3, 0.4, 2.0], 2) == pytest.approx(-0.1)

    def test_all_outside_interval(self):
        assert largest_gap_threshold([-2.0, -1.5, 1.5, 3.0], 2) == 0.0
        assert largest_gap_threshold([1.0, 2.0, 3.0], 2) is None

    def test_tie_prefers_center(self):
        assert largest_gap_threshold([-0.5, -0.1, 0.3], 2) == pytest.approx(0.1)

    def test_tie_prefers_left(self):
        assert largest_gap_threshold([-0.45, -0.05, 0.05, 0.45], 2) == pytest.approx(-0.25)

    def test_needs_k2(self):
        with pytest.raises(ValueError):
            largest_gap_threshold([0.0, 1.0], 1)

    def test_avoids_true_mean_intervals(self, rng):
        """With h on the intermean axis the cut stays 1/(8(k-1)) away from the projected means."""
        for seed in range(10):
            w1 = rng.uniform(0.2, 0.8)
            _, iso = isotropic_params(parallel_pancakes(5, 1.0, 0.02, w1))
            pts = sample(iso, 20_000, seed=seed).points
            h = np.eye(5)[0] + rng.standard_normal(5) * 1e-4
            h /= np.linalg.norm(h)
            t = largest_gap_threshold(pts @ h, 2)
            assert t is not None
            for mu in iso.means:
                assert abs(t - h @ mu) > 1 / 8


class TestPartition:
    def test_single_leaf(self, rng):
        part = PolyhedralPartition(Leaf(witness=np.zeros(3)), 3)
        np.testing.assert_array_equal(part.predict(rng.standard_normal((10, 3))), 0)
        assert part.classify(np.ones(3)) == 0

    def test_tie_goes_right(self):
        part = stump(0.25)
        assert part.classify(np.array([0.25])) == 1
        assert part.classify(np.array([0.2499])) == 0

    def test_leaf_ids_dense_dfs(self):
        inner = Split(np.array([0.0, 1.0]), 0.0, AffineMap.identity(2), Leaf(), Leaf())
        part = PolyhedralPartition(Split(np.array([1.0, 0.0]), 0.0, AffineMap.identity(2), inner, Leaf()), 2)
        assert [leaf.leaf_id for leaf in part.leaves] == [0, 1, 2]
        assert part.classify(np.array([-1.0, -1.0])) == 0
        assert part.classify(np.array([-1.0, 1.0])) == 1
        assert part.classify(np.array([1.0, -5.0])) == 2

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            stump(0.0, 2).predict(np.zeros((3, 3)))

    def test_from_dict_rejects_sparse_ids(self):
        data = stump(0.0, 2).to_dict()
        data["right"]["leaf"] = 5
        with pytest.raises(ValueError, match="dense"):
            PolyhedralPartition.from_dict(data)

    def test_from_dict_missing_field(self):
        data = stump(0.0, 2).to_dict()
        del data["t"]
        with pytest.raises(ValueError, match="'t'"):
            PolyhedralPartition.from_dict(data)

    def test_dict_roundtrip(self, rng):
        mix = random_separable_mixture(3, 4, 1e-3, seed=0)
        part = unravel(sample(mix, 20_000, seed=1).points, UnravelConfig(k=3, wmin=mix.wmin))
        again = PolyhedralPartition.from_dict(part.to_dict())
        probes = rng.standard_normal((2000, 4)) * 3
        np.testing.assert_array_equal(again.predict(probes), part.predict(probes))


class TestUnravel:
    def test_k1_single_leaf(self, rng):
        part = unravel(rng.standard_normal((500, 3)), UnravelConfig(k=1, wmin=1.0))
        assert part.n_leaves == 1 and isinstance(part.root, Leaf)

    def test_balanced_pancakes(self):
        mix = pancake_mixture(10, 1e-4)
        part = unravel(sample(mix, 100_000, seed=0).points, UnravelConfig(k=2, wmin=0.5, seed=1))
        assert part.n_leaves == 2
        sides = part.predict(mix.means)
        assert sides[0] != sides[1]
        assert partition_error(part, mix, 20_000, seed=2).error <= 0.05

    def test_three_spherical(self):
        means = np.zeros((3, 5))
        means[0, 0], means[1, 1], means[2, :2] = 8.0, 8.0, [-8.0, -8.0]
        mix = GaussianMixture(np.full(3, 1 / 3), means, np.stack([np.eye(5)] * 3))
        part = unravel(sample(mix, 60_000, seed=3).points, UnravelConfig(k=3, wmin=1 / 3, seed=0))
        assert part.n_leaves == 3
        assert len(set(part.predict(means))) == 3
        assert partition_error(part, mix, 20_000, seed=4).error <= 0.05

    def test_leaves_cover_space(self, rng):
        mix = random_separable_mixture(3, 4, 1e-3, seed=2)
        part = unravel(sample(mix, 30_000, seed=0).points, UnravelConfig(k=3, wmin=mix.wmin))
        probes = rng.standard_normal((10_000, 4)) * 5
        member = membership(part, probes)
        np.testing.assert_array_equal(member.sum(axis=0), 1)
        np.testing.assert_array_equal(np.argmax(member, axis=0), part.predict(probes))

    def test_witness_inside_leaf(self):
        mix = random_separable_mixture(3, 4, 1e-3, seed=2)
        part = unravel(sample(mix, 30_000, seed=0).points, UnravelConfig(k=3, wmin=mix.wmin))
        for leaf in part.leaves:
            assert part.classify(leaf.witness) == leaf.leaf_id

    def test_deterministic(self):
        pts = sample(pancake_mixture(5, 1e-3), 20_000, seed=0).points
        cfg = UnravelConfig(k=2, wmin=0.5, seed=11)
        assert unravel(pts, cfg).to_dict() == unravel(pts, cfg).to_dict()

    def test_depth_limit(self):
        mix = random_separable_mixture(4, 5, 1e-3, seed=0)
        part = unravel(sample(mix, 40_000, seed=0).points, UnravelConfig(k=4, wmin=mix.wmin, max_depth=1))
        assert part.n_leaves <= 2

    def test_starved_cell_warns(self):
        pts = sample(pancake_mixture(6, 1e-3), 10, seed=0).points
        with pytest.warns(RuntimeWarning, match="only 10 points"):
            part = unravel(pts, UnravelConfig(k=2, wmin=0.5))
        assert part.n_leaves == 1

    def test_degenerate_cell_becomes_leaf(self):
        pts = np.ones((50, 3))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            part = unravel(pts, UnravelConfig(k=2, wmin=0.5))
        assert part.n_leaves == 1 and caught

    def test_config_validation(self):
        with pytest.raises(ValueError, match="wmin"):
            UnravelConfig(k=3, wmin=0.5).validate()
        with pytest.raises(ValueError, match="m1"):
            UnravelConfig(k=2, wmin=0.5, m1=3).validate(n=5)
        with pytest.raises(ValueError, match="alpha"):
            UnravelConfig(k=2, wmin=0.5, alpha=-1.0).validate()

    def test_explicit_sample_sizes(self):
        pts = sample(pancake_mixture(5, 1e-4), 30_000, seed=0).points
        part = unravel(pts, UnravelConfig(k=2, wmin=0.5, m1=10_000, m2=5_000))
        assert part.n_leaves == 2

    def test_affine_equivariance(self, rng):
        mix = pancake_mixture(6, 1e-4)
        pts = sample(mix, 50_000, seed=5).points
        amap = random_affine(6, 1e3, seed=9)
        cfg = UnravelConfig(k=2, wmin=0.5, seed=4)
        a = unravel(pts, cfg)
        b = unravel(amap(pts), cfg)
        probes = sample(mix, 10_000, seed=6).points
        la, lb = a.predict(probes), b.predict(amap(probes))
        assert a.n_leaves == b.n_leaves
        # same partition up to relabeling: the leaf map is a bijection
        pairs = set(zip(la.tolist(), lb.tolist()))
        assert len(pairs) == a.n_leaves

    def test_recursion_overlap_monotone(self):
        mix = random_separable_mixture(3, 5, 1e-3, seed=4)
        part = unravel(sample(mix, 60_000, seed=1).points, UnravelConfig(k=3, wmin=mix.wmin, seed=2))
        rows = recursion_overlaps(part, mix)
        assert rows
        for _, parent, kids in rows:
            assert max(kids) <= parent + 1e-9

    def test_fallback_recovers_noisy_branch(self):
        """At n=10 sampling noise can push the mean shift over its threshold; the
        spectral direction then still finds the gap and the split is flagged."""
        mix = pancake_mixture(10, 1e-4)
        used = 0
        for seed in range(6):
            pts = sample(mix, 100_000, seed=seed).points
            on = unravel(pts, UnravelConfig(k=2, wmin=0.5, seed=seed))
            off = unravel(pts, UnravelConfig(k=2, wmin=0.5, seed=seed, fallback=False))
            assert on.n_leaves == 2
            if on.root.fallback:
                used += 1
                assert on.root.choice.method.value == "Spectral"
                assert off.n_leaves == 1
            else:
                assert off.to_dict() == on.to_dict()
        assert used >= 1


class TestBaseline:
    def test_axis_aligned_pair(self):
        mix = GaussianMixture([0.5, 0.5], [[-5.0, 0.0, 0.0], [5.0, 0.0, 0.0]], np.stack([np.eye(3)] * 2))
        part = baseline_pca_cluster(sample(mix, 20_000, seed=0).points, 2)
        assert partition_error(part, mix, 10_000, seed=1).error <= 0.01

    def test_k1(self, rng):
        assert baseline_pca_cluster(rng.standard_normal((100, 3)), 1).n_leaves == 1

    def test_misses_pancakes(self):
        mix = parallel_pancakes(6, 1.0, 0.01)
        part = baseline_pca_cluster(sample(mix, 20_000, seed=0).points, 2)
        assert partition_error(part, mix, 10_000, seed=1).error >= 0.2


class TestEstimators:
    def test_unravel_fit_predict(self):
        mix = pancake_mixture(5, 1e-4)
        s = sample(mix, 30_000, seed=0)
        est = Unravel(k=2, random_state=3)
        labels = est.fit_predict(s.points)
        assert est.n_leaves_ == 2
        np.testing.assert_array_equal(labels, est.predict(s.points))
        agree = np.mean(labels == s.labels)
        assert max(agree, 1 - agree) >= 0.99

    def test_params_roundtrip(self):
        est = Unravel(k=3, wmin=0.2, fallback=False)
        params = clone(est).get_params()
        assert params["k"] == 3 and params["wmin"] == 0.2 and params["fallback"] is False

    def test_predict_before_fit(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            Unravel().predict(np.zeros((2, 2)))

    def test_baseline_estimator(self, rng):
        est = PCABaseline(k=2).fit(rng.standard_normal((200, 3)))
        assert est.labels_.shape == (200,)
