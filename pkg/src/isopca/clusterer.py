"""Recursive halfspace clustering of Gaussian mixtures (Unravel)."""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._linalg import sym_eigh
from .isotropy import DegenerateCellError, whiten
from .mixture import AffineMap
from .reweighting import default_alpha, sample_reweighted_moments
from .separator import MEAN_SHIFT_CONSTANT, DirectionChoice, Method, alternate_direction, choose_direction

logger = logging.getLogger(__name__)

GAP_INTERVAL = 0.5
TIE_TOL = 1e-12


@dataclass(eq=False)
class Leaf:
    leaf_id: int = -1
    witness: Optional[np.ndarray] = None
    size: int = 0


@dataclass(eq=False)
class Split:
    """Internal node: points with ``h . whiten(x) >= t`` go right."""

    h: np.ndarray
    t: float
    whiten: AffineMap
    left: "Node"
    right: "Node"
    choice: Optional[DirectionChoice] = None
    fallback: bool = False

    def goes_right(self, points):
        return self.whiten.apply(points) @ self.h >= self.t


Node = Union[Leaf, Split]


@dataclass(eq=False)
class PolyhedralPartition:
    """Binary tree of halfspace tests; each leaf is a polyhedron of R^n."""

    root: Node
    n: int
    leaves: list = field(default_factory=list)

    def __post_init__(self):
        if not self.leaves:
            self.leaves = list(_iter_leaves(self.root))
            for i, leaf in enumerate(self.leaves):
                leaf.leaf_id = i

    @property
    def n_leaves(self):
        return len(self.leaves)

    def splits(self):
        """Internal nodes with their root paths (tuples of 0=left, 1=right)."""
        stack = [((), self.root)]
        while stack:
            path, node = stack.pop()
            if isinstance(node, Split):
                yield path, node
                stack.append((path + (1,), node.right))
                stack.append((path + (0,), node.left))

    def predict(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.n:
            raise ValueError(f"points have dimension {points.shape[1]}, partition expects {self.n}")
        out = np.empty(points.shape[0], dtype=int)
        stack = [(self.root, np.arange(points.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if isinstance(node, Leaf):
                out[idx] = node.leaf_id
                continue
            right = node.goes_right(points[idx])
            stack.append((node.left, idx[~right]))
            stack.append((node.right, idx[right]))
        return out

    def classify(self, x):
        return int(self.predict(np.asarray(x, dtype=float)[None, :])[0])

    def to_dict(self):
        return _node_to_dict(self.root)

    @classmethod
    def from_dict(cls, data):
        root = _node_from_dict(data, path="$")
        n = _infer_dim(root)
        leaves = sorted(_iter_leaves(root), key=lambda leaf: leaf.leaf_id)
        ids = [leaf.leaf_id for leaf in leaves]
        if ids != list(range(len(leaves))):
            raise ValueError(f"leaf ids must be dense 0..{len(leaves) - 1}, got {ids}")
        return cls(root, n, leaves)


def _iter_leaves(node):
    if isinstance(node, Leaf):
        yield node
    else:
        yield from _iter_leaves(node.left)
        yield from _iter_leaves(node.right)


def _infer_dim(node):
    if isinstance(node, Split):
        return node.h.shape[0]
    if node.witness is not None:
        return node.witness.shape[0]
    raise ValueError("cannot infer dimension from a leaf without a witness point")


def _node_to_dict(node):
    if isinstance(node, Leaf):
        out = {"leaf": node.leaf_id, "size": node.size}
        if node.witness is not None:
            out["witness"] = node.witness.tolist()
        return out
    out = {
        "h": node.h.tolist(),
        "t": float(node.t),
        "whiten": {"linear": node.whiten.linear.tolist(), "offset": node.whiten.offset.tolist()},
        "fallback": node.fallback,
    }
    if node.choice is not None:
        out["choice"] = node.choice.to_dict()
    out["left"] = _node_to_dict(node.left)
    out["right"] = _node_to_dict(node.right)
    return out


def _node_from_dict(data, path):
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected an object")
    if "leaf" in data:
        witness = data.get("witness")
        return Leaf(int(data["leaf"]), None if witness is None else np.asarray(witness, dtype=float), int(data.get("size", 0)))
    for key in ("h", "t", "whiten", "left", "right"):
        if key not in data:
            raise ValueError(f"{path}: missing field {key!r}")
    try:
        amap = AffineMap(data["whiten"]["linear"], data["whiten"]["offset"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}.whiten: {exc}") from exc
    h = np.asarray(data["h"], dtype=float)
    if h.shape != (amap.n,):
        raise ValueError(f"{path}.h: length {h.shape} does not match whitening dimension {amap.n}")
    choice = None
    if "choice" in data:
        c = data["choice"]
        choice = DirectionChoice(
            np.asarray(c["h"], dtype=float), Method(c["method"]), float(c["mean_shift_norm"]),
            float(c["threshold"]), bool(c.get("degenerate", False)),
        )
    return Split(
        h, float(data["t"]), amap,
        _node_from_dict(data["left"], path + ".left"),
        _node_from_dict(data["right"], path + ".right"),
        choice, bool(data.get("fallback", False)),
    )


def largest_gap_threshold(projections, k):
    """Midpoint of the largest gap among projections clipped to [-1/2, 1/2].

    Returns ``None`` when the largest gap is shorter than ``1 / (4 (k - 1))``
    or fewer than two distinct clipped values exist. Equal gaps are broken by
    the midpoint closest to zero, then the leftmost.
    """
    if k < 2:
        raise ValueError("gap clustering needs k >= 2")
    p = np.unique(np.clip(np.asarray(projections, dtype=float), -GAP_INTERVAL, GAP_INTERVAL))
    if p.size < 2:
        return None
    gaps = np.diff(p)
    best = gaps.max()
    if best < 1.0 / (4.0 * (k - 1)):
        return None
    cand = np.flatnonzero(gaps >= best - TIE_TOL)
    mids = 0.5 * (p[cand] + p[cand + 1])
    return float(mids[np.argmin(np.abs(mids))])


@dataclass
class UnravelConfig:
    """Parameters of the recursive clusterer.

    ``m1`` points per node are whitened and reweighted; a disjoint set of ``m2``
    points locates the gap. ``None`` splits each node's points 2/3 : 1/3.
    ``alpha=None`` means ``n / wmin``. With ``fallback`` the direction from the
    branch not taken is tried when the first one shows no gap.
    """

    k: int
    wmin: float
    alpha: Optional[float] = None
    m1: Optional[int] = None
    m2: Optional[int] = None
    seed: int = 0
    max_depth: Optional[int] = None
    eps_floor: Optional[float] = None
    mean_shift_constant: float = MEAN_SHIFT_CONSTANT
    fallback: bool = True

    def validate(self, n=None):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0 < self.wmin <= 1.0 / self.k + 1e-12:
            raise ValueError(f"wmin must lie in (0, 1/k] = (0, {1.0 / self.k:.4g}]")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if n is not None:
            for name in ("m1", "m2"):
                val = getattr(self, name)
                if val is not None and val < n + 1:
                    raise ValueError(f"{name} must be at least n + 1 = {n + 1}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")

    @property
    def depth_limit(self):
        return 2 * self.k if self.max_depth is None else self.max_depth


def _node_rng(seed, path):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def _split_counts(total, m1, m2):
    if m1 is None and m2 is None:
        m2 = total // 3
        return total - m2, m2
    if m1 is None:
        m2 = min(m2, total // 3)
        return total - m2, m2
    if m2 is None:
        m1 = min(m1, total - total // 3)
        return m1, total - m1
    if m1 + m2 > total:
        scale = total / (m1 + m2)
        return int(m1 * scale), int(m2 * scale)
    return m1, m2


def _unravel_splitter(cell, rng, config):
    """One step of isotropy, reweighting, direction choice and gap search."""
    n = cell.shape[1]
    m1, m2 = _split_counts(cell.shape[0], config.m1, config.m2)
    perm = rng.permutation(cell.shape[0])
    amap, Y = whiten(cell[perm[:m1]], config.eps_floor)
    alpha = config.alpha if config.alpha is not None else default_alpha(n, config.wmin)
    moments = sample_reweighted_moments(Y, alpha)
    choice = choose_direction(moments, config.wmin, config.mean_shift_constant)
    gap_points = amap.apply(cell[perm[m1 : m1 + m2]])
    t = largest_gap_threshold(gap_points @ choice.h, config.k)
    if t is not None:
        return amap, choice.h, t, choice, False
    if config.fallback:
        alt = alternate_direction(choice, moments)
        if alt is not None:
            t = largest_gap_threshold(gap_points @ alt.h, config.k)
            if t is not None:
                return amap, alt.h, t, alt, True
    return None


def _pca_splitter(cell, rng, config):
    """Top principal component of the raw cell, projections standardized."""
    m1, m2 = _split_counts(cell.shape[0], config.m1, config.m2)
    perm = rng.permutation(cell.shape[0])
    fit = cell[perm[:m1]]
    mean = fit.mean(axis=0)
    vals, vecs = sym_eigh(np.cov(fit.T, bias=True).reshape(cell.shape[1], cell.shape[1]))
    if vals[0] <= 0:
        return None
    h = vecs[:, 0]
    scale = 1.0 / np.sqrt(vals[0])
    amap = AffineMap(scale * np.eye(cell.shape[1]), -scale * mean)
    t = largest_gap_threshold(amap.apply(cell[perm[m1 : m1 + m2]]) @ h, config.k)
    if t is None:
        return None
    return amap, h, t, None, False


def _grow(points, config, splitter):
    n = points.shape[1]
    limit = config.depth_limit

    def build(cell, path):
        leaf = Leaf(witness=cell[0].copy() if len(cell) else None, size=len(cell))
        if config.k < 2 or len(path) >= limit:
            return leaf
        if len(cell) < 2 * (n + 1):
            warnings.warn(f"cell {path} has only {len(cell)} points; making it a leaf", RuntimeWarning, stacklevel=3)
            return leaf
        try:
            found = splitter(cell, _node_rng(config.seed, path), config)
        except (DegenerateCellError, ValueError, np.linalg.LinAlgError) as exc:
            warnings.warn(f"cell {path} could not be split ({exc}); making it a leaf", RuntimeWarning, stacklevel=3)
            return leaf
        if found is None:
            return leaf
        amap, h, t, choice, fallback = found
        right = amap.apply(cell) @ h >= t
        logger.debug("split %s: %d left, %d right, t=%.4g", path, (~right).sum(), right.sum(), t)
        return Split(h, t, amap, build(cell[~right], path + (0,)), build(cell[right], path + (1,)), choice, fallback)

    return PolyhedralPartition(build(points, ()), n)


def unravel(points, config):
    """Partition R^n into polyhedra, ideally one per mixture component."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    config.validate(points.shape[1])
    return _grow(points, config, _unravel_splitter)


def baseline_pca_cluster(points, k, seed=0, max_depth=None):
    """Vanilla spectral splitter: top principal component of the raw cell and
    the same largest-gap rule, without isotropy or reweighting."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    config = UnravelConfig(k=k, wmin=1.0 / max(k, 1), seed=seed, max_depth=max_depth)
    config.validate(points.shape[1])
    return _grow(points, config, _pca_splitter)


class Unravel(ClusterMixin, BaseEstimator):
    """Affine-invariant clustering of Gaussian mixtures by isotropic PCA.

    Each node of a binary tree whitens the points in its cell, reweights them by
    ``exp(-||x||^2 / (2 alpha))``, picks either the reweighted mean or the top
    eigenvector of the reweighted second moment as a direction ``h``, and cuts
    at the midpoint of the largest gap of the projections in [-1/2, 1/2].

    Parameters
    ----------
    k : int, default=2
        Number of components; sets the minimum gap ``1 / (4 (k - 1))``.
    wmin : float or None, default=None
        Lower bound on the smallest mixing weight. ``None`` means ``1 / k``.
    alpha : float or None, default=None
        Reweighting width; ``None`` means ``n_features / wmin``.
    m1, m2 : int or None, default=None
        Per-node sample sizes for moments and gap search.
    max_depth : int or None, default=None
        Depth limit; ``None`` means ``2 k``.
    eps_floor : float or None, default=None
    mean_shift_constant : float, default=32.0
    fallback : bool, default=True
    random_state : int, default=0

    Attributes
    ----------
    partition_ : PolyhedralPartition
    labels_ : ndarray of shape (n_samples,)
    n_leaves_ : int
    """

    def __init__(self, k=2, wmin=None, alpha=None, m1=None, m2=None, max_depth=None,
                 eps_floor=None, mean_shift_constant=MEAN_SHIFT_CONSTANT, fallback=True, random_state=0):
        self.k = k
        self.wmin = wmin
        self.alpha = alpha
        self.m1 = m1
        self.m2 = m2
        self.max_depth = max_depth
        self.eps_floor = eps_floor
        self.mean_shift_constant = mean_shift_constant
        self.fallback = fallback
        self.random_state = random_state

    def _config(self):
        return UnravelConfig(
            k=self.k, wmin=self.wmin if self.wmin is not None else 1.0 / self.k, alpha=self.alpha,
            m1=self.m1, m2=self.m2, seed=int(self.random_state), max_depth=self.max_depth,
            eps_floor=self.eps_floor, mean_shift_constant=self.mean_shift_constant, fallback=self.fallback,
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        self.partition_ = unravel(X, self._config())
        self.n_features_in_ = X.shape[1]
        self.n_leaves_ = self.partition_.n_leaves
        self.labels_ = self.partition_.predict(X)
        return self

    def predict(self, X):
        check_is_fitted(self, "partition_")
        X = check_array(X, dtype=np.float64)
        return self.partition_.predict(X)


class PCABaseline(ClusterMixin, BaseEstimator):
    """Top-principal-component splitter without isotropy or reweighting."""

    def __init__(self, k=2, max_depth=None, random_state=0):
        self.k = k
        self.max_depth = max_depth
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        self.partition_ = baseline_pca_cluster(X, self.k, int(self.random_state), self.max_depth)
        self.n_features_in_ = X.shape[1]
        self.n_leaves_ = self.partition_.n_leaves
        self.labels_ = self.partition_.predict(X)
        return self

    def predict(self, X):
        check_is_fitted(self, "partition_")
        return self.partition_.predict(check_array(X, dtype=np.float64))
