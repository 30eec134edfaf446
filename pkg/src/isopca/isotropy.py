"""Empirical moments and whitening of point sets (the isotropy step)."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._linalg import sym_eigh
from .mixture import AffineMap

DEFAULT_RELATIVE_FLOOR = 1e-8


class DegenerateCellError(ValueError):
    """Raised when every direction of a point set has variance below the floor."""


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    mean: np.ndarray
    covariance: np.ndarray
    count: int


def estimate_moments(points):
    """Sample mean and covariance (divisor m) of an (m, n) array."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = points.shape[0]
    if m < 2:
        raise ValueError(f"need at least 2 points to estimate moments, got {m}")
    mean = points.mean(axis=0)
    centered = points - mean
    cov = centered.T @ centered / m
    return MomentEstimate(mean, 0.5 * (cov + cov.T), m)


def whitening_map(moments, eps_floor=None):
    """Symmetric whitening map for the given moments.

    Eigenvalues below ``eps_floor`` (default ``1e-8 * largest``) are raised to
    the floor, so degenerate directions are scaled by ``eps_floor ** -0.5``.
    """
    vals, vecs = sym_eigh(moments.covariance)
    if eps_floor is None:
        eps_floor = DEFAULT_RELATIVE_FLOOR * max(vals[0], 0.0)
    if vals[0] < eps_floor or vals[0] <= 0:
        raise DegenerateCellError(
            f"all covariance eigenvalues are below the floor {eps_floor:.3g} (largest {vals[0]:.3g})"
        )
    vals = np.maximum(vals, eps_floor)
    W = (vecs / np.sqrt(vals)) @ vecs.T
    W = 0.5 * (W + W.T)
    return AffineMap(W, -W @ moments.mean)


def whiten(points, eps_floor=None):
    """Put a point set in isotropic position.

    Returns the whitening ``AffineMap`` and the transformed points. The output
    has sample mean zero and identity sample covariance, except along
    directions whose variance was floored.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m, n = points.shape
    if m < n + 1:
        raise ValueError(f"whitening {n}-dimensional points needs at least {n + 1} of them, got {m}")
    amap = whitening_map(estimate_moments(points), eps_floor)
    return amap, amap.apply(points)


class IsotropicWhitener(TransformerMixin, BaseEstimator):
    """Affine transformer mapping data to isotropic position.

    Parameters
    ----------
    eps_floor : float or None, default=None
        Variance floor for near-degenerate directions. ``None`` means
        ``1e-8`` times the largest variance.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    covariance_ : ndarray of shape (n_features, n_features)
    affine_map_ : AffineMap
    n_features_in_ : int
    """

    def __init__(self, eps_floor=None):
        self.eps_floor = eps_floor

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        moments = estimate_moments(X)
        self.n_features_in_ = X.shape[1]
        self.mean_ = moments.mean
        self.covariance_ = moments.covariance
        self.affine_map_ = whitening_map(moments, self.eps_floor)
        return self

    def transform(self, X):
        check_is_fitted(self, "affine_map_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.affine_map_.apply(X)

    def inverse_transform(self, X):
        check_is_fitted(self, "affine_map_")
        X = check_array(X, dtype=np.float64)
        return self.affine_map_.inverse().apply(X)
