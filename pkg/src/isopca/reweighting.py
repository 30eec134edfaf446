"""Gaussian reweighting of isotropic data: sample estimates and exact
closed-form moments.

All weights are ``exp(-||x||^2 / (2 alpha))``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._linalg import sym_eigh
from .fisher import check_orthonormal, covariance_blocks
from .isotropy import whiten


@dataclass(frozen=True, eq=False)
class ReweightedMoments:
    """Reweighted mean ``u`` and second moment ``M`` at smoothing ``alpha``.

    ``count`` is the number of points used (``None`` for exact moments) and
    ``rho`` holds per-component reweighting factors when known.
    """

    u: np.ndarray
    M: np.ndarray
    alpha: float
    count: Optional[int] = None
    rho: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True, eq=False)
class ComponentReweighting:
    """Effect of the reweighting on one Gaussian component.

    ``E[f(x) exp(-||x||^2/(2 alpha))] = rho * E[f(y)]`` with
    ``y ~ N(mean_y, cov_y)``.
    """

    rho: float
    mean_y: np.ndarray
    cov_y: np.ndarray


def default_alpha(n, wmin):
    return n / wmin


def gaussian_weights(points, alpha):
    points = np.asarray(points, dtype=float)
    return np.exp(-np.einsum("ij,ij->i", points, points) / (2.0 * alpha))


def sample_reweighted_moments(points, alpha):
    """Empirical reweighted mean and second moment of a point set."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = points.shape[0]
    if m < 1:
        raise ValueError("need at least one point")
    wx = points * gaussian_weights(points, alpha)[:, None]
    u = wx.sum(axis=0) / m
    M = wx.T @ points / m
    return ReweightedMoments(u, 0.5 * (M + M.T), float(alpha), count=m)


def reweight_gaussian(mu, sigma, alpha):
    """Closed-form reweighting of ``N(mu, sigma)``.

    With ``sigma = Q diag(lam) Q^T`` and ``W = diag(alpha / (alpha + lam))``:
    ``rho = det(W)^(1/2) exp(-mu^T Q W Q^T mu / (2 alpha))``, the perturbed mean
    is ``Q W Q^T mu`` and the perturbed covariance ``Q W diag(lam) Q^T``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    lam, Q = sym_eigh(sigma)
    if lam[-1] <= 0:
        raise ValueError(f"covariance is not positive definite (smallest eigenvalue {lam[-1]:.3g})")
    w = alpha / (alpha + lam)
    mu_rot = Q.T @ mu
    mean_y = Q @ (w * mu_rot)
    cov_y = (Q * (w * lam)) @ Q.T
    # log-domain to stay finite in high dimension
    log_rho = 0.5 * np.sum(np.log(w)) - (mu_rot @ (w * mu_rot)) / (2.0 * alpha)
    return ComponentReweighting(float(np.exp(log_rho)), mean_y, 0.5 * (cov_y + cov_y.T))


def component_reweightings(mix, alpha):
    return [reweight_gaussian(mix.means[i], mix.covariances[i], alpha) for i in range(mix.k)]


def exact_mixture_moments(mix, alpha):
    """Exact reweighted moments of a Gaussian mixture (no series truncation)."""
    comps = component_reweightings(mix, alpha)
    rho = np.array([c.rho for c in comps])
    u = np.zeros(mix.n)
    M = np.zeros((mix.n, mix.n))
    for w, c in zip(mix.weights, comps):
        u += w * c.rho * c.mean_y
        M += w * c.rho * (c.cov_y + np.outer(c.mean_y, c.mean_y))
    return ReweightedMoments(u, 0.5 * (M + M.T), float(alpha), rho=rho)


def ideal_mean_shift(mix, alpha):
    """``v = sum_i w_i rho_i mu_i``, the mean shift with the covariance terms dropped."""
    rho = np.array([c.rho for c in component_reweightings(mix, alpha)])
    return (mix.weights * rho) @ mix.means


def exact_gamma(mix, alpha, intermean_basis):
    """Block-diagonal idealization of the reweighted second moment.

    In the frame whose first k-1 axes span ``intermean_basis`` the blocks are
    ``sum_i rho_i (w_i mu~_i mu~_i^T + A_i)`` and
    ``sum_i rho_i D_i - rho_i / (w_i alpha) D_i^2``, with ``A_i, D_i`` the
    diagonal blocks of ``w_i Sigma_i``. The result is rotated back to the
    original coordinates.
    """
    if not mix.is_isotropic(1e-8):
        raise ValueError("exact_gamma needs an isotropic mixture")
    basis = check_orthonormal(np.asarray(intermean_basis, dtype=float).reshape(mix.n, -1))
    r = basis.shape[1]
    A, _, D, mu_t, frame = covariance_blocks(mix, basis)
    rho = np.array([c.rho for c in component_reweightings(mix, alpha)])
    n = mix.n
    g = np.zeros((n, n))
    for i in range(mix.k):
        w = mix.weights[i]
        g[:r, :r] += rho[i] * (w * np.outer(mu_t[i], mu_t[i]) + A[i])
        g[r:, r:] += rho[i] * D[i] - rho[i] / (w * alpha) * (D[i] @ D[i])
    gamma = frame @ g @ frame.T
    return 0.5 * (gamma + gamma.T)


class IsotropicPCA(TransformerMixin, BaseEstimator):
    """PCA of Gaussian-reweighted data in isotropic position.

    After whitening, standard PCA sees identity covariance. Reweighting by
    ``exp(-||x||^2 / (2 alpha))`` shrinks the second moment less along
    directions where the mass is concentrated away from the origin, and the
    top eigenvectors of the reweighted second moment expose them.

    Parameters
    ----------
    n_components : int, default=1
    alpha : float or None, default=None
        Reweighting width. ``None`` uses ``n_features / wmin``.
    wmin : float, default=0.5
        Lower bound on the mixing weights; only used for the default ``alpha``.
    eps_floor : float or None, default=None
        Variance floor passed to the whitening step.

    Attributes
    ----------
    whitening_ : AffineMap
    moments_ : ReweightedMoments
    components_ : ndarray of shape (n_components, n_features)
        Directions in whitened coordinates.
    eigenvalues_ : ndarray of shape (n_features,)
    """

    def __init__(self, n_components=1, alpha=None, wmin=0.5, eps_floor=None):
        self.n_components = n_components
        self.alpha = alpha
        self.wmin = wmin
        self.eps_floor = eps_floor

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        n = X.shape[1]
        if not 1 <= self.n_components <= n:
            raise ValueError(f"n_components must be in [1, {n}]")
        alpha = self.alpha if self.alpha is not None else default_alpha(n, self.wmin)
        self.whitening_, Y = whiten(X, self.eps_floor)
        self.moments_ = sample_reweighted_moments(Y, alpha)
        vals, vecs = sym_eigh(self.moments_.M)
        self.eigenvalues_ = vals
        self.components_ = vecs[:, : self.n_components].T
        self.n_features_in_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        return self.whitening_.apply(X) @ self.components_.T
