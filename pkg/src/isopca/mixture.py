"""Gaussian mixture models: representation, sampling, affine pushforward and
generators for the test instances used throughout the package.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import orthonormalize, random_orthogonal, sym_eigh

SYMMETRY_TOL = 1e-12
WEIGHT_TOL = 1e-12


class DegenerateMixtureError(ValueError):
    """Raised when a mixture's total covariance or mean span is rank deficient."""


def _as_spd(cov, name="covariance"):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError(f"{name} must be square, got shape {cov.shape}")
    scale = max(1.0, float(np.max(np.abs(cov))))
    asym = float(np.max(np.abs(cov - cov.T)))
    if asym > SYMMETRY_TOL * scale:
        i, j = np.unravel_index(np.argmax(np.abs(cov - cov.T)), cov.shape)
        raise ValueError(f"{name} is not symmetric: entries ({i},{j}) and ({j},{i}) differ by {asym:.3g}")
    lam_min = float(np.linalg.eigvalsh(cov)[0])
    if lam_min <= SYMMETRY_TOL * float(np.trace(cov)):
        raise ValueError(f"{name} is not positive definite (smallest eigenvalue {lam_min:.3g})")
    return cov


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """A finite mixture of Gaussians ``sum_i w_i N(mu_i, Sigma_i)``.

    ``weights`` has shape (k,), ``means`` (k, n), ``covariances`` (k, n, n).
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        cov = np.asarray(self.covariances, dtype=float)
        if cov.ndim == 2:
            cov = cov[None]
        k = w.shape[0]
        if k < 1 or mu.shape[0] != k or cov.shape[0] != k:
            raise ValueError(
                f"inconsistent component counts: weights {w.shape}, means {mu.shape}, covariances {cov.shape}"
            )
        n = mu.shape[1]
        if n < 1 or cov.shape[1:] != (n, n):
            raise ValueError(f"covariances must have shape ({k}, {n}, {n}), got {cov.shape}")
        if np.any(w <= 0):
            raise ValueError("every mixing weight must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        for i in range(k):
            _as_spd(cov[i], name=f"covariances[{i}]")
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def k(self):
        return self.weights.shape[0]

    @property
    def n(self):
        return self.means.shape[1]

    @property
    def wmin(self):
        return float(self.weights.min())

    def mean(self):
        return self.weights @ self.means

    def second_moment(self):
        """``sum_i w_i (Sigma_i + mu_i mu_i^T)``."""
        outer = np.einsum("ki,kj->kij", self.means, self.means)
        return np.einsum("k,kij->ij", self.weights, self.covariances + outer)

    def covariance(self):
        mu = self.mean()
        return self.second_moment() - np.outer(mu, mu)

    def within_covariance(self):
        """Averaged intra-component covariance ``sum_i w_i Sigma_i``."""
        return np.einsum("k,kij->ij", self.weights, self.covariances)

    def subset(self, components):
        """Sub-mixture over ``components`` with renormalized weights."""
        idx = np.asarray(sorted(components), dtype=int)
        w = self.weights[idx]
        return GaussianMixture(w / w.sum(), self.means[idx], self.covariances[idx])

    def is_isotropic(self, tol=1e-8):
        return (
            np.linalg.norm(self.mean()) <= tol
            and np.linalg.norm(self.second_moment() - np.eye(self.n), 2) <= tol
        )

    def allclose(self, other, atol=1e-9):
        return (
            self.k == other.k
            and self.n == other.n
            and np.allclose(self.weights, other.weights, atol=atol, rtol=0)
            and np.allclose(self.means, other.means, atol=atol, rtol=0)
            and np.allclose(self.covariances, other.covariances, atol=atol, rtol=0)
        )


@dataclass(frozen=True, eq=False)
class LabeledSample:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        lab = np.asarray(self.labels, dtype=int)
        if lab.shape != (pts.shape[0],):
            raise ValueError(f"{lab.shape[0]} labels for {pts.shape[0]} points")
        if lab.size and lab.min() < 0:
            raise ValueError("labels must be non-negative component indices")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", lab)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class AffineMap:
    """The map ``x -> linear @ x + offset``."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        lin = np.atleast_2d(np.asarray(self.linear, dtype=float))
        off = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if lin.shape[0] != lin.shape[1] or off.shape != (lin.shape[0],):
            raise ValueError(f"bad affine map shapes: linear {lin.shape}, offset {off.shape}")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", off)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), np.zeros(n))

    @property
    def n(self):
        return self.offset.shape[0]

    def condition_number(self):
        return float(np.linalg.cond(self.linear))

    def is_invertible(self):
        return bool(np.isfinite(self.condition_number()) and self.condition_number() < 1e15)

    def apply(self, points):
        points = np.asarray(points, dtype=float)
        return points @ self.linear.T + self.offset

    __call__ = apply

    def inverse(self):
        if not self.is_invertible():
            raise np.linalg.LinAlgError("affine map is singular")
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.offset)

    def compose(self, inner):
        """The map ``x -> self(inner(x))``."""
        return AffineMap(self.linear @ inner.linear, self.linear @ inner.offset + self.offset)


def cholesky_factors(mix):
    return np.stack([np.linalg.cholesky(c) for c in mix.covariances])


def draw(mix, labels, z, factors=None):
    """Deterministic part of sampling: ``x = mu_l + L_l z`` for given labels and
    standard normal draws ``z``. ``factors`` defaults to Cholesky factors; pass
    ``A @ L_i`` to push shared draws through an affine map."""
    if factors is None:
        factors = cholesky_factors(mix)
    labels = np.asarray(labels, dtype=int)
    out = np.einsum("mij,mj->mi", factors[labels], z)
    return out + mix.means[labels]


def sample(mix, m, seed=None):
    """Draw ``m`` i.i.d. labeled points from ``mix``. Same (mix, m, seed) -> same output."""
    if m < 1:
        raise ValueError("sample size must be at least 1")
    rng = np.random.default_rng(seed)
    labels = rng.choice(mix.k, size=m, p=mix.weights)
    z = rng.standard_normal((m, mix.n))
    return LabeledSample(draw(mix, labels, z), labels)


def apply_affine(mix, amap):
    """Pushforward of ``mix`` under ``x -> W x + b``."""
    if not amap.is_invertible():
        raise np.linalg.LinAlgError("affine map is singular")
    if amap.n != mix.n:
        raise ValueError(f"map dimension {amap.n} does not match mixture dimension {mix.n}")
    W = amap.linear
    means = mix.means @ W.T + amap.offset
    covs = np.einsum("ij,kjl,ml->kim", W, mix.covariances, W)
    covs = 0.5 * (covs + np.transpose(covs, (0, 2, 1)))
    return GaussianMixture(mix.weights, means, covs)


def isotropic_params(mix):
    """Affine map placing ``mix`` in isotropic position, computed from parameters.

    Uses symmetric whitening ``W = Q diag(lambda^-1/2) Q^T`` of the total covariance.
    """
    vals, vecs = sym_eigh(mix.covariance())
    if vals[-1] <= SYMMETRY_TOL * max(vals[0], 0.0) or vals[-1] <= 0:
        raise DegenerateMixtureError(
            f"total covariance is rank deficient: smallest eigenvalue {vals[-1]:.3g} "
            f"(largest {vals[0]:.3g})"
        )
    amap = _symmetric_whitening(vals, vecs, mix.mean())
    iso = apply_affine(mix, amap)
    # one refinement pass: ill-conditioned inputs leave O(cond * eps) residue
    vals, vecs = sym_eigh(iso.covariance())
    step = _symmetric_whitening(vals, vecs, iso.mean())
    iso = apply_affine(iso, step)
    amap = step.compose(amap)
    means = iso.means - iso.mean()
    return amap, GaussianMixture(iso.weights, means, iso.covariances)


def _symmetric_whitening(vals, vecs, mean):
    W = (vecs / np.sqrt(vals)) @ vecs.T
    W = 0.5 * (W + W.T)
    return AffineMap(W, -W @ mean)


def parallel_pancakes(n, d=1.0, sigma_thin=0.01, w1=0.5):
    """Two Gaussians narrow along e1 and unit variance elsewhere, separated along e1.

    Component 0 sits at ``-2 d w2 e1`` and component 1 at ``2 d w1 e1``: that is
    ``-/+ d e1`` for equal weights, and weighted mean zero otherwise.
    """
    if n < 2:
        raise ValueError("pancakes need n >= 2")
    if sigma_thin <= 0 or not 0 < w1 < 1:
        raise ValueError("need sigma_thin > 0 and 0 < w1 < 1")
    w2 = 1.0 - w1
    means = np.zeros((2, n))
    means[0, 0] = -2.0 * d * w2
    means[1, 0] = 2.0 * d * w1
    cov = np.eye(n)
    cov[0, 0] = sigma_thin**2
    return GaussianMixture(np.array([w1, w2]), means, np.stack([cov, cov]))


def _simplex_vertices(k):
    """k points in R^(k-1) forming a regular simplex centered at 0 with unit-norm vertices."""
    basis = orthonormalize(np.eye(k) - 1.0 / k)
    verts = (np.eye(k) - 1.0 / k) @ basis
    return verts / np.linalg.norm(verts[0])


def _random_spd(n, rng, ridge=0.1):
    g = rng.standard_normal((n, n))
    s = g @ g.T / n + ridge * np.eye(n)
    return s / np.trace(s) * n


def _scaled_mixture(weights, means, base_covs, q, scale):
    k, n = means.shape
    s = np.ones(n)
    s[: k - 1] = scale
    covs = base_covs * s[None, :, None] * s[None, None, :]
    return GaussianMixture(weights, means @ q.T, np.einsum("ij,kjl,ml->kim", q, covs, q))


def random_separable_mixture(k, n, target_overlap, seed=None, max_iter=100):
    """Random mixture whose overlap is within 20% of ``target_overlap``.

    Means sit on a regular simplex in the first k-1 coordinates, covariances are
    random Wishart-style products, and the intra-component variance inside the
    intermean subspace is rescaled by bisection to hit the target. The result is
    randomly rotated and centered, but not isotropic.
    """
    from .fisher import overlap

    if k < 2 or n < k - 1:
        raise ValueError("need k >= 2 and n >= k - 1")
    if not 0 < target_overlap < 1:
        raise ValueError("target overlap must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    weights = 1.0 + rng.random(k)
    weights /= weights.sum()
    means = np.zeros((k, n))
    means[:, : k - 1] = 2.0 * _simplex_vertices(k)
    means -= weights @ means
    base = np.stack([_random_spd(n, rng) for _ in range(k)])
    q = random_orthogonal(n, rng)

    lo, hi = np.log(1e-8), np.log(1e4)
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        mix = _scaled_mixture(weights, means, base, q, np.exp(mid))
        phi = overlap(mix)
        if best is None or abs(np.log(phi / target_overlap)) < abs(np.log(best[1] / target_overlap)):
            best = (mix, phi)
        if abs(phi - target_overlap) <= 1e-3 * target_overlap:
            break
        if phi < target_overlap:
            lo = mid
        else:
            hi = mid
    mix, phi = best
    if abs(phi - target_overlap) > 0.2 * target_overlap:
        raise DegenerateMixtureError(
            f"could not reach overlap {target_overlap:g} (closest {phi:.3g}) after {max_iter} rescale iterations"
        )
    return mix


def symmetric_mixture(k, n, spread=0.1, seed=None):
    """Equal-weight mixture whose components are images of one Gaussian under a
    cyclic coordinate permutation.

    Every component has the same reweighting factor in isotropic position, so
    this is the balanced case of the spectral analysis. ``spread`` scales the
    shared covariance relative to the mean separation. Needs ``n >= k``.
    """
    if k < 2 or n < k:
        raise ValueError("need k >= 2 and n >= k")
    rng = np.random.default_rng(seed)
    perm = np.eye(n)
    perm[:k, :k] = np.roll(np.eye(k), 1, axis=0)
    mu0 = np.zeros(n)
    mu0[:k] = np.eye(k)[0] - 1.0 / k
    cov0 = spread * _random_spd(n, rng)
    means, covs = [], []
    p = np.eye(n)
    for _ in range(k):
        means.append(p @ mu0)
        covs.append(p @ cov0 @ p.T)
        p = perm @ p
    return GaussianMixture(np.full(k, 1.0 / k), np.array(means), np.array(covs))


def random_affine(n, condition_number, seed=None, offset_scale=1.0):
    """Random invertible affine map with prescribed condition number."""
    rng = np.random.default_rng(seed)
    u = random_orthogonal(n, rng)
    v = random_orthogonal(n, rng)
    svals = np.logspace(0.0, np.log10(condition_number), n)
    return AffineMap(u @ np.diag(svals) @ v.T, offset_scale * rng.standard_normal(n))
