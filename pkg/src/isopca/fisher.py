"""Fisher discriminant, Fisher subspace, overlap, and subspace perturbation diagnostics."""

from dataclasses import dataclass

import numpy as np

from ._linalg import orthonormal_complement, orthonormalize, spectral_norm, sym_eigh
from .mixture import DegenerateMixtureError, isotropic_params

ORTHONORMAL_TOL = 1e-10
RANK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim == 1:
            cols = cols[:, None]
        check_orthonormal(cols)
        object.__setattr__(self, "columns", cols)

    @property
    def dim(self):
        return self.columns.shape[1]

    def projector(self):
        return self.columns @ self.columns.T


def check_orthonormal(columns, tol=ORTHONORMAL_TOL):
    columns = np.asarray(columns, dtype=float)
    gram = columns.T @ columns
    err = np.max(np.abs(gram - np.eye(columns.shape[1]))) if gram.size else 0.0
    if err > tol:
        raise ValueError(f"basis columns are not orthonormal (max Gram deviation {err:.3g})")
    return columns


@dataclass(frozen=True, eq=False)
class OverlapReport:
    """Overlap ``phi`` of an isotropic mixture with its Fisher basis and the
    descending spectrum of the averaged intra-component covariance."""

    phi: float
    fisher_basis: SubspaceBasis
    sigma_bar_eigenvalues: np.ndarray

    def to_dict(self):
        return {
            "phi": float(self.phi),
            "fisher_basis": self.fisher_basis.columns.tolist(),
            "sigma_bar_eigenvalues": self.sigma_bar_eigenvalues.tolist(),
        }


def fisher_discriminant(mix, p):
    """Intra-component variance over total second moment along unit direction ``p``.

    Both quadratic forms are taken about the mixture mean, so for isotropic
    mixtures this is ``p^T Sigma_bar p``.
    """
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    num = p @ mix.within_covariance() @ p
    den = p @ mix.covariance() @ p
    if den <= 0:
        raise DegenerateMixtureError("mixture has zero variance along the direction")
    return float(num / den)


def mean_span(mix, rank_tol=RANK_TOL):
    return orthonormalize(mix.means.T, rank_tol)


def fisher_subspace(mix, tol=1e-8):
    """Fisher subspace and overlap of an isotropic mixture.

    The Fisher basis is the span of the k-1 smallest eigenvectors of
    ``Sigma_bar = sum_i w_i Sigma_i`` and the overlap is the largest eigenvalue
    among them.
    """
    if not mix.is_isotropic(tol):
        raise ValueError("fisher_subspace needs an isotropic mixture; use isotropic_params first")
    k, n = mix.k, mix.n
    vals, vecs = sym_eigh(mix.within_covariance())
    if k == 1:
        return OverlapReport(0.0, SubspaceBasis(np.zeros((n, 0))), vals)
    span = mean_span(mix)
    if span.shape[1] < k - 1:
        raise DegenerateMixtureError(
            f"component means span {span.shape[1]} dimensions, need k-1 = {k - 1}"
        )
    basis = vecs[:, n - k + 1 :]
    return OverlapReport(float(vals[n - k + 1]), SubspaceBasis(basis), vals)


def overlap_report(mix):
    """Overlap report for any mixture, computed after moving it to isotropic position."""
    _, iso = isotropic_params(mix)
    return fisher_subspace(iso)


def overlap(mix):
    return overlap_report(mix).phi


def covariance_blocks(mix, basis):
    """Blocks of ``w_i Sigma_i`` in the frame ``[basis, complement]``.

    Returns ``(A, B, D, mu_tilde, frame)`` where ``A`` has shape (k, r, r),
    ``B`` (k, n-r, r), ``D`` (k, n-r, n-r) and ``mu_tilde`` (k, r).
    """
    basis = check_orthonormal(basis)
    r = basis.shape[1]
    frame = np.hstack([basis, orthonormal_complement(basis)])
    rot = np.einsum("ji,k,kjl,lm->kim", frame, mix.weights, mix.covariances, frame)
    rot = 0.5 * (rot + np.transpose(rot, (0, 2, 1)))
    return rot[:, :r, :r], rot[:, r:, :r], rot[:, r:, r:], mix.means @ basis, frame


def overlap_bound_from_separation(mix2, p, t):
    """Upper bound ``1 / (1 + w1 w2 t^2)`` on the overlap of a two-component
    mixture separated by ``t`` combined standard deviations along ``p``."""
    if mix2.k != 2:
        raise ValueError("separation bound is for two-component mixtures")
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    w1, w2 = mix2.weights
    gap = abs(p @ (mix2.means[0] - mix2.means[1]))
    spread = np.sqrt(w1 * p @ mix2.covariances[0] @ p) + np.sqrt(w2 * p @ mix2.covariances[1] @ p)
    if not gap > t * spread:
        raise ValueError(f"separation hypothesis fails: |p^T(mu1-mu2)| = {gap:.4g} <= t * spread = {t * spread:.4g}")
    return float(1.0 / (1.0 + w1 * w2 * t**2))


def _columns(basis):
    if isinstance(basis, SubspaceBasis):
        return basis.columns
    basis = np.asarray(basis, dtype=float)
    return check_orthonormal(basis[:, None] if basis.ndim == 1 else basis)


def subspace_affinity(V, F):
    """Smallest singular value of ``F^T V``: the minimum over unit ``v`` in span(V)
    of the norm of its projection onto span(F)."""
    V, F = _columns(V), _columns(F)
    if V.shape != F.shape:
        raise ValueError(f"subspace dimensions differ: {V.shape} vs {F.shape}")
    if V.shape[1] == 0:
        return 1.0
    s = np.linalg.svd(F.T @ V, compute_uv=False)
    return float(np.clip(s[-1], 0.0, 1.0))


@dataclass(frozen=True)
class StewartCheck:
    bound: float
    actual: float
    gap: float
    perturbation_norm: float
    applicable: bool


def stewart_bound(gamma, perturbed, r):
    """Compare the top-r invariant subspace of ``perturbed`` with that of ``gamma``.

    ``actual`` is ``||V^T P2||`` where V holds the top r eigenvectors of the
    perturbed matrix and P2 the bottom eigenvectors of ``gamma``; ``bound`` is
    ``4 ||E21|| / d`` with ``d = lambda_r(D1) - lambda_1(D2)``. The bound is
    only guaranteed when ``d > 0`` and ``||E|| <= d / 5``.
    """
    gamma = np.asarray(gamma, dtype=float)
    perturbed = np.asarray(perturbed, dtype=float)
    n = gamma.shape[0]
    if not 1 <= r < n:
        raise ValueError(f"need 1 <= r < n, got r={r}, n={n}")
    vals, vecs = sym_eigh(gamma)
    P1, P2 = vecs[:, :r], vecs[:, r:]
    E = perturbed - gamma
    d = float(vals[r - 1] - vals[r])
    e_norm = spectral_norm(E)
    e21 = spectral_norm(P2.T @ E @ P1)
    _, pvecs = sym_eigh(perturbed)
    actual = spectral_norm(pvecs[:, :r].T @ P2)
    applicable = d > 0 and e_norm <= d / 5
    bound = 4.0 * e21 / d if d > 0 else float("inf")
    return StewartCheck(bound=bound, actual=actual, gap=d, perturbation_norm=e_norm, applicable=applicable)
