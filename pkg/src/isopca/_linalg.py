"""Small symmetric-matrix helpers shared across modules."""

import numpy as np


def fix_signs(vectors):
    """Flip each column so that its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.ndim == 1:
        idx = np.argmax(np.abs(vectors))
        return vectors if vectors[idx] >= 0 else -vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigh(matrix, descending=True):
    """Eigendecomposition of a symmetric matrix with a deterministic sign convention.

    Returns eigenvalues (descending by default) and eigenvectors as columns.
    """
    matrix = np.asarray(matrix, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (matrix + matrix.T))
    if descending:
        vals, vecs = vals[::-1], vecs[:, ::-1]
    return vals, fix_signs(vecs)


def spectral_norm(matrix):
    return float(np.linalg.norm(matrix, 2))


def orthonormal_complement(basis):
    """Columns spanning the orthogonal complement of ``basis`` (n x d, orthonormal)."""
    basis = np.asarray(basis, dtype=float)
    n, d = basis.shape
    if d == 0:
        return np.eye(n)
    q, _ = np.linalg.qr(np.hstack([basis, np.eye(n)]))
    return q[:, d:n]


def orthonormalize(vectors, rank_tol=1e-8):
    """Orthonormal basis for the column span, dropping directions below ``rank_tol``
    relative to the largest singular value."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.size == 0:
        return np.zeros((vectors.shape[0], 0))
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s[0] == 0:
        return np.zeros((vectors.shape[0], 0))
    return u[:, s > rank_tol * s[0]]


def random_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))
