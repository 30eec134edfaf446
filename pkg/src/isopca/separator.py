"""Choice of the separating direction from reweighted moments."""

import enum
from dataclasses import dataclass

import numpy as np

from ._linalg import fix_signs, sym_eigh

MEAN_SHIFT_CONSTANT = 32.0
DEGENERACY_TOL = 1e-10


class Method(str, enum.Enum):
    MEAN_SHIFT = "MeanShift"
    SPECTRAL = "Spectral"


@dataclass(frozen=True, eq=False)
class DirectionChoice:
    h: np.ndarray
    method: Method
    mean_shift_norm: float
    threshold: float
    degenerate: bool = False

    def to_dict(self):
        return {
            "h": self.h.tolist(),
            "method": self.method.value,
            "mean_shift_norm": self.mean_shift_norm,
            "threshold": self.threshold,
            "degenerate": self.degenerate,
        }


def mean_shift_threshold(wmin, alpha, constant=MEAN_SHIFT_CONSTANT):
    return float(np.sqrt(wmin) / (constant * alpha))


def top_eigenvector(M, tol=DEGENERACY_TOL):
    """Unit eigenvector of the largest eigenvalue, largest-magnitude entry positive.

    Returns ``(v, degenerate)``; ``degenerate`` is set when the top eigenvalue
    is repeated within ``tol`` (relative), in which case ``v`` is some vector
    of the top eigenspace.
    """
    vals, vecs = sym_eigh(M)
    scale = max(1.0, abs(vals[0]))
    degenerate = len(vals) > 1 and vals[0] - vals[1] <= tol * scale
    return vecs[:, 0], bool(degenerate)


def top_eigenvectors(M, r):
    _, vecs = sym_eigh(M)
    return vecs[:, :r]


def mean_shift_direction(moments):
    u = np.asarray(moments.u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm == 0:
        raise ValueError("reweighted mean is zero")
    return fix_signs(u / norm)


def choose_direction(moments, wmin, constant=MEAN_SHIFT_CONSTANT):
    """Mean shift if ``||u|| > sqrt(wmin) / (constant * alpha)``, otherwise the
    top principal component of the reweighted second moment."""
    if not 0 < wmin <= 1:
        raise ValueError("wmin must lie in (0, 1]")
    u = np.asarray(moments.u, dtype=float)
    norm = float(np.linalg.norm(u))
    thr = mean_shift_threshold(wmin, moments.alpha, constant)
    if norm > thr:
        return DirectionChoice(mean_shift_direction(moments), Method.MEAN_SHIFT, norm, thr)
    if norm == 0 and not np.any(moments.M):
        raise ValueError("reweighted moments are identically zero")
    h, degenerate = top_eigenvector(moments.M)
    return DirectionChoice(h, Method.SPECTRAL, norm, thr, degenerate)


def alternate_direction(choice, moments):
    """The candidate from the branch that ``choice`` did not take, or ``None``."""
    if choice.method is Method.MEAN_SHIFT:
        h, degenerate = top_eigenvector(moments.M)
        return DirectionChoice(h, Method.SPECTRAL, choice.mean_shift_norm, choice.threshold, degenerate)
    if choice.mean_shift_norm > 0:
        return DirectionChoice(mean_shift_direction(moments), Method.MEAN_SHIFT, choice.mean_shift_norm, choice.threshold)
    return None
