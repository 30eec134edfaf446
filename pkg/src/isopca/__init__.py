"""Isotropic PCA and affine-invariant clustering of Gaussian mixtures."""

from .clusterer import (
    PCABaseline,
    PolyhedralPartition,
    Unravel,
    UnravelConfig,
    baseline_pca_cluster,
    largest_gap_threshold,
    unravel,
)
from .evaluation import ErrorReport, affine_invariance_experiment, partition_error, run_suite
from .fisher import (
    OverlapReport,
    SubspaceBasis,
    fisher_discriminant,
    fisher_subspace,
    overlap,
    overlap_bound_from_separation,
    overlap_report,
    stewart_bound,
    subspace_affinity,
)
from .isotropy import IsotropicWhitener, estimate_moments, whiten
from .mixture import (
    AffineMap,
    GaussianMixture,
    LabeledSample,
    apply_affine,
    isotropic_params,
    parallel_pancakes,
    random_affine,
    random_separable_mixture,
    sample,
    symmetric_mixture,
)
from .reweighting import (
    IsotropicPCA,
    ReweightedMoments,
    exact_gamma,
    exact_mixture_moments,
    reweight_gaussian,
    sample_reweighted_moments,
)
from .separator import DirectionChoice, Method, choose_direction, top_eigenvector

__version__ = "0.1.0"
