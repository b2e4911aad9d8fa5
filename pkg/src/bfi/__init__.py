"""Bayesian federated inference for generalized linear models.

Each center fits its own data once (:func:`map_estimate`) and shares the
MAP estimate, its curvature and the prior. :mod:`bfi.combine` turns those
into an approximation of the MAP that pooled data would have given.
"""

from .combine import (
    BfiAccumulator,
    BfiResult,
    StructureSpec,
    combine,
    combine_clustered,
    combine_homogeneous,
    combine_stratified,
    fit_center_covariate,
)
from .glm import BACKEND, Dataset, Family, ParamLayout
from .inference import (
    Interval,
    SummaryStats,
    credible_interval,
    heterogeneity_leave_one_out,
    heterogeneity_pairwise,
    pooled_standardization,
    single_center_estimate,
    wav_estimate,
)
from .mapfit import LocalFit, NotPositiveDefiniteError, PriorSpec, build_prior, check_curvature, map_estimate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BfiAccumulator",
    "BfiResult",
    "Dataset",
    "Family",
    "Interval",
    "LocalFit",
    "NotPositiveDefiniteError",
    "ParamLayout",
    "PriorSpec",
    "StructureSpec",
    "SummaryStats",
    "build_prior",
    "check_curvature",
    "combine",
    "combine_clustered",
    "combine_homogeneous",
    "combine_stratified",
    "credible_interval",
    "fit_center_covariate",
    "heterogeneity_leave_one_out",
    "heterogeneity_pairwise",
    "map_estimate",
    "pooled_standardization",
    "single_center_estimate",
    "wav_estimate",
]
