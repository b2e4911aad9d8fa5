"""One-shot aggregation of local fits."""

from .rules import (
    BfiAccumulator,
    BfiResult,
    IncompatibleFitsError,
    combine,
    combine_clustered,
    combine_homogeneous,
    combine_stratified,
    fit_center_covariate,
)
from .structure import CLUSTERED, HOMOGENEOUS, STRATIFIED, CombinedLayout, StructureSpec, natural_key
from .surrogate import QuadraticSurrogate, selection_matrix, surrogate_for

__all__ = [
    "CLUSTERED",
    "HOMOGENEOUS",
    "STRATIFIED",
    "BfiAccumulator",
    "BfiResult",
    "CombinedLayout",
    "IncompatibleFitsError",
    "QuadraticSurrogate",
    "StructureSpec",
    "combine",
    "combine_clustered",
    "combine_homogeneous",
    "combine_stratified",
    "fit_center_covariate",
    "natural_key",
    "selection_matrix",
    "surrogate_for",
]
