"""File-based exchange of local fits and the command-line driver."""

from .csvio import dataset_from_csv, read_columns
from .message import (
    SCHEMA_VERSION,
    CompatibilityReport,
    CurvatureWarning,
    FitMessageError,
    deserialize_local_fit,
    read_fit,
    serialize_local_fit,
    validate_compatibility,
    write_fit,
)

__all__ = [
    "SCHEMA_VERSION",
    "CompatibilityReport",
    "CurvatureWarning",
    "FitMessageError",
    "dataset_from_csv",
    "deserialize_local_fit",
    "read_columns",
    "read_fit",
    "serialize_local_fit",
    "validate_compatibility",
    "write_fit",
]
