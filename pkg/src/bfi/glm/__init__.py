"""GLM families, parameter layout and likelihood derivatives."""

from .data import Dataset, encode_columns
from .kernels import BACKEND
from .likelihood import evaluate, linear_predictor, log_likelihood, neg_hessian, score
from .model import (
    BINOMIAL,
    GAUSSIAN_EST,
    GAUSSIAN_FIXED,
    INTERCEPT,
    LOG_SIGMA2,
    Family,
    ParamLayout,
)

__all__ = [
    "BACKEND",
    "BINOMIAL",
    "GAUSSIAN_EST",
    "GAUSSIAN_FIXED",
    "INTERCEPT",
    "LOG_SIGMA2",
    "Dataset",
    "Family",
    "ParamLayout",
    "encode_columns",
    "evaluate",
    "linear_predictor",
    "log_likelihood",
    "neg_hessian",
    "score",
]
