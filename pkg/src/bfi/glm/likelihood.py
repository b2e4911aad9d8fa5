"""Log-likelihood, score and curvature of the supported GLMs."""

from __future__ import annotations

import numpy as np

from . import kernels
from .data import Dataset
from .model import Family, ParamLayout


def _sigma2(family: Family) -> float:
    return family.sigma2 if family.sigma2 is not None else 1.0


def _check(family: Family, data: Dataset, theta) -> np.ndarray:
    data.validate(family)
    theta = np.ascontiguousarray(theta, dtype=float).reshape(-1)
    d = data.layout(family).dim
    if theta.shape[0] != d:
        raise ValueError(f"theta has length {theta.shape[0]}, layout needs {d}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite values")
    return theta


def linear_predictor(row, theta, layout: ParamLayout, group: int = 0) -> float:
    """``beta^t x`` for one observation.

    ``row`` holds the covariate values only; the intercept active for
    ``group`` is added from the layout.
    """
    row = np.asarray(row, dtype=float).reshape(-1)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if row.shape[0] != len(layout.covariates):
        raise ValueError(f"row has {row.shape[0]} covariates, layout has {len(layout.covariates)}")
    if theta.shape[0] not in (layout.n_regression, layout.dim):
        raise ValueError(f"theta has length {theta.shape[0]}, layout needs {layout.dim}")
    k = layout.n_intercepts
    eta = float(theta[group]) if k else 0.0
    return eta + float(row @ theta[k:layout.n_regression])


def log_likelihood(family: Family, data: Dataset, theta) -> float:
    theta = _check(family, data, theta)
    return float(kernels.loglik(family.code, data.y, data.design(), theta, _sigma2(family)))


def evaluate(family: Family, data: Dataset, theta):
    """Return ``(log_likelihood, score, neg_hessian)`` from one kernel pass."""
    theta = _check(family, data, theta)
    return kernels.loglik_grad_hess(family.code, data.y, data.design(), theta, _sigma2(family))


def score(family: Family, data: Dataset, theta) -> np.ndarray:
    return evaluate(family, data, theta)[1]


def neg_hessian(family: Family, data: Dataset, theta) -> np.ndarray:
    return evaluate(family, data, theta)[2]
