"""Gaussian priors and local MAP estimation.

A center shares only what :func:`map_estimate` returns: the MAP estimate,
the curvature of the log posterior at that point, the prior precision and
the sample size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .glm import kernels
from .glm.data import Dataset
from .glm.model import Family, ParamLayout

log = logging.getLogger(__name__)

MAX_ITER = 100
GRAD_TOL = 1e-8
_JITTER_START = 1e-8
_JITTER_STOP = 1e-2


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """A matrix that must be positive definite is not."""


def _symmetric(A, name="matrix", tol=0.0) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > tol * scale:
        raise ValueError(f"{name} is not symmetric")
    return A


@dataclass(frozen=True)
class CurvatureReport:
    is_pd: bool
    min_eigen_bound: float
    condition_estimate: float


def check_curvature(A) -> CurvatureReport:
    """Cholesky-based positive-definiteness check.

    For a PD matrix, ``min_eigen_bound`` is the smallest squared pivot of
    the Cholesky factor (an upper bound on the smallest eigenvalue) and
    ``condition_estimate`` the squared ratio of the largest to smallest
    pivot. For a non-PD matrix the smallest eigenvalue itself is reported.
    """
    A = _symmetric(A, "curvature matrix")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        return CurvatureReport(False, float(np.linalg.eigvalsh(A)[0]), float("inf"))
    piv = np.diag(L)
    return CurvatureReport(True, float(np.min(piv) ** 2), float((np.max(piv) / np.min(piv)) ** 2))


# -- priors -------------------------------------------------------------------


@dataclass(frozen=True)
class PriorSpec:
    """Zero-mean Gaussian prior given by its precision matrix ``Lambda``.

    ``layout`` is the local layout. When ``strat`` names local coordinates
    that are center- or cluster-specific, ``Lambda`` lives in the expanded
    layout: shared coordinates first (local order), then the specific
    coordinates of each of the ``n_groups`` groups in turn.
    """

    Lambda: np.ndarray
    layout: ParamLayout
    strat: tuple[int, ...] = ()
    n_groups: int = 0
    mode: str = "none"

    def __post_init__(self):
        Lam = _symmetric(self.Lambda, "Lambda", tol=1e-12)
        Lam = 0.5 * (Lam + Lam.T)
        object.__setattr__(self, "Lambda", Lam)
        object.__setattr__(self, "strat", tuple(int(i) for i in self.strat))
        if self.mode not in ("none", "center_specific", "clustered"):
            raise ValueError(f"unknown stratification mode {self.mode!r}")
        if Lam.shape[0] != self.dim:
            raise ValueError(f"Lambda has dimension {Lam.shape[0]}, layout needs {self.dim}")
        try:
            np.linalg.cholesky(Lam)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("prior precision Lambda is not positive definite") from None

    @property
    def dim(self) -> int:
        s = len(self.strat)
        return self.layout.dim - s + self.n_groups * s

    def names(self) -> list[str]:
        local = self.layout.names()
        shared = [nm for i, nm in enumerate(local) if i not in self.strat]
        specific = [f"{local[i]}[{g + 1}]" for g in range(self.n_groups) for i in self.strat]
        return shared + specific


def build_prior(layout: ParamLayout, lam, strat=None, n_groups=None, mode=None) -> PriorSpec:
    """Diagonal prior precision of the right dimension.

    Parameters
    ----------
    layout : ParamLayout
        Local parameter layout.
    lam : float or sequence of float
        Common diagonal value, one value per local coordinate (replicated
        across groups for stratified coordinates), or one value per
        coordinate of the expanded layout.
    strat : sequence of int or str, optional
        Local coordinates that are center/cluster specific.
    n_groups : int, optional
        Number of centers (``center_specific``) or clusters (``clustered``).
    mode : {"center_specific", "clustered"}, optional
        Defaults to ``center_specific`` when ``strat`` is given.
    """
    strat_idx = tuple(sorted({layout.index(s) for s in (strat or ())}))
    if strat_idx:
        if not n_groups or n_groups < 1:
            raise ValueError("stratified prior needs a positive group count")
        mode = mode or "center_specific"
    else:
        if n_groups not in (None, 0):
            raise ValueError("group count given without stratified coordinates")
        n_groups, mode = 0, "none"
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if not np.all(lam > 0) or not np.all(np.isfinite(lam)):
        raise ValueError("prior precision entries must be positive and finite")
    shared = [i for i in range(layout.dim) if i not in strat_idx]
    dim = len(shared) + n_groups * len(strat_idx)
    if lam.size == 1:
        diag = np.full(dim, lam[0])
    elif lam.size == layout.dim:
        diag = np.concatenate([lam[shared]] + [lam[list(strat_idx)]] * n_groups)
    elif lam.size == dim:
        diag = lam
    else:
        raise ValueError(f"lambda has {lam.size} entries; expected 1, {layout.dim} or {dim}")
    return PriorSpec(np.diag(diag), layout, strat_idx, n_groups, mode)


# -- MAP ----------------------------------------------------------------------


@dataclass
class LocalFit:
    """One center's shareable inference result."""

    center_id: str
    family: Family
    layout: ParamLayout
    n: int
    theta_hat: np.ndarray
    A_hat: np.ndarray
    Lambda: np.ndarray
    converged: bool = True
    gradient_norm: float = 0.0
    iterations: int = 0
    strat_hint: tuple[int, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.layout.dim


def _solve_newton(H, g):
    """Solve ``H x = g`` by Cholesky, adding escalating diagonal jitter if needed."""
    try:
        return linalg.cho_solve(linalg.cho_factor(H, lower=True, check_finite=False), g)
    except (np.linalg.LinAlgError, linalg.LinAlgError):
        pass
    scale = 1.0 + float(np.max(np.diag(H)))
    jitter = _JITTER_START
    while jitter <= _JITTER_STOP * (1 + 1e-12):
        try:
            Hj = H + jitter * scale * np.eye(H.shape[0])
            return linalg.cho_solve(linalg.cho_factor(Hj, lower=True, check_finite=False), g)
        except (np.linalg.LinAlgError, linalg.LinAlgError):
            jitter *= 10.0
    return None


def _expected_information(Hn, n):
    """Fisher-scoring matrix for the gaussian family with estimated variance.

    The observed curvature couples the mean and ``log sigma^2`` blocks and
    can be strongly indefinite far from the optimum. Its expectation has
    no cross block and ``n / 2`` on the nuisance diagonal, so it is PD.
    """
    F = Hn.copy()
    F[:-1, -1] = 0.0
    F[-1, :-1] = 0.0
    F[-1, -1] = 0.5 * n
    return F


def map_estimate(
    family: Family,
    data: Dataset,
    prior,
    max_iter: int = MAX_ITER,
    tol: float = GRAD_TOL,
) -> LocalFit:
    """Maximize ``log_likelihood(theta) - theta' Lambda theta / 2`` by damped Newton.

    Starts at zero (so ``sigma^2 = 1`` for the gaussian family with
    estimated variance). When the Newton matrix is not PD even after
    jitter, that family falls back to a Fisher-scoring step. Convergence
    means the gradient max-norm of the penalized objective drops below
    ``tol``. A fit that does not converge
    is returned with ``converged=False`` and logged; it is never silently
    accepted.
    """
    data.validate(family)
    layout = data.layout(family)
    Lam = prior.Lambda if isinstance(prior, PriorSpec) else PriorSpec(np.asarray(prior, float), layout).Lambda
    if Lam.shape != (layout.dim, layout.dim):
        raise ValueError(f"prior has dimension {Lam.shape[0]}, layout needs {layout.dim}")

    code, s2 = family.code, family.sigma2 if family.sigma2 is not None else 1.0
    y, D = data.y, data.design()
    theta = np.zeros(layout.dim)

    def objective(t):
        return kernels.loglik(code, y, D, t, s2) - 0.5 * t @ Lam @ t

    ll, s, Hn = kernels.loglik_grad_hess(code, y, D, theta, s2)
    f = ll - 0.5 * theta @ Lam @ theta
    converged = False
    it = 0
    for it in range(max_iter + 1):
        g = s - Lam @ theta
        gnorm = float(np.max(np.abs(g)))
        if gnorm < tol:
            converged = True
            break
        if it == max_iter:
            break
        step = _solve_newton(Hn + Lam, g)
        if step is None and layout.nuisance:
            step = _solve_newton(_expected_information(Hn, data.n) + Lam, g)
        if step is None:
            log.warning("center %s: Newton matrix not PD even with jitter", data.center_id)
            break
        t = 1.0
        slack = 1e-14 * (1.0 + abs(f))
        while t > 2.0**-40:
            cand = theta + t * step
            fc = objective(cand)
            if np.isfinite(fc) and fc >= f - slack:
                break
            t *= 0.5
        else:
            log.warning("center %s: line search failed at iteration %d", data.center_id, it)
            break
        theta = cand
        ll, s, Hn = kernels.loglik_grad_hess(code, y, D, theta, s2)
        f = ll - 0.5 * theta @ Lam @ theta

    if not converged:
        log.warning("center %s: MAP did not converge (gradient norm %.3g)", data.center_id, gnorm)
    return LocalFit(
        center_id=str(data.center_id),
        family=family,
        layout=layout,
        n=data.n,
        theta_hat=theta,
        A_hat=Hn + Lam,
        Lambda=Lam.copy(),
        converged=converged,
        gradient_norm=gnorm,
        iterations=it,
    )
