"""Credible intervals, heterogeneity checks, baseline estimators and pooled summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .combine.rules import BfiResult, combine_homogeneous
from .combine.structure import CombinedLayout, StructureSpec, natural_key

# Rational approximation of the standard normal quantile (Acklam).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _poly(c, x):
    out = 0.0
    for a in c:
        out = out * x + a
    return out


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal CDF.

    Rational approximation (relative error about 1e-9) followed by one
    Halley step on ``Phi(x) - p`` using ``erfc``, which brings the result
    to near machine precision.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = _poly(_C, q) / (_poly(_D, q) * q + 1.0)
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -_poly(_C, q) / (_poly(_D, q) * q + 1.0)
    # Work in the tail nearest to p so the residual keeps its precision.
    if x < 0:
        e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    else:
        e = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def upper_quantile(alpha: float) -> float:
    """``xi_alpha`` with ``P(Z > xi_alpha) = alpha``; zero at ``alpha = 0.5``."""
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5], got {alpha}")
    return 0.0 if alpha == 0.5 else -normal_quantile(alpha)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    level: float
    param_index: int
    estimate: float = float("nan")
    name: str = ""

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval bounds out of order: {self.lo} > {self.hi}")
        if not 0.0 <= self.level < 1.0:
            raise ValueError(f"level must lie in [0, 1), got {self.level}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def _interval(est, var, alpha, k, name=""):
    half = upper_quantile(alpha) * math.sqrt(var)
    return Interval(est - half, est + half, 1.0 - 2.0 * alpha, k, est, name)


def credible_interval(result: BfiResult, k, alpha: float = 0.025) -> Interval:
    """``theta_k +/- xi_alpha * sd_k`` with ``sd_k^2 = (A^-1)_kk``."""
    if not 0.0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5], got {alpha}")
    k = result.index(k)
    return _interval(float(result.theta[k]), float(result.sd[k]) ** 2, alpha, k, result.names[k])


def credible_intervals(result: BfiResult, alpha: float = 0.025) -> list[Interval]:
    return [credible_interval(result, k, alpha) for k in range(result.dim)]


# -- baselines ------------------------------------------------------------------


def _check_fits(fits):
    fits = sorted(fits, key=lambda f: natural_key(f.center_id))
    if not fits:
        raise ValueError("no fits given")
    lay = fits[0].layout
    for f in fits[1:]:
        if f.layout != lay:
            raise ValueError(f"center {f.center_id}: layout differs from center {fits[0].center_id}")
    return fits


def _layout(fits, structure):
    return CombinedLayout.build(fits[0].layout.names(), structure, [f.center_id for f in fits])


def wav_estimate(fits, structure: StructureSpec | None = None) -> np.ndarray:
    """Sample-size weighted average of local estimates, in the combined layout.

    Shared coordinates average over all centers. A center-specific
    coordinate is that center's own estimate, and a cluster-specific
    coordinate averages over the cluster's centers with weights
    proportional to their sample sizes.
    """
    fits = _check_fits(fits)
    structure = structure or StructureSpec.homogeneous()
    lay = _layout(fits, structure)
    n = np.array([f.n for f in fits], dtype=float)
    th = np.array([f.theta_hat for f in fits])
    out = np.empty(lay.dim)
    out[: len(lay.shared)] = (n / n.sum()) @ th[:, list(lay.shared)]
    spec = list(lay.specific)
    for g in lay.groups:
        members = [i for i, f in enumerate(fits) if structure.group_of(f.center_id) == g]
        if not members:
            raise ValueError(f"group {g!r} has no centers")
        w = n[members] / n[members].sum()
        out[lay.group_slice(g)] = w @ th[np.ix_(members, spec)]
    return out


def largest_center(fits, center=None) -> str:
    """Center used by the single-center estimator.

    The largest center, ties going to the lowest center id, unless
    ``center`` names one explicitly.
    """
    fits = _check_fits(fits)
    if center is not None:
        if str(center) not in {f.center_id for f in fits}:
            raise KeyError(f"no fit from center {center!r}")
        return str(center)
    return max(fits, key=lambda f: f.n).center_id  # max keeps the first of equal keys


def single_center_estimate(fits, structure: StructureSpec | None = None, center=None) -> np.ndarray:
    """Local estimate of the largest center (or of ``center`` when given).

    Undefined when some coordinates are center- or cluster-specific.
    """
    if structure is not None and structure.specific:
        raise ValueError("single-center estimate is undefined for center- or cluster-specific parameters")
    cid = largest_center(fits, center)
    return next(f for f in fits if f.center_id == cid).theta_hat.copy()


# -- heterogeneity ---------------------------------------------------------------


def _inv_diag(A, c):
    e = np.zeros(A.shape[0])
    e[c] = 1.0
    return float(linalg.cho_solve(linalg.cho_factor(A, lower=True), e)[c])


def heterogeneity_pairwise(fit_k, fit_l, coord=0, alpha: float = 0.025) -> Interval:
    """Interval for ``beta_k - beta_l`` on local coordinate ``coord``."""
    if fit_k.layout != fit_l.layout:
        raise ValueError("fits have different layouts")
    c = fit_k.layout.index(coord)
    diff = float(fit_k.theta_hat[c] - fit_l.theta_hat[c])
    var = _inv_diag(fit_k.A_hat, c) + _inv_diag(fit_l.A_hat, c)
    return _interval(diff, var, alpha, c, fit_k.layout.names()[c])


def heterogeneity_leave_one_out(fits, ell, Lambda_minus, coord=0, alpha: float = 0.025) -> Interval:
    """Interval for ``beta_{-l} - beta_l``.

    ``beta_{-l}`` is the homogeneous combination of every fit except
    center ``ell`` (a center id, or a position in ``fits``) under the
    prior ``Lambda_minus``.
    """
    fits = list(fits)
    if len(fits) < 2:
        raise ValueError("leave-one-out check needs at least two centers")
    ids = [f.center_id for f in fits]
    if isinstance(ell, str):
        if ell not in ids:
            raise KeyError(f"no fit from center {ell!r}")
        pos = ids.index(ell)
    else:
        pos = int(ell)
        if not 0 <= pos < len(fits):
            raise IndexError(f"center position {ell} out of range")
    target = fits[pos]
    rest = combine_homogeneous(fits[:pos] + fits[pos + 1:], Lambda_minus)
    c = target.layout.index(coord)
    diff = float(rest.theta[c] - target.theta_hat[c])
    var = float(rest.sd[c]) ** 2 + _inv_diag(target.A_hat, c)
    return _interval(diff, var, alpha, c, target.layout.names()[c])


# -- pooled summaries ----------------------------------------------------------


@dataclass(frozen=True)
class SummaryStats:
    """Per-center sample size, means and sample standard deviations (n-1 divisor)."""

    n: int
    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        sd = np.atleast_1d(np.asarray(self.sd, dtype=float))
        if int(self.n) < 1:
            raise ValueError("summary needs n >= 1")
        if mean.shape != sd.shape:
            raise ValueError("mean and sd must have the same shape")
        if np.any(sd < 0) or not np.all(np.isfinite(sd)) or not np.all(np.isfinite(mean)):
            raise ValueError("sd must be finite and non-negative")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)

    @classmethod
    def from_data(cls, X) -> SummaryStats:
        X = np.asarray(X, dtype=float)
        X = X.reshape(len(X), -1)
        sd = X.std(axis=0, ddof=1) if len(X) > 1 else np.zeros(X.shape[1])
        return cls(len(X), X.mean(axis=0), sd)


def pooled_standardization(stats) -> SummaryStats:
    """Whole-data mean and sample sd from per-center summaries.

    Uses ``(n-1) s^2 = sum_l (n_l-1) s_l^2 + sum_l n_l (m_l - m)^2``.
    """
    stats = list(stats)
    if not stats:
        raise ValueError("no summaries given")
    n = sum(s.n for s in stats)
    if n < 2:
        raise ValueError("pooled sample size must be at least 2")
    nl = np.array([s.n for s in stats], dtype=float)
    M = np.array([s.mean for s in stats])
    S = np.array([s.sd for s in stats])
    m = nl @ M / n
    ss = (nl - 1.0) @ (S * S) + nl @ ((M - m) ** 2)
    return SummaryStats(n, m, np.sqrt(ss / (n - 1)))


__all__ = [
    "Interval",
    "SummaryStats",
    "credible_interval",
    "credible_intervals",
    "heterogeneity_leave_one_out",
    "heterogeneity_pairwise",
    "largest_center",
    "normal_quantile",
    "pooled_standardization",
    "single_center_estimate",
    "upper_quantile",
    "wav_estimate",
]
