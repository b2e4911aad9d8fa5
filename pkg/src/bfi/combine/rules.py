"""One-shot aggregation of local MAP fits.

Every rule maximizes the quadratic surrogate of the pooled log posterior
built from the local ``(theta_hat, A_hat, Lambda)`` triples. Shared
coordinates ``a`` and group-specific coordinates ``b`` are eliminated
blockwise::

    A_a    = sum_l (A_a,l - Lam_a,l) + Lam_a
    B_g    = sum_{l in g} (A_b,l - Lam_b,l) + Lam_bg
    C_g    = sum_{l in g} (A_ab,l - Lam_ab,l)
    theta_a  = (A_a - sum_g C_g B_g^-1 C_g')^-1 (r_a - sum_g C_g B_g^-1 r_g)
    theta_bg = B_g^-1 (r_g - C_g' theta_a)

with ``r_a = sum_l (A_a,l th_a,l + A_ab,l th_b,l)`` and
``r_g = sum_{l in g} (A_ab,l' th_a,l + A_b,l th_b,l)``. Groups are centers
(stratified) or clusters (clustered); with no specific coordinates this is
the homogeneous rule ``theta = A^-1 sum_l A_l theta_l``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ..glm.model import Family, ParamLayout
from ..mapfit import LocalFit, NotPositiveDefiniteError, PriorSpec
from .structure import (
    CLUSTERED,
    HOMOGENEOUS,
    STRATIFIED,
    CombinedLayout,
    StructureSpec,
    natural_key,
)


class IncompatibleFitsError(ValueError):
    """Local fits cannot be combined (family or layout differ)."""


@dataclass
class BfiResult:
    theta: np.ndarray
    A: np.ndarray
    sd: np.ndarray
    layout: CombinedLayout
    structure: StructureSpec
    family: Family
    local_layout: ParamLayout
    centers: list[str]
    n: list[int]

    @property
    def names(self) -> list[str]:
        return self.layout.names()

    @property
    def dim(self) -> int:
        return len(self.theta)

    def index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            if not 0 <= name_or_index < self.dim:
                raise IndexError(f"coordinate {name_or_index} out of range for d={self.dim}")
            return int(name_or_index)
        try:
            return self.names.index(name_or_index)
        except ValueError:
            raise KeyError(f"no coordinate named {name_or_index!r}") from None

    def covariance(self) -> np.ndarray:
        return linalg.cho_solve(linalg.cho_factor(self.A, lower=True), np.eye(self.dim))

    def group_values(self, local_coord=0) -> dict:
        """Estimate of one specific local coordinate for every group."""
        k = self.layout.specific.index(local_coord)
        return {g: float(self.theta[self.layout.group_slice(g)][k]) for g in self.layout.groups}


def _chol(M, what):
    try:
        return linalg.cho_factor(M, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, linalg.LinAlgError):
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from None


@dataclass
class _GroupSums:
    B: np.ndarray
    C: np.ndarray
    r: np.ndarray
    centers: list = field(default_factory=list)


class BfiAccumulator:
    """Running sums of local contributions.

    Fits can be added at any time (for instance when a center reports
    late); :meth:`result` only needs the sums, never the earlier fits.
    """

    def __init__(self, structure: StructureSpec | None = None):
        self.structure = structure or StructureSpec.homogeneous()
        self.family = None
        self.layout = None
        self.centers: list[str] = []
        self.n: list[int] = []
        self._groups: dict = {}

    def add(self, fit: LocalFit) -> BfiAccumulator:
        if self.layout is None:
            self.family, self.layout = fit.family, fit.layout
            d = fit.layout.dim
            bad = [i for i in self.structure.specific if not 0 <= i < d]
            if bad:
                raise ValueError(f"specific coordinates {bad} outside local dimension {d}")
            self._sa = [i for i in range(d) if i not in self.structure.specific]
            self._sb = list(self.structure.specific)
            pa = len(self._sa)
            self._S_a = np.zeros((pa, pa))
            self._r_a = np.zeros(pa)
        else:
            if fit.family != self.family:
                raise IncompatibleFitsError(f"center {fit.center_id}: family {fit.family} != {self.family}")
            if fit.layout != self.layout:
                raise IncompatibleFitsError(f"center {fit.center_id}: layout differs from the first fit")
        if fit.center_id in self.centers:
            raise IncompatibleFitsError(f"duplicate center id {fit.center_id!r}")
        A, Lam, th = fit.A_hat, fit.Lambda, fit.theta_hat
        if A.shape != (self.layout.dim,) * 2 or Lam.shape != A.shape or th.shape != (self.layout.dim,):
            raise IncompatibleFitsError(f"center {fit.center_id}: array shapes do not match the layout")
        sa, sb = self._sa, self._sb
        Aa, Aab, Ab = A[np.ix_(sa, sa)], A[np.ix_(sa, sb)], A[np.ix_(sb, sb)]
        tha, thb = th[sa], th[sb]
        self._S_a += Aa - Lam[np.ix_(sa, sa)]
        self._r_a += Aa @ tha + Aab @ thb
        if sb:
            g = self.structure.group_of(fit.center_id)
            grp = self._groups.get(g)
            if grp is None:
                s, pa = len(sb), len(sa)
                grp = self._groups[g] = _GroupSums(np.zeros((s, s)), np.zeros((pa, s)), np.zeros(s))
            grp.B += Ab - Lam[np.ix_(sb, sb)]
            grp.C += Aab - Lam[np.ix_(sa, sb)]
            grp.r += Aab.T @ tha + Ab @ thb
            grp.centers.append(fit.center_id)
        self.centers.append(fit.center_id)
        self.n.append(int(fit.n))
        return self

    def combined_layout(self) -> CombinedLayout:
        if self.layout is None:
            raise ValueError("no fits to combine")
        return CombinedLayout.build(self.layout.names(), self.structure, self.centers)

    def result(self, Lambda_combined) -> BfiResult:
        lay = self.combined_layout()
        Lam = Lambda_combined.Lambda if isinstance(Lambda_combined, PriorSpec) else np.asarray(Lambda_combined, float)
        if Lam.shape != (lay.dim, lay.dim):
            raise ValueError(f"combined prior has dimension {Lam.shape[0]}, combined layout needs {lay.dim}")
        pa = len(lay.shared)
        mask = np.zeros((lay.dim, lay.dim), dtype=bool)
        mask[:pa, :pa] = True
        for g in lay.groups:
            sl = lay.group_slice(g)
            mask[sl, sl] = True
        if np.any(Lam[~mask] != 0.0):
            raise ValueError("combined prior must be block diagonal across shared and group-specific coordinates")
        missing = [g for g in lay.groups if g not in self._groups]
        if missing:
            raise ValueError(f"empty cluster(s) {missing}: no center carries that label")

        M = self._S_a + Lam[:pa, :pa]
        rhs = self._r_a.copy()
        A = np.zeros((lay.dim, lay.dim))
        A[:pa, :pa] = M
        solved = []
        for g in lay.groups:
            grp = self._groups[g]
            sl = lay.group_slice(g)
            B = grp.B + Lam[sl, sl]
            A[sl, sl] = B
            A[:pa, sl] = grp.C
            A[sl, :pa] = grp.C.T
            try:
                cf = _chol(B, f"combined curvature block of group {g!r}")
            except NotPositiveDefiniteError as exc:
                raise self._non_pd(A if len(lay.groups) == 1 else None, exc) from None
            BiCt = linalg.cho_solve(cf, grp.C.T)
            Bir = linalg.cho_solve(cf, grp.r)
            M = M - grp.C @ BiCt
            rhs = rhs - grp.C @ Bir
            solved.append((sl, BiCt, Bir))
        try:
            theta_a = linalg.cho_solve(_chol(M, "combined curvature (shared block)"), rhs)
        except NotPositiveDefiniteError as exc:
            raise self._non_pd(A, exc) from None
        theta = np.empty(lay.dim)
        theta[:pa] = theta_a
        for sl, BiCt, Bir in solved:
            theta[sl] = Bir - BiCt @ theta_a
        A = 0.5 * (A + A.T)
        try:
            cov = linalg.cho_solve(_chol(A, "combined curvature"), np.eye(lay.dim))
        except NotPositiveDefiniteError as exc:
            raise self._non_pd(A, exc) from None
        sd = np.sqrt(np.diag(cov))
        return BfiResult(
            theta=theta,
            A=A,
            sd=sd,
            layout=lay,
            structure=self.structure,
            family=self.family,
            local_layout=self.layout,
            centers=list(self.centers),
            n=list(self.n),
        )

    def _non_pd(self, A, exc):
        if A is None:
            return exc
        w, V = np.linalg.eigh(0.5 * (A + A.T))
        names = self.combined_layout().names()
        j = int(np.argmax(np.abs(V[:, 0])))
        return NotPositiveDefiniteError(
            f"{exc}: smallest eigenvalue {w[0]:.6g} along a direction dominated by {names[j]!r}; "
            "the combined prior is too small relative to the sum of local priors"
        )


def _sorted(fits):
    fits = list(fits)
    if not fits:
        raise ValueError("no fits to combine")
    return sorted(fits, key=lambda f: natural_key(f.center_id))


def combine(fits, Lambda_combined, structure: StructureSpec | None = None) -> BfiResult:
    """Combine fits under ``structure``; reduction runs in ascending center id."""
    acc = BfiAccumulator(structure)
    for fit in _sorted(fits):
        acc.add(fit)
    return acc.result(Lambda_combined)


def combine_homogeneous(fits, Lambda_combined) -> BfiResult:
    """All centers share every parameter."""
    return combine(fits, Lambda_combined, StructureSpec.homogeneous())


def combine_stratified(fits, Lambda_combined, strat_param_indices) -> BfiResult:
    """Coordinates in ``strat_param_indices`` get one value per center."""
    fits = _sorted(fits)
    idx = [fits[0].layout.index(i) for i in strat_param_indices]
    mode = STRATIFIED if idx else HOMOGENEOUS
    return combine(fits, Lambda_combined, StructureSpec(mode, tuple(idx)))


def combine_clustered(fits, Lambda_combined, cluster_of_center, K=None, coords=(0,)) -> BfiResult:
    """Centers sharing a cluster label share the ``coords`` parameters (default: intercept).

    When ``K`` is given the labels must be exactly ``1..K``.
    """
    fits = _sorted(fits)
    cmap = {str(k): v for k, v in dict(cluster_of_center).items()}
    missing = [f.center_id for f in fits if f.center_id not in cmap]
    if missing:
        raise ValueError(f"centers without cluster label: {missing}")
    if K is not None:
        labels = set(cmap[f.center_id] for f in fits)
        expected = set(range(1, int(K) + 1))
        if set(cmap.values()) - expected:
            raise ValueError(f"cluster labels must lie in 1..{K}")
        empty = sorted(expected - labels)
        if empty:
            raise ValueError(f"empty cluster(s): {empty}")
    idx = [fits[0].layout.index(i) for i in coords]
    return combine(fits, Lambda_combined, StructureSpec(CLUSTERED, tuple(idx), cmap))


def fit_center_covariate(intercepts, z):
    """Least-squares line through ``(z_l, intercept_l)``.

    Returns ``(nu0, nu1)``: intercept and slope of the fitted line.
    """
    b = np.asarray(list(intercepts.values()) if isinstance(intercepts, dict) else intercepts, dtype=float)
    z = np.asarray(list(z.values()) if isinstance(z, dict) else z, dtype=float)
    if b.shape != z.shape or b.ndim != 1:
        raise ValueError("intercepts and z must be vectors of equal length")
    if len(b) < 2:
        raise ValueError("need at least two centers")
    zc = z - z.mean()
    szz = float(zc @ zc)
    if szz == 0.0:
        raise ValueError("constant center covariate: slope is not identifiable")
    nu1 = float(zc @ (b - b.mean())) / szz
    nu0 = float(b.mean() - nu1 * z.mean())
    return nu0, nu1
