"""Simulation designs.

The four logistic designs share three covariates per subject (two
Gaussian, one Bernoulli) and four centers; they differ in how the
centers are heterogeneous.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..combine.structure import CLUSTERED, HOMOGENEOUS, STRATIFIED, CombinedLayout, StructureSpec
from ..glm.model import INTERCEPT, Family, ParamLayout

NORMAL = "normal"
BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class CovSpec:
    """Distribution of one covariate: ``normal(mean, sd)`` or ``bernoulli(p)``."""

    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind == NORMAL:
            if not self.b > 0:
                raise ValueError("normal covariate needs sd > 0")
        elif self.kind == BERNOULLI:
            if not 0.0 < self.a < 1.0:
                raise ValueError("bernoulli covariate needs p in (0, 1)")
        else:
            raise ValueError(f"unknown covariate kind {self.kind!r}")

    @classmethod
    def normal(cls, mean, sd) -> CovSpec:
        return cls(NORMAL, float(mean), float(sd))

    @classmethod
    def bernoulli(cls, p) -> CovSpec:
        return cls(BERNOULLI, float(p))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == NORMAL:
            return rng.normal(self.a, self.b, size=n)
        return (rng.random(n) < self.a).astype(float)

    @property
    def mean(self) -> float:
        return self.a

    @property
    def sd(self) -> float:
        return self.b if self.kind == NORMAL else float(np.sqrt(self.a * (1 - self.a)))


@dataclass(frozen=True)
class Scenario:
    """One simulation design.

    ``intercepts[l]`` is the true intercept of center ``l``; under the
    homogeneous mode all entries must agree, under the clustered mode
    centers of one cluster must agree. ``lam`` is the diagonal prior
    precision of each center and ``lam_combined`` that of the combined
    model (default: the precision of the largest center).
    """

    name: str
    n: tuple[int, ...]
    specs: tuple[tuple[CovSpec, ...], ...]
    intercepts: tuple[float, ...]
    coefs: tuple[float, ...]
    covariates: tuple[str, ...] = ("x1", "x2", "x3")
    family: Family = field(default_factory=Family.binomial)
    lam: tuple[float, ...] = ()
    lam_combined: float | None = None
    mode: str = HOMOGENEOUS
    clusters: tuple[int, ...] = ()
    sigma2: float = 1.0

    def __post_init__(self):
        L = len(self.n)
        if L < 1 or any(int(k) < 1 for k in self.n):
            raise ValueError("need at least one center and n >= 1 everywhere")
        object.__setattr__(self, "n", tuple(int(k) for k in self.n))
        lam = tuple(float(x) for x in (self.lam or (0.01,)))
        if len(lam) == 1:
            lam = lam * L
        object.__setattr__(self, "lam", lam)
        if any(not x > 0 for x in lam) or (self.lam_combined is not None and not self.lam_combined > 0):
            raise ValueError("prior precisions must be positive")
        for what, seq in (("specs", self.specs), ("intercepts", self.intercepts), ("lam", lam)):
            if len(seq) != L:
                raise ValueError(f"{what} has {len(seq)} entries for {L} centers")
        if any(len(s) != len(self.covariates) for s in self.specs):
            raise ValueError("every center needs one spec per covariate")
        if len(self.coefs) != len(self.covariates):
            raise ValueError("one coefficient per covariate required")
        if self.mode == HOMOGENEOUS and len(set(self.intercepts)) > 1:
            raise ValueError("homogeneous scenario needs a common intercept")
        if self.mode == CLUSTERED:
            if len(self.clusters) != L:
                raise ValueError("clustered scenario needs one cluster label per center")
            for k in set(self.clusters):
                vals = {self.intercepts[i] for i in range(L) if self.clusters[i] == k}
                if len(vals) > 1:
                    raise ValueError(f"centers of cluster {k} disagree on the intercept")
        elif self.mode not in (HOMOGENEOUS, STRATIFIED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def L(self) -> int:
        return len(self.n)

    @property
    def center_ids(self) -> list[str]:
        return [str(i + 1) for i in range(self.L)]

    @property
    def combined_lambda(self) -> float:
        if self.lam_combined is not None:
            return float(self.lam_combined)
        return self.lam[int(np.argmax(self.n))]

    def local_layout(self) -> ParamLayout:
        return ParamLayout((INTERCEPT,), self.covariates, self.family.nuisance_count)

    def structure(self) -> StructureSpec:
        if self.mode == HOMOGENEOUS:
            return StructureSpec.homogeneous()
        if self.mode == STRATIFIED:
            return StructureSpec.stratified((0,))
        return StructureSpec.clustered(dict(zip(self.center_ids, self.clusters)), (0,))

    def combined_layout(self) -> CombinedLayout:
        return CombinedLayout.build(self.local_layout().names(), self.structure(), self.center_ids)

    def local_theta(self, center: int) -> np.ndarray:
        """True parameter vector of one center in the local layout."""
        th = [self.intercepts[center], *self.coefs]
        if self.family.nuisance_count:
            th.append(float(np.log(self.sigma2)))
        return np.array(th, dtype=float)

    def truth(self) -> np.ndarray:
        """True parameters in the combined layout."""
        lay = self.combined_layout()
        out = np.empty(lay.dim)
        st = self.structure()
        for c, cid in enumerate(self.center_ids):
            out[lay.local_to_combined(st.group_of(cid))] = self.local_theta(c)
        return out

    def replace(self, **kw) -> Scenario:
        return dataclasses.replace(self, **kw)

    def with_n(self, n) -> Scenario:
        n = tuple(int(k) for k in np.atleast_1d(n))
        return self.replace(n=n * self.L if len(n) == 1 else n)

    def with_lambda(self, lam, lam_combined=None) -> Scenario:
        lam = tuple(float(x) for x in np.atleast_1d(lam))
        return self.replace(lam=lam * self.L if len(lam) == 1 else lam, lam_combined=lam_combined)


_N_LARGE = (100, 100, 200, 200)
_COEFS = (2.0, -1.0, 0.5)
_BASE_SPECS = (CovSpec.normal(0.0, 1.0), CovSpec.normal(2.0, 5.0), CovSpec.bernoulli(0.25))


def table1() -> Scenario:
    """Homogeneous populations."""
    return Scenario("table1", _N_LARGE, (_BASE_SPECS,) * 4, (1.0,) * 4, _COEFS)


def table2() -> Scenario:
    """Covariate distributions differ between centers."""
    specs = tuple(
        (CovSpec.normal(m, 1.0), CovSpec.normal(2.0, s), CovSpec.bernoulli(p))
        for m, s, p in zip((0.0, 1.0, 2.0, 3.0), (1.0, 2.0, 3.0, 4.0), (0.35, 0.30, 0.25, 0.20))
    )
    return Scenario("table2", _N_LARGE, specs, (1.0,) * 4, _COEFS)


def table3() -> Scenario:
    """Center-specific intercepts."""
    return Scenario("table3", _N_LARGE, (_BASE_SPECS,) * 4, (0.0, 1.0, 0.5, -1.0), _COEFS, mode=STRATIFIED)


def table4() -> Scenario:
    """Centers {1, 2} and {3, 4} form two clusters with their own intercept."""
    return Scenario(
        "table4", _N_LARGE, (_BASE_SPECS,) * 4, (1.0, 1.0, 2.0, 2.0), _COEFS, mode=CLUSTERED, clusters=(1, 1, 2, 2)
    )


def gaussian_fixed() -> Scenario:
    """Linear model with known unit error variance (quadratic log posterior)."""
    return Scenario(
        "gaussian_fixed", _N_LARGE, (_BASE_SPECS,) * 4, (1.0,) * 4, _COEFS, family=Family.gaussian_fixed(1.0)
    )


def gaussian() -> Scenario:
    """Linear model with estimated error variance."""
    return Scenario("gaussian", _N_LARGE, (_BASE_SPECS,) * 4, (1.0,) * 4, _COEFS, family=Family.gaussian(), sigma2=1.0)


SCENARIOS = {
    "table1": table1,
    "table2": table2,
    "table3": table3,
    "table4": table4,
    "gaussian_fixed": gaussian_fixed,
    "gaussian": gaussian,
}

# Sample-size and prior grids of the full study: (lambda for centers 1-2, lambda for centers 3-4).
FULL_N = {
    "table1": ((25, 25, 50, 50), (50, 50, 100, 100), (100, 100, 200, 200), (200, 200, 400, 400)),
    "table2": ((50, 50, 100, 100), (100, 100, 200, 200)),
    "table3": ((50, 50, 100, 100), (100, 100, 200, 200)),
    "table4": ((50, 50, 100, 100), (100, 100, 200, 200)),
}
FULL_LAMBDA = ((0.001, 0.001), (0.01, 0.01), (0.01, 0.001))


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


def full_grid(name: str):
    """All (n, lambda) variants of a design used in the full study."""
    base = get_scenario(name)
    for n in FULL_N.get(name, (base.n,)):
        for l12, l34 in FULL_LAMBDA:
            tag = f"{name}[n={'-'.join(map(str, n))},lambda={l12}-{l34}]"
            yield base.replace(name=tag, n=n, lam=(l12, l12, l34, l34), lam_combined=None)
