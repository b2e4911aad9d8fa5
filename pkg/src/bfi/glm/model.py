"""Model families and the coordinate layout of the regression parameter vector."""

from __future__ import annotations

from dataclasses import dataclass

GAUSSIAN_FIXED = "gaussian_fixed_var"
GAUSSIAN_EST = "gaussian_est_var"
BINOMIAL = "binomial_logit"

_KIND_CODES = {GAUSSIAN_FIXED: 0, GAUSSIAN_EST: 1, BINOMIAL: 2}

INTERCEPT = "(Intercept)"
LOG_SIGMA2 = "log_sigma2"


@dataclass(frozen=True)
class Family:
    """Outcome distribution of a GLM.

    ``gaussian_est_var`` carries the error variance as one nuisance
    coordinate ``rho = log(sigma^2)``; ``gaussian_fixed_var`` fixes
    ``sigma2``; ``binomial_logit`` models 0/1 outcomes with a logit link.
    """

    kind: str
    sigma2: float | None = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == GAUSSIAN_FIXED:
            if self.sigma2 is None or not self.sigma2 > 0:
                raise ValueError("gaussian_fixed_var requires sigma2 > 0")
            object.__setattr__(self, "sigma2", float(self.sigma2))
        elif self.sigma2 is not None:
            raise ValueError(f"{self.kind} takes no sigma2")

    @classmethod
    def gaussian(cls) -> Family:
        return cls(GAUSSIAN_EST)

    @classmethod
    def gaussian_fixed(cls, sigma2: float) -> Family:
        return cls(GAUSSIAN_FIXED, sigma2)

    @classmethod
    def binomial(cls) -> Family:
        return cls(BINOMIAL)

    @property
    def link(self) -> str:
        return "logit" if self.kind == BINOMIAL else "identity"

    @property
    def nuisance_count(self) -> int:
        return 1 if self.kind == GAUSSIAN_EST else 0

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def tag(self) -> str:
        """Command-line spelling (``gaussian``, ``gaussian-fixed:<s2>``, ``binomial``)."""
        if self.kind == GAUSSIAN_EST:
            return "gaussian"
        if self.kind == BINOMIAL:
            return "binomial"
        return f"gaussian-fixed:{self.sigma2!r}"

    @classmethod
    def from_tag(cls, tag: str) -> Family:
        tag = tag.strip()
        if tag == "gaussian":
            return cls.gaussian()
        if tag == "binomial":
            return cls.binomial()
        if tag.startswith("gaussian-fixed:"):
            return cls.gaussian_fixed(float(tag.split(":", 1)[1]))
        raise ValueError(f"unknown family {tag!r}")


@dataclass(frozen=True)
class ParamLayout:
    """Ordering of the parameter vector.

    Coordinates are: intercept block(s), covariate coefficients in declared
    order, then the nuisance coordinate (if any). The intercept is a layout
    property and is never stored as a data column.
    """

    intercept_labels: tuple[str, ...] = (INTERCEPT,)
    covariates: tuple[str, ...] = ()
    nuisance: int = 0

    def __post_init__(self):
        object.__setattr__(self, "intercept_labels", tuple(self.intercept_labels))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.nuisance not in (0, 1):
            raise ValueError("nuisance count must be 0 or 1")
        names = self.names()
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in layout: {names}")

    @property
    def n_intercepts(self) -> int:
        return len(self.intercept_labels)

    @property
    def n_regression(self) -> int:
        """Coordinates entering the linear predictor."""
        return self.n_intercepts + len(self.covariates)

    @property
    def dim(self) -> int:
        return self.n_regression + self.nuisance

    def names(self) -> list[str]:
        names = list(self.intercept_labels) + list(self.covariates)
        if self.nuisance:
            names.append(LOG_SIGMA2)
        return names

    def index(self, name_or_index) -> int:
        """Resolve a coordinate given by name or integer position."""
        if isinstance(name_or_index, (int,)) and not isinstance(name_or_index, bool):
            if not 0 <= name_or_index < self.dim:
                raise IndexError(f"coordinate {name_or_index} out of range for d={self.dim}")
            return int(name_or_index)
        names = self.names()
        try:
            return names.index(name_or_index)
        except ValueError:
            raise KeyError(f"no coordinate named {name_or_index!r}; have {names}") from None

    @classmethod
    def for_family(cls, family: Family, covariates=(), intercept=True) -> ParamLayout:
        return cls(
            intercept_labels=(INTERCEPT,) if intercept else (),
            covariates=tuple(covariates),
            nuisance=family.nuisance_count,
        )
