"""Datasets and design-matrix construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import BINOMIAL, INTERCEPT, Family, ParamLayout


@dataclass
class Dataset:
    """Outcomes and covariate columns of one center.

    ``X`` holds covariate columns only. Intercepts come from the layout:
    ``intercept_labels`` lists the intercept blocks and ``groups`` assigns
    each row to one of them (all rows use block 0 when ``groups`` is None).
    An empty ``intercept_labels`` means a model without intercept.
    """

    y: np.ndarray
    X: np.ndarray
    covariates: tuple[str, ...] = ()
    center_id: str = ""
    intercept_labels: tuple[str, ...] = (INTERCEPT,)
    groups: np.ndarray | None = None
    _design: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(self.y), -1) if len(self.y) else X.reshape(0, 0)
        self.X = X
        if X.shape[0] != len(self.y):
            raise ValueError(f"X has {X.shape[0]} rows but y has {len(self.y)} entries")
        if not self.covariates:
            self.covariates = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        self.covariates = tuple(self.covariates)
        if len(self.covariates) != X.shape[1]:
            raise ValueError("covariate names do not match the number of X columns")
        self.intercept_labels = tuple(self.intercept_labels)
        if self.groups is not None:
            self.groups = np.asarray(self.groups, dtype=np.intp).reshape(-1)
            if len(self.groups) != len(self.y):
                raise ValueError("groups must have one entry per observation")
            k = len(self.intercept_labels)
            if k == 0 or self.groups.min(initial=0) < 0 or self.groups.max(initial=0) >= k:
                raise ValueError("group index outside the intercept blocks")

    @property
    def n(self) -> int:
        return len(self.y)

    def layout(self, family: Family) -> ParamLayout:
        return ParamLayout(self.intercept_labels, self.covariates, family.nuisance_count)

    def validate(self, family: Family) -> None:
        if self.n < 1:
            raise ValueError("dataset is empty")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise ValueError("dataset contains non-finite values")
        if family.kind == BINOMIAL and not np.all((self.y == 0.0) | (self.y == 1.0)):
            raise ValueError("binomial outcomes must be exactly 0 or 1")

    def design(self) -> np.ndarray:
        """Full design: intercept indicator columns followed by ``X`` (cached)."""
        if self._design is None:
            k = len(self.intercept_labels)
            D = np.empty((self.n, k + self.X.shape[1]))
            if k:
                D[:, :k] = 0.0
                g = np.zeros(self.n, dtype=np.intp) if self.groups is None else self.groups
                D[np.arange(self.n), g] = 1.0
            D[:, k:] = self.X
            self._design = np.ascontiguousarray(D)
        return self._design


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def encode_columns(columns, covariates, levels=None):
    """Build covariate columns from raw (string or numeric) values.

    Columns whose values are not all numeric are categorical and are
    expanded into reference-coded dummies named ``col[level]``; the first
    level is the reference. Levels come from ``levels[col]`` when declared,
    otherwise from the sorted set of observed values.

    Returns
    -------
    X : (n, p) ndarray
    names : tuple of str
    """
    levels = dict(levels or {})
    blocks, names = [], []
    n = None
    for col in covariates:
        if col not in columns:
            raise KeyError(f"covariate column {col!r} not found")
        raw = [str(v).strip() for v in columns[col]]
        if any(v == "" for v in raw):
            raise ValueError(f"column {col!r} has missing cells")
        n = len(raw) if n is None else n
        if col not in levels and all(_is_number(v) for v in raw):
            blocks.append(np.array([float(v) for v in raw])[:, None])
            names.append(col)
            continue
        lv = list(levels.get(col) or sorted(set(raw)))
        unknown = set(raw) - set(lv)
        if unknown:
            raise ValueError(f"column {col!r} has undeclared levels {sorted(unknown)}")
        codes = np.array([lv.index(v) for v in raw])
        for j, level in enumerate(lv[1:], start=1):
            blocks.append((codes == j).astype(float)[:, None])
            names.append(f"{col}[{level}]")
    if not blocks:
        return np.empty((n or 0, 0)), ()
    return np.hstack(blocks), tuple(names)
