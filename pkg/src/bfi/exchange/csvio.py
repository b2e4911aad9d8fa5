"""CSV input for local fitting."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..glm.data import Dataset, encode_columns


def read_columns(path) -> dict[str, list[str]]:
    """Read a headed CSV file into raw string columns.

    Raises ``ValueError`` on ragged rows or empty cells, naming the line.
    """
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(set(header)) != len(header) or any(h == "" for h in header):
            raise ValueError(f"{path}: header has empty or duplicate column names")
        cols = {h: [] for h in header}
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}, line {reader.line_num}: expected {len(header)} cells, got {len(row)}")
            for h, v in zip(header, row):
                v = v.strip()
                if v == "" or v.upper() in ("NA", "NAN"):
                    raise ValueError(f"{path}, line {reader.line_num}: missing value in column {h!r}")
                cols[h].append(v)
    return cols


def dataset_from_csv(path, outcome: str, covariates, center_id: str = "", levels=None) -> Dataset:
    """Build a :class:`Dataset`; non-numeric covariate columns become dummies."""
    cols = read_columns(path)
    if outcome not in cols:
        raise KeyError(f"{path}: outcome column {outcome!r} not found")
    try:
        y = np.array([float(v) for v in cols[outcome]])
    except ValueError:
        raise ValueError(f"{path}: outcome column {outcome!r} is not numeric") from None
    X, names = encode_columns(cols, list(covariates), levels)
    if X.shape[0] != len(y):
        X = np.empty((len(y), 0))
    return Dataset(y, X, names, center_id=center_id)
