"""Input validation helpers shared by the estimators and pipeline stages."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateDataError


def as_float_matrix(X, min_rows: int = 2, min_cols: int = 1, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if arr.shape[1] < min_cols:
        raise ValueError(f"{name} needs at least {min_cols} columns, got {arr.shape[1]}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_series(x, min_length: int = 2, name: str = "series") -> np.ndarray:
    """Coerce to a 1-D float64 array with finite entries."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size < min_length:
        raise DegenerateDataError(f"{name} too short: need >= {min_length} points, got {arr.size}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_labels(labels: Sequence[str], n: int) -> tuple[str, ...]:
    """Validate a label list against a column count; default to V0..V{n-1}."""
    if labels is None:
        return tuple(f"V{i}" for i in range(n))
    out = tuple(str(lab) for lab in labels)
    if len(out) != n:
        raise ValueError(f"expected {n} labels, got {len(out)}")
    if len(set(out)) != len(out):
        raise ValueError("labels must be unique")
    return out


def zscore(x: np.ndarray, name: str = "series") -> np.ndarray:
    """Center and scale to unit sample standard deviation.

    Raises DegenerateDataError on constant input; all downstream
    statistics are invariant under this rescaling.
    """
    x = np.asarray(x, dtype=np.float64)
    sd = x.std(ddof=1)
    if sd == 0.0 or not np.isfinite(sd):
        raise DegenerateDataError(f"{name} is constant (zero variance)")
    return (x - x.mean()) / sd


def usable_columns(values: np.ndarray, labels: Sequence[str]) -> tuple[list[int], list[tuple[str, str]]]:
    """Split panel columns into usable indices and (label, reason) exclusions.

    A column is usable when it is fully finite and non-constant.
    """
    usable: list[int] = []
    excluded: list[tuple[str, str]] = []
    for j, lab in enumerate(labels):
        col = values[:, j]
        if not np.isfinite(col).all():
            excluded.append((lab, "non-finite values"))
        elif col.std() == 0.0:
            excluded.append((lab, "zero variance"))
        else:
            usable.append(j)
    return usable, excluded
