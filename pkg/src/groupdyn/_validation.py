"""Input validation helpers shared by the estimators."""
from __future__ import annotations

import numbers

import numpy as np

from .graph import Snapshot, UndirectedSnapshot, snapshot_from_edges


def check_k(k) -> int:
    if not isinstance(k, numbers.Integral) or isinstance(k, bool) or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k!r}")
    return int(k)


def check_mode(mode) -> str:
    if mode not in ("directed", "undirected"):
        raise ValueError(f"mode must be 'directed' or 'undirected', got {mode!r}")
    return mode


def check_fraction(value, name: str, *, low_open: bool = True) -> float:
    """Validate a value in (0, 1] (or [0, 1] with ``low_open=False``)."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a number, got {value!r}")
    value = float(value)
    bad_low = value <= 0 if low_open else value < 0
    if bad_low or value > 1 or np.isnan(value):
        interval = "(0, 1]" if low_open else "[0, 1]"
        raise ValueError(f"{name} must lie in {interval}, got {value}")
    return value


def check_positive(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool) or not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_snapshot(X) -> Snapshot:
    """Accept a Snapshot, an undirected snapshot, or an (n, 2|3) edge array."""
    if isinstance(X, Snapshot):
        return X
    if isinstance(X, UndirectedSnapshot):
        return X.as_directed()
    arr = np.asarray(X, dtype=object)
    if arr.size == 0:
        return Snapshot(0, {})
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise ValueError(f"expected an edge array of shape (n, 2) or (n, 3), got {arr.shape}")
    return snapshot_from_edges(arr.tolist())


def check_profile(weights, name: str = "profile") -> np.ndarray:
    arr = np.asarray(weights, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite and non-negative")
    return arr
