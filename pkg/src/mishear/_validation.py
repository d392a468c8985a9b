"""Input validation helpers shared across modules."""

from __future__ import annotations

from typing import Sequence

import numpy as np

PROB_SUM_ATOL = 1e-9


def as_float_vector(x, n: int | None = None, *, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-d float array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def check_prob_vector(x, n: int | None = None, *, name: str = "distribution",
                      atol: float = PROB_SUM_ATOL) -> np.ndarray:
    """Validate a probability vector: finite, non-negative, sums to 1."""
    arr = as_float_vector(x, n, name=name)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    if np.any(arr < 0):
        raise ValueError(f"{name} contains negative entries")
    total = float(arr.sum())
    if abs(total - 1.0) > atol:
        raise ValueError(f"{name} sums to {total!r}, expected 1 within {atol}")
    return arr


def check_nonempty_seq(seq: Sequence, *, name: str = "sequence") -> None:
    if len(seq) == 0:
        raise ValueError(f"{name} must be non-empty")


def check_positive(value: float, *, name: str) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
