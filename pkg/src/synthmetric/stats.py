"""Small statistics helpers shared by the weighting and analysis code."""

from __future__ import annotations

import statistics
from typing import Sequence

import numpy as np

from .errors import InsufficientVariation, LengthMismatch


def pearson_corr(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Pearson product-moment correlation of two equal-length samples.

    Raises:
        LengthMismatch: lengths differ or are below 3.
        InsufficientVariation: either sample is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"samples have shapes {x.shape} and {y.shape}")
    if x.size < 3:
        raise LengthMismatch(f"need at least 3 points, got {x.size}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise InsufficientVariation("correlation undefined for a constant sample")
    dx = x - x.mean()
    dy = y - y.mean()
    rho = np.dot(dx, dy) / np.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    return float(np.clip(rho, -1.0, 1.0))


def population_std(values: Sequence[float]) -> float:
    # exact rational arithmetic: identical values give exactly 0.0
    return float(statistics.pstdev(float(v) for v in values))


def five_number_summary(values: Sequence[float]) -> tuple[float, float, float, float, float]:
    """``(min, Q1, median, Q3, max)`` with quartiles as medians of the halves.

    The halves exclude the middle value when the count is odd; a single value
    gives five equal numbers.
    """
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("five-number summary of an empty sample")
    n = v.size
    med = float(np.median(v))
    if n == 1:
        return (med,) * 5
    lower = v[: n // 2]
    upper = v[(n + 1) // 2 :]
    return float(v[0]), float(np.median(lower)), med, float(np.median(upper)), float(v[-1])
