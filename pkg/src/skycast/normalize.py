"""Per-trajectory Z-score normalization of position data and its inverse."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import GeoPoint
from .errors import EmptyInputError

# Below this, a dimension is treated as constant and its scale forced to 1
# (level flight has zero altitude variance and must still normalize).
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class NormStats:
    """Per-dimension mean and standard deviation (lat deg, lon deg, alt m)."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.mu.shape != (3,) or self.sigma.shape != (3,):
            raise ValueError("NormStats needs 3-vectors")
        if not np.all(self.sigma > 0):
            raise ValueError("sigma components must be positive")


def _as_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return points
    return np.array([[p.lat, p.lon, p.alt] for p in points], dtype=np.float64)


def compute_stats(points: Sequence[GeoPoint] | np.ndarray) -> NormStats:
    """Mean and population standard deviation per dimension.

    Degenerate dimensions (sigma below SIGMA_FLOOR) get sigma = 1 so that
    constant signals map to exactly zero instead of blowing up.
    """
    arr = _as_array(points)
    if arr.size == 0:
        raise EmptyInputError("compute_stats needs at least one point")
    mu = arr.mean(axis=0)
    sigma = arr.std(axis=0)  # population: divides by N
    sigma = np.where(sigma < SIGMA_FLOOR, 1.0, sigma)
    return NormStats(mu=mu, sigma=sigma)


def normalize(p: GeoPoint, s: NormStats) -> np.ndarray:
    """(value - mean) / sigma per dimension; result is dimensionless."""
    return (p.as_array() - s.mu) / s.sigma


def normalize_array(arr: np.ndarray, s: NormStats) -> np.ndarray:
    """Vectorized normalize over an (N, 3) array."""
    return (arr - s.mu) / s.sigma


def denormalize(v: np.ndarray, s: NormStats) -> GeoPoint:
    """Inverse of normalize: v * sigma + mean."""
    out = np.asarray(v, dtype=np.float64) * s.sigma + s.mu
    return GeoPoint(float(out[0]), float(out[1]), float(out[2]))
