"""Prediction error metrics.

Axis errors are signed differences (predicted - actual) in native units:
degrees for lat/lon, metres for altitude. The combined 3D error converts
the angular errors to metres with the fixed per-degree constants
(1 deg lat = 114,100 m, 1 deg lon = 89,900 m) and is always in metres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .data import GeoPoint, M_PER_DEG_LAT, M_PER_DEG_LON
from .errors import EmptyInputError


@dataclass(frozen=True)
class StepError:
    """Errors for one predicted point (jx/jy in degrees, jz/j3d in metres).

    For a two-step average, j3d is the mean of the two 3D errors, which is
    deliberately not the 3D error of the mean axis errors.
    """

    jx: float
    jy: float
    jz: float
    j3d: float


@dataclass(frozen=True)
class TrajectoryReport:
    """Aggregates over the realized prediction records of one run."""

    mean_jx: float
    mean_jy: float
    mean_jz: float
    mse_alpha: float
    mean_j3d_m: float
    n: int
    w: int  # first aggregated prediction step


def axis_errors(pred: GeoPoint, actual: GeoPoint) -> tuple[float, float, float]:
    """Signed per-axis errors (predicted - actual)."""
    return (pred.lat - actual.lat, pred.lon - actual.lon, pred.alt - actual.alt)


def error_3d(jx: float, jy: float, jz: float) -> float:
    """Combined metric error in metres, angular errors converted first."""
    return math.sqrt((jx * M_PER_DEG_LAT) ** 2 + (jy * M_PER_DEG_LON) ** 2 + jz**2)


def step_error(pred: GeoPoint, actual: GeoPoint) -> StepError:
    jx, jy, jz = axis_errors(pred, actual)
    return StepError(jx=jx, jy=jy, jz=jz, j3d=error_3d(jx, jy, jz))


def two_step_average(e1: StepError, e2: StepError) -> StepError:
    """Componentwise mean of the t+1 and t+2 errors."""
    return StepError(
        jx=(e1.jx + e2.jx) / 2.0,
        jy=(e1.jy + e2.jy) / 2.0,
        jz=(e1.jz + e2.jz) / 2.0,
        j3d=(e1.j3d + e2.j3d) / 2.0,
    )


def aggregate(records) -> TrajectoryReport:
    """Summarize realized PredictionRecords into a TrajectoryReport.

    mean_j* are plain signed means of the two-step-averaged axis errors.
    mse_alpha is the multi-dimensional MSE over every individual horizon
    error (both predicted points of every record), so its n is 2x the
    record count. mean_j3d_m is the headline comparison number.
    """
    recs = list(records)
    if not recs:
        raise EmptyInputError("aggregate needs at least one record")
    sum_jx = sum_jy = sum_jz = sum_j3d = 0.0
    sq = 0.0
    for r in recs:
        if r.err_avg is None:
            raise EmptyInputError(f"record at t={r.t} has no realized errors")
        sum_jx += r.err_avg.jx
        sum_jy += r.err_avg.jy
        sum_jz += r.err_avg.jz
        sum_j3d += r.err_avg.j3d
        for e in (r.err1, r.err2):
            sq += e.jx**2 + e.jy**2 + e.jz**2
    n = len(recs)
    return TrajectoryReport(
        mean_jx=sum_jx / n,
        mean_jy=sum_jy / n,
        mean_jz=sum_jz / n,
        mse_alpha=sq / (3.0 * 2 * n),
        mean_j3d_m=sum_j3d / n,
        n=n,
        w=recs[0].t,
    )
