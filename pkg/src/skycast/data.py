"""Position data model, CSV ingestion, and synthetic trajectory shapes.

CSV format (UTF-8, LF):

    uav_id,timestamp,lat_deg,lon_deg,alt_m

Rows are grouped by uav_id and sorted by timestamp; broadcast step
indices are re-derived from the sorted order, starting at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadParamsError,
    DuplicateTimestampError,
    EmptyResultError,
    MalformedRowError,
    RangeViolationError,
)
from .util import fmt_float

# Local flat-earth conversion: metres per degree of latitude / longitude.
M_PER_DEG_LAT = 114_100.0
M_PER_DEG_LON = 89_900.0

CSV_HEADER = "uav_id,timestamp,lat_deg,lon_deg,alt_m"


@dataclass(frozen=True)
class GeoPoint:
    """One 3D position sample: latitude/longitude in degrees, altitude in metres."""

    lat: float
    lon: float
    alt: float

    def as_array(self) -> np.ndarray:
        return np.array([self.lat, self.lon, self.alt], dtype=np.float64)

    def bounds_ok(self) -> bool:
        return (
            math.isfinite(self.lat)
            and math.isfinite(self.lon)
            and math.isfinite(self.alt)
            and -90.0 <= self.lat <= 90.0
            and -180.0 <= self.lon <= 180.0
        )


@dataclass(frozen=True)
class TrajectoryPoint:
    """A GeoPoint at one broadcast time step."""

    step: int
    timestamp: float
    pos: GeoPoint


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered position reports for one UAV."""

    uav_id: str
    points: tuple[TrajectoryPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def positions(self) -> np.ndarray:
        """All positions as an (L, 3) float64 array."""
        return np.array([[p.pos.lat, p.pos.lon, p.pos.alt] for p in self.points])


@dataclass(frozen=True)
class Dataset:
    trajectories: tuple[Trajectory, ...]
    role: str = "train"  # "train" or "test"

    def __len__(self) -> int:
        return len(self.trajectories)


def _parse_float(text: str, row_no: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedRowError(f"row {row_no}: non-numeric {col} {text!r}") from None


def parse_csv(data: bytes | str, role: str = "train") -> Dataset:
    """Parse position CSV into a Dataset.

    Rows may arrive in any order; they are sorted by timestamp within each
    uav_id. Duplicated (uav_id, timestamp) pairs are rejected because there
    is no principled way to pick one.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].rstrip("\r") != CSV_HEADER:
        raise MalformedRowError(f"bad or missing header, expected {CSV_HEADER!r}")

    # uav_id -> list of (timestamp, GeoPoint); first-appearance order preserved
    groups: dict[str, list[tuple[float, GeoPoint]]] = {}
    seen: dict[str, set] = {}
    for row_no, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        if line == "":
            continue
        cols = line.split(",")
        if len(cols) != 5:
            raise MalformedRowError(f"row {row_no}: expected 5 columns, got {len(cols)}")
        uav_id = cols[0]
        ts = _parse_float(cols[1], row_no, "timestamp")
        lat = _parse_float(cols[2], row_no, "lat_deg")
        lon = _parse_float(cols[3], row_no, "lon_deg")
        alt = _parse_float(cols[4], row_no, "alt_m")
        if not math.isfinite(ts):
            raise RangeViolationError(f"row {row_no}: non-finite timestamp")
        pos = GeoPoint(lat, lon, alt)
        if not pos.bounds_ok():
            raise RangeViolationError(
                f"row {row_no}: lat={lat!r} lon={lon!r} alt={alt!r} out of range"
            )
        stamps = seen.setdefault(uav_id, set())
        if ts in stamps:
            raise DuplicateTimestampError(f"row {row_no}: duplicate timestamp {ts!r} for {uav_id!r}")
        stamps.add(ts)
        groups.setdefault(uav_id, []).append((ts, pos))

    trajectories = []
    for uav_id, rows in groups.items():
        rows.sort(key=lambda r: r[0])
        pts = tuple(
            TrajectoryPoint(step=i + 1, timestamp=ts, pos=pos)
            for i, (ts, pos) in enumerate(rows)
        )
        trajectories.append(Trajectory(uav_id=uav_id, points=pts))
    return Dataset(trajectories=tuple(trajectories), role=role)


def serialize_csv(dataset: Dataset) -> str:
    """Render a Dataset back to CSV. parse_csv(serialize_csv(d)) == d."""
    lines = [CSV_HEADER]
    for traj in dataset.trajectories:
        for p in traj.points:
            lines.append(
                f"{traj.uav_id},{fmt_float(p.timestamp)},{fmt_float(p.pos.lat)},"
                f"{fmt_float(p.pos.lon)},{fmt_float(p.pos.alt)}"
            )
    return "\n".join(lines) + "\n"


def load_csv(path, role: str = "train") -> Dataset:
    with open(path, "rb") as fh:
        return parse_csv(fh.read(), role=role)


def filter_dataset(d: Dataset, min_len: int) -> Dataset:
    """Keep trajectories strictly longer than min_len points, order preserved."""
    if min_len < 1:
        raise BadParamsError(f"min_len must be >= 1, got {min_len}")
    kept = tuple(t for t in d.trajectories if len(t) > min_len)
    if not kept:
        raise EmptyResultError(f"no trajectory longer than {min_len} points")
    return Dataset(trajectories=kept, role=d.role)


@dataclass(frozen=True)
class ShapeParams:
    """Geometry for synthetic trajectories.

    speed_mps is ground speed; climb_rate_mps adds altitude per second and
    only matters for helix (and climbing lines). heading_deg is compass
    style: 0 = north, 90 = east.
    """

    origin: GeoPoint = field(default_factory=lambda: GeoPoint(30.0, 120.0, 100.0))
    speed_mps: float = 10.0
    interval_s: float = 2.5
    heading_deg: float = 90.0
    radius_m: float | None = None
    climb_rate_mps: float = 0.0
    t0: float = 0.0
    uav_id: str | None = None


SHAPE_KINDS = ("line", "arc", "helix")


def synth_generate(
    kind: str,
    params: ShapeParams,
    n_points: int,
    noise_std: float,
    seed: int,
) -> Trajectory:
    """Generate a deterministic synthetic trajectory.

    Before noise, consecutive points are exactly speed*interval apart on
    the ground (for arcs the angular step is chosen so the chord, not the
    arc, has that length). Gaussian noise of noise_std metres is added
    independently per axis after construction.
    """
    if kind not in SHAPE_KINDS:
        raise BadParamsError(f"unknown shape kind {kind!r}")
    if n_points < 1:
        raise BadParamsError(f"n_points must be >= 1, got {n_points}")
    if noise_std < 0:
        raise BadParamsError(f"noise_std must be >= 0, got {noise_std}")
    if params.speed_mps <= 0:
        raise BadParamsError(f"speed must be > 0, got {params.speed_mps}")
    if params.interval_s <= 0:
        raise BadParamsError(f"interval must be > 0, got {params.interval_s}")

    step_m = params.speed_mps * params.interval_s
    idx = np.arange(n_points, dtype=np.float64)
    heading = math.radians(params.heading_deg)
    direction = np.array([math.sin(heading), math.cos(heading)])  # (east, north)

    if kind == "line":
        xy = np.outer(idx * step_m, direction)
    else:
        radius = params.radius_m
        if radius is None or radius <= 0:
            raise BadParamsError(f"{kind} needs radius > 0, got {radius}")
        if step_m > 2.0 * radius:
            raise BadParamsError(
                f"step {step_m} m exceeds circle diameter {2 * radius} m"
            )
        # Counterclockwise turn starting at the origin, tangent to heading.
        phi = 2.0 * math.asin(step_m / (2.0 * radius))
        center = radius * np.array([-math.cos(heading), math.sin(heading)])
        theta0 = math.atan2(-math.sin(heading), math.cos(heading))
        theta = theta0 + idx * phi
        xy = center + radius * np.column_stack([np.cos(theta), np.sin(theta)])

    alt = params.origin.alt + params.climb_rate_mps * params.interval_s * idx
    if kind == "arc":
        alt = np.full(n_points, params.origin.alt)

    east_m = xy[:, 0]
    north_m = xy[:, 1]
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, noise_std, size=(n_points, 3))
        east_m = east_m + noise[:, 0]
        north_m = north_m + noise[:, 1]
        alt = alt + noise[:, 2]

    lat = params.origin.lat + north_m / M_PER_DEG_LAT
    lon = params.origin.lon + east_m / M_PER_DEG_LON
    uav_id = params.uav_id or f"{kind}-{seed}"
    pts = tuple(
        TrajectoryPoint(
            step=i + 1,
            timestamp=params.t0 + i * params.interval_s,
            pos=GeoPoint(float(lat[i]), float(lon[i]), float(alt[i])),
        )
        for i in range(n_points)
    )
    return Trajectory(uav_id=uav_id, points=pts)


def ground_distance_m(a: GeoPoint, b: GeoPoint) -> float:
    """Horizontal distance using the fixed per-degree constants."""
    dn = (a.lat - b.lat) * M_PER_DEG_LAT
    de = (a.lon - b.lon) * M_PER_DEG_LON
    return math.hypot(dn, de)
