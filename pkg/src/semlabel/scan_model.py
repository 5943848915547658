"""Sensor model, scan containers, and planar scan geometry.

The sensor is a single-plane lidar returning one (range, intensity) pair per
angular beam.  Beam 0 points at -FOV/2 relative to the sensor heading and
angles increase counterclockwise.  Ranges above ``range_max`` or non-finite
readings are stored with the no-return sentinel ``range_max + 1`` so that
every array stays dense and ordering-safe.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

ANGLE_ATOL = 1e-9


class ClassLabel(enum.IntEnum):
    """Point classes. Person is the only dynamic class (never a map label)."""

    OTHER = 0
    CHAIR = 1
    DOOR = 2
    ELEVATOR = 3
    PERSON = 4
    PILLAR = 5
    SOFA = 6
    TABLE = 7
    TRASH_BIN = 8
    WALL = 9


NUM_CLASSES = len(ClassLabel)

CLASS_NAMES = (
    "Other", "Chair", "Door", "Elevator", "Person",
    "Pillar", "Sofa", "Table", "TrashBin", "Wall",
)

_NAME_TO_LABEL = {name.lower(): ClassLabel(i) for i, name in enumerate(CLASS_NAMES)}
# common aliases seen in annotation tools
_NAME_TO_LABEL.update({
    "trash bin": ClassLabel.TRASH_BIN,
    "trash_bin": ClassLabel.TRASH_BIN,
    "trashcan": ClassLabel.TRASH_BIN,
    "trash can": ClassLabel.TRASH_BIN,
    "people": ClassLabel.PERSON,
})


def class_from_name(name: str) -> ClassLabel:
    """Resolve a class name case-insensitively; raises KeyError listing the bad name."""
    try:
        return _NAME_TO_LABEL[name.strip().lower()]
    except KeyError:
        raise KeyError(f"unknown class label string: {name!r} "
                       f"(expected one of {', '.join(CLASS_NAMES)})") from None


@dataclass(frozen=True)
class SensorSpec:
    """Geometry and rate of the scanning lidar.

    ``fov`` must equal ``(n_beams - 1) * angular_resolution`` to within 1e-9 rad;
    the constructor enforces this.
    """

    n_beams: int = 1081
    fov: float = math.radians(270.0)
    angular_resolution: float = math.radians(0.25)
    range_max: float = 60.0
    rate: float = 20.0

    def __post_init__(self):
        if self.n_beams < 2:
            raise ValueError("n_beams must be >= 2")
        if self.range_max <= 0 or self.rate <= 0 or self.angular_resolution <= 0:
            raise ValueError("range_max, rate and angular_resolution must be positive")
        span = (self.n_beams - 1) * self.angular_resolution
        if abs(self.fov - span) > ANGLE_ATOL:
            raise ValueError(
                f"fov {self.fov} inconsistent with (n_beams-1)*angular_resolution {span}")

    @property
    def no_return(self) -> float:
        """Sentinel stored for beams with no detected return."""
        return self.range_max + 1.0

    def to_dict(self) -> dict:
        return {
            "n_beams": self.n_beams,
            "fov": self.fov,
            "angular_resolution": self.angular_resolution,
            "range_max": self.range_max,
            "rate": self.rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorSpec":
        return cls(n_beams=int(d["n_beams"]), fov=float(d["fov"]),
                   angular_resolution=float(d["angular_resolution"]),
                   range_max=float(d["range_max"]), rate=float(d["rate"]))


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    """Planar pose; theta is normalized into (-pi, pi] on construction."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def inverse(self) -> "Pose2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(-(c * self.x + s * self.y), -(-s * self.x + c * self.y), -self.theta)

    def compose(self, other: "Pose2D") -> "Pose2D":
        """Return self * other (apply ``other`` first, then ``self``)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(self.x + c * other.x - s * other.y,
                      self.y + s * other.x + c * other.y,
                      self.theta + other.theta)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "theta": self.theta}

    @classmethod
    def from_dict(cls, d: dict) -> "Pose2D":
        return cls(float(d["x"]), float(d["y"]), float(d["theta"]))


@dataclass
class LidarScan:
    """One sweep: per-beam ranges [m] and raw intensities, plus a timestamp [s].

    Finite ranges satisfy 0 <= r <= range_max of the matching SensorSpec;
    no-return beams carry the sentinel value range_max + 1.  Intensities are
    non-negative in raw sensor units.
    """

    ranges: np.ndarray
    intensities: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        self.intensities = np.asarray(self.intensities, dtype=np.float64)
        if self.ranges.shape != self.intensities.shape or self.ranges.ndim != 1:
            raise ValueError("ranges and intensities must be equal-length 1-D arrays")
        if np.any(self.intensities < 0):
            raise ValueError("intensities must be non-negative")
        self.timestamp = float(self.timestamp)

    @property
    def n_beams(self) -> int:
        return self.ranges.shape[0]

    def validate_against(self, spec: SensorSpec) -> None:
        if self.n_beams != spec.n_beams:
            raise ValueError(f"scan has {self.n_beams} beams, spec expects {spec.n_beams}")
        finite = self.ranges <= spec.range_max
        if np.any(self.ranges[finite] < 0):
            raise ValueError("finite ranges must be >= 0")
        bad = ~finite & (self.ranges != spec.no_return)
        if np.any(bad):
            raise ValueError("ranges above range_max must use the no-return sentinel")

    def finite_mask(self, spec: SensorSpec) -> np.ndarray:
        """Boolean mask of beams that produced a return."""
        return np.isfinite(self.ranges) & (self.ranges <= spec.range_max)


def encode_no_returns(ranges: np.ndarray, spec: SensorSpec) -> np.ndarray:
    """Map non-finite or out-of-range readings to the no-return sentinel."""
    r = np.asarray(ranges, dtype=np.float64).copy()
    bad = ~np.isfinite(r) | (r > spec.range_max) | (r < 0)
    r[bad] = spec.no_return
    return r


@dataclass(frozen=True)
class NormalizationStats:
    """Scales for mapping raw (range, intensity) into [0, 1].

    ``range_scale`` is normally the sensor's max range; ``intensity_p99`` is
    the 99th percentile of intensities over the training split (the raw units
    vary across sensor models, so a dataset-derived scale is required).
    """

    range_scale: float
    intensity_p99: float

    def __post_init__(self):
        if self.range_scale <= 0 or self.intensity_p99 <= 0:
            raise ValueError("normalization stats must be strictly positive")

    def to_json(self) -> str:
        return json.dumps({"range_scale": self.range_scale,
                           "intensity_p99": self.intensity_p99})

    @classmethod
    def from_json(cls, text: str) -> "NormalizationStats":
        d = json.loads(text)
        return cls(float(d["range_scale"]), float(d["intensity_p99"]))


def compute_normalization_stats(scans, spec: SensorSpec) -> NormalizationStats:
    """Derive normalization scales from a training set of scans.

    range_scale = spec.range_max; intensity_p99 = 99th percentile of all
    intensities on finite-return beams.
    """
    values = []
    for scan in scans:
        m = scan.finite_mask(spec)
        if np.any(m):
            values.append(scan.intensities[m])
    if not values:
        raise ValueError("cannot compute normalization stats: no finite returns")
    p99 = float(np.percentile(np.concatenate(values), 99.0))
    if p99 <= 0:
        p99 = 1.0
    return NormalizationStats(range_scale=spec.range_max, intensity_p99=p99)


def beam_angle(i: int, spec: SensorSpec) -> float:
    """Angle of beam ``i`` relative to the sensor heading: -fov/2 + i * resolution."""
    if not 0 <= i < spec.n_beams:
        raise IndexError(f"beam index {i} out of range [0, {spec.n_beams})")
    return -spec.fov / 2.0 + i * spec.angular_resolution


def beam_angles(spec: SensorSpec) -> np.ndarray:
    """All beam angles as a vector (same formula as :func:`beam_angle`)."""
    return -spec.fov / 2.0 + np.arange(spec.n_beams) * spec.angular_resolution


def polar_to_cartesian(scan: LidarScan, spec: SensorSpec):
    """Project finite-return beams into the sensor frame.

    Returns ``(points, beam_indices)`` where ``points`` is (N, 2) and
    ``beam_indices`` the matching beam index per row; no-return beams are
    omitted.
    """
    if scan.n_beams != spec.n_beams:
        raise ValueError(f"scan has {scan.n_beams} beams, spec expects {spec.n_beams}")
    mask = scan.finite_mask(spec)
    idx = np.flatnonzero(mask)
    angles = beam_angles(spec)[idx]
    r = scan.ranges[idx]
    points = np.column_stack((r * np.cos(angles), r * np.sin(angles)))
    return points, idx


def transform_points(points: np.ndarray, pose: Pose2D) -> np.ndarray:
    """Apply a rigid transform: p' = R(theta) p + (x, y)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 2)
    return pts @ pose.rotation().T + pose.translation()


def normalize_scan(scan: LidarScan, spec: SensorSpec,
                   stats: NormalizationStats) -> np.ndarray:
    """Return a (2, n_beams) array in [0, 1]: row 0 ranges, row 1 intensities.

    Ranges are clipped to [0, range_scale] and divided by range_scale, with
    no-return beams mapped to 1.0; intensities are clipped at the stored 99th
    percentile and divided by it.
    """
    if scan.n_beams != spec.n_beams:
        raise ValueError(f"scan has {scan.n_beams} beams, spec expects {spec.n_beams}")
    r = np.clip(scan.ranges, 0.0, stats.range_scale) / stats.range_scale
    r[~scan.finite_mask(spec)] = 1.0
    i = np.clip(scan.intensities, 0.0, stats.intensity_p99) / stats.intensity_p99
    return np.vstack((r, i))
