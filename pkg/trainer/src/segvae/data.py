"""Record-file loading and input encoding.

The trainer speaks only the documented wire formats: dataset record files
(JSON Lines with a sensor header), the normalization-stats JSON, and the
prediction format. Nothing here imports the labeling toolkit; the files are
the interface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
NUM_CLASSES = 10


@dataclass
class SensorInfo:
    n_beams: int
    fov: float
    angular_resolution: float
    range_max: float
    rate: float

    @property
    def no_return(self) -> float:
        return self.range_max + 1.0

    def beam_angles(self) -> np.ndarray:
        return -self.fov / 2.0 + np.arange(self.n_beams) * self.angular_resolution


@dataclass
class ScanRecord:
    scene_id: str
    frame: int
    ranges: np.ndarray
    intensities: np.ndarray
    labels: np.ndarray | None


def read_record_file(path):
    """Parse a dataset record file; returns (SensorInfo, list of ScanRecord)."""
    records = []
    with open(path, "r", encoding="utf-8") as f:
        header = json.loads(f.readline())
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version in {path}")
        s = header["sensor"]
        sensor = SensorInfo(n_beams=int(s["n_beams"]), fov=float(s["fov"]),
                            angular_resolution=float(s["angular_resolution"]),
                            range_max=float(s["range_max"]), rate=float(s["rate"]))
        for line_no, line in enumerate(f, start=2):
            if not line.strip():
                continue
            obj = json.loads(line)
            ranges = np.asarray(obj["ranges"], dtype=np.float32)
            if ranges.shape[0] != sensor.n_beams:
                raise ValueError(f"{path} line {line_no}: bad beam count")
            records.append(ScanRecord(
                scene_id=obj["scene_id"], frame=int(obj["frame"]),
                ranges=ranges,
                intensities=np.asarray(obj["intensities"], dtype=np.float32),
                labels=np.asarray(obj["labels"], dtype=np.int64)
                if "labels" in obj else None))
    return sensor, records


@dataclass
class NormStats:
    range_scale: float
    intensity_p99: float

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({
            "range_scale": self.range_scale,
            "intensity_p99": self.intensity_p99}))

    @classmethod
    def load(cls, path) -> "NormStats":
        d = json.loads(Path(path).read_text())
        return cls(float(d["range_scale"]), float(d["intensity_p99"]))

    @classmethod
    def fit(cls, records, sensor: SensorInfo) -> "NormStats":
        """99th intensity percentile over finite returns of a training split."""
        values = []
        for r in records:
            finite = r.ranges <= sensor.range_max
            if finite.any():
                values.append(r.intensities[finite])
        if not values:
            raise ValueError("no finite returns in training data")
        p99 = float(np.percentile(np.concatenate(values), 99.0))
        return cls(range_scale=sensor.range_max, intensity_p99=max(p99, 1e-6))


def encode_inputs(records, sensor: SensorInfo, stats: NormStats,
                  variant: str = "ri") -> np.ndarray:
    """Stack records into a (N, C_in, n_beams) float32 input tensor.

    Variants: "ri" = normalized range + intensity (2 channels), "r" =
    normalized range only (1 channel), "p" = Cartesian beam endpoints
    scaled by the max range (2 channels in [-1, 1]).
    """
    n = len(records)
    angles = sensor.beam_angles().astype(np.float32)
    if variant not in ("ri", "r", "p"):
        raise ValueError(f"unknown input variant {variant!r}")
    channels = 1 if variant == "r" else 2
    out = np.zeros((n, channels, sensor.n_beams), dtype=np.float32)
    for i, rec in enumerate(records):
        finite = rec.ranges <= sensor.range_max
        r_norm = np.clip(rec.ranges, 0.0, stats.range_scale) / stats.range_scale
        r_norm[~finite] = 1.0
        if variant == "p":
            r_clip = np.where(finite, rec.ranges, sensor.range_max)
            out[i, 0] = r_clip * np.cos(angles) / stats.range_scale
            out[i, 1] = r_clip * np.sin(angles) / stats.range_scale
        else:
            out[i, 0] = r_norm
            if variant == "ri":
                out[i, 1] = np.clip(rec.intensities, 0.0,
                                    stats.intensity_p99) / stats.intensity_p99
    return out


def stack_labels(records) -> np.ndarray:
    labels = [r.labels for r in records]
    if any(l is None for l in labels):
        raise ValueError("training records must carry labels")
    return np.stack(labels).astype(np.int64)


def class_counts(labels: np.ndarray) -> np.ndarray:
    return np.bincount(labels.ravel(), minlength=NUM_CLASSES)


def median_frequency_weights(counts) -> np.ndarray:
    """w_c = median(nonzero frequencies) / f_c; unseen classes weigh 0."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("all class counts are zero")
    freq = counts / total
    nonzero = freq > 0
    weights = np.zeros_like(freq)
    weights[nonzero] = np.median(freq[nonzero]) / freq[nonzero]
    return weights


def write_predictions(path, entries) -> None:
    """Write prediction lines: {scene_id, frame, samples: [[...] x S]}."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for scene_id, frame, samples in entries:
            obj = {"scene_id": scene_id, "frame": int(frame),
                   "samples": [[int(v) for v in row] for row in samples]}
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")


def write_uncertainty(path, entries) -> None:
    """Sidecar per-beam vote entropy: {scene_id, frame, entropy: [...]}."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for scene_id, frame, entropy in entries:
            obj = {"scene_id": scene_id, "frame": int(frame),
                   "entropy": [round(float(v), 6) for v in entropy]}
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")
