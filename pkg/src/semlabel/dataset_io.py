"""Dataset record files, prediction files, and deterministic splits.

Records travel as JSON Lines: a header line carrying the schema version and
the sensor spec, then one record object per line with keys in a fixed order
and floats in Python's shortest round-trip formatting, which makes
write(read(x)) byte-identical.  The same framing carries per-beam prediction
files (optionally with multiple stochastic samples per scan).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import scene_rng
from .scan_model import LidarScan, Pose2D, SensorSpec

SCHEMA_VERSION = 1


class RecordFormatError(ValueError):
    """Malformed dataset file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class DatasetRecord:
    """One dataset tuple: a scan plus poses and (optionally) labels."""

    scene_id: str
    frame: int
    timestamp: float
    ranges: np.ndarray
    intensities: np.ndarray
    init_pose: Pose2D
    true_pose: Pose2D | None = None
    labels: np.ndarray | None = None
    flagged: bool | None = None

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=np.float64)
        self.intensities = np.asarray(self.intensities, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)

    def scan(self) -> LidarScan:
        return LidarScan(ranges=self.ranges, intensities=self.intensities,
                         timestamp=self.timestamp)

    def key(self) -> tuple:
        return (self.scene_id, self.frame)


def _float_list(values) -> list[float]:
    return [float(v) for v in values]


def _record_to_json(record: DatasetRecord) -> str:
    obj: dict = {
        "scene_id": record.scene_id,
        "frame": int(record.frame),
        "timestamp": float(record.timestamp),
        "ranges": _float_list(record.ranges),
        "intensities": _float_list(record.intensities),
        "init_pose": record.init_pose.to_dict(),
    }
    if record.true_pose is not None:
        obj["true_pose"] = record.true_pose.to_dict()
    if record.labels is not None:
        obj["labels"] = [int(v) for v in record.labels]
    if record.flagged is not None:
        obj["flagged"] = bool(record.flagged)
    return json.dumps(obj, separators=(",", ":"))


def _record_from_obj(obj: dict, spec: SensorSpec, line: int) -> DatasetRecord:
    try:
        ranges = obj["ranges"]
        intensities = obj["intensities"]
        record = DatasetRecord(
            scene_id=str(obj["scene_id"]),
            frame=int(obj["frame"]),
            timestamp=float(obj["timestamp"]),
            ranges=ranges,
            intensities=intensities,
            init_pose=Pose2D.from_dict(obj["init_pose"]),
            true_pose=Pose2D.from_dict(obj["true_pose"])
            if "true_pose" in obj else None,
            labels=obj.get("labels"),
            flagged=obj.get("flagged"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordFormatError(f"bad record: {exc}", line) from exc
    for name, arr in (("ranges", record.ranges),
                      ("intensities", record.intensities),
                      ("labels", record.labels)):
        if arr is not None and arr.shape[0] != spec.n_beams:
            raise RecordFormatError(
                f"{name} has {arr.shape[0]} entries, sensor spec says "
                f"{spec.n_beams}", line)
    return record


def write_records(stream, records, spec: SensorSpec) -> None:
    """Write a header line plus one JSON record per line (UTF-8)."""
    header = json.dumps({"schema_version": SCHEMA_VERSION,
                         "sensor": spec.to_dict()}, separators=(",", ":"))
    stream.write(header + "\n")
    for record in records:
        stream.write(_record_to_json(record) + "\n")


def read_records(stream):
    """Parse a record file; returns (sensor spec, list of records).

    Raises RecordFormatError naming the 1-based line of any malformed input.
    """
    first = stream.readline()
    if not first.strip():
        raise RecordFormatError("empty file: missing header line", 1)
    try:
        header = json.loads(first)
        version = header["schema_version"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise RecordFormatError(f"bad header: {exc}", 1) from exc
    if version != SCHEMA_VERSION:
        raise RecordFormatError(f"unsupported schema_version {version!r}", 1)
    try:
        spec = SensorSpec.from_dict(header["sensor"])
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordFormatError(f"bad header: {exc}", 1) from exc
    records = []
    for line_no, line in enumerate(stream, start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"bad JSON: {exc}", line_no) from exc
        records.append(_record_from_obj(obj, spec, line_no))
    return spec, records


def write_records_file(path, records, spec: SensorSpec) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_records(f, records, spec)


def read_records_file(path):
    with open(path, "r", encoding="utf-8", newline="\n") as f:
        return read_records(f)


def records_to_bytes(records, spec: SensorSpec) -> bytes:
    buf = io.StringIO()
    write_records(buf, records, spec)
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Prediction files


@dataclass
class Prediction:
    """Per-beam labels for one scan, or S stochastic label samples."""

    scene_id: str
    frame: int
    labels: np.ndarray | None = None          # (n_beams,)
    samples: np.ndarray | None = None         # (S, n_beams)

    def __post_init__(self):
        if (self.labels is None) == (self.samples is None):
            raise ValueError("prediction needs exactly one of labels or samples")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.samples is not None:
            self.samples = np.asarray(self.samples, dtype=np.int64)
            if self.samples.ndim != 2:
                raise ValueError("samples must be (S, n_beams)")

    def key(self) -> tuple:
        return (self.scene_id, self.frame)


def write_predictions(stream, predictions) -> None:
    for p in predictions:
        obj: dict = {"scene_id": p.scene_id, "frame": int(p.frame)}
        if p.labels is not None:
            obj["labels"] = [int(v) for v in p.labels]
        else:
            obj["samples"] = [[int(v) for v in row] for row in p.samples]
        stream.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_predictions(stream) -> list[Prediction]:
    predictions = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            predictions.append(Prediction(
                scene_id=str(obj["scene_id"]), frame=int(obj["frame"]),
                labels=obj.get("labels"), samples=obj.get("samples")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise RecordFormatError(f"bad prediction: {exc}", line_no) from exc
    return predictions


def read_predictions_file(path) -> list[Prediction]:
    with open(path, "r", encoding="utf-8", newline="\n") as f:
        return read_predictions(f)


def write_predictions_file(path, predictions) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_predictions(f, predictions)


def predictions_from_records(records) -> list[Prediction]:
    """Treat labeled dataset records as a prediction stream."""
    preds = []
    for r in records:
        if r.labels is None:
            raise ValueError(f"record ({r.scene_id}, {r.frame}) has no labels")
        preds.append(Prediction(scene_id=r.scene_id, frame=r.frame, labels=r.labels))
    return preds


# ---------------------------------------------------------------------------
# Splitting


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.70
    val: float = 0.10
    test: float = 0.20
    seed: int = 0

    def __post_init__(self):
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1.0")
        if min(self.train, self.val, self.test) < 0:
            raise ValueError("split ratios must be non-negative")


def split_dataset(records, spec: SplitSpec):
    """Deterministic per-scene split into (train, val, test) record lists.

    Per scene, frame positions are shuffled with the documented xoshiro256**
    generator seeded by (seed XOR fnv1a64(scene_id)); the first
    floor(n * train) go to train, the next floor(n * val) to val, the
    remainder to test.  Scenes are then concatenated per split in first-seen
    scene order.  Empty scenes are skipped.
    """
    by_scene: dict[str, list] = {}
    for record in records:
        by_scene.setdefault(record.scene_id, []).append(record)

    train, val, test = [], [], []
    for scene_id, scene_records in by_scene.items():
        n = len(scene_records)
        if n == 0:
            continue
        order = list(range(n))
        scene_rng(spec.seed, scene_id).shuffle(order)
        n_train = int(np.floor(n * spec.train))
        n_val = int(np.floor(n * spec.val))
        train.extend(scene_records[i] for i in order[:n_train])
        val.extend(scene_records[i] for i in order[n_train:n_train + n_val])
        test.extend(scene_records[i] for i in order[n_train + n_val:])
    return train, val, test
