"""Confusion-matrix segmentation metrics and dataset class statistics.

Per class c the confusion matrix yields TP, FP, FN, TN point counts, from
which two metrics follow:

    class accuracy  CA_c  = (TP + TN) / (TP + FP + FN + TN)
    intersection over union  IoU_c = TP / (TP + FP + FN)

IoU is undefined (0/0) for a class that never appears in either stream;
undefined classes are excluded from the means and reported separately, so
partial-class predictors (the geometric baselines) evaluate cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scan_model import CLASS_NAMES, NUM_CLASSES, ClassLabel

# classes that a line detector cannot tell apart; merged for its evaluation
LINEAR_CLASSES = (ClassLabel.DOOR, ClassLabel.ELEVATOR, ClassLabel.WALL)


@dataclass
class ConfusionMatrix:
    """C x C point counts; rows are true classes, columns predicted."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (NUM_CLASSES, NUM_CLASSES):
            raise ValueError(f"counts must be {NUM_CLASSES}x{NUM_CLASSES}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @classmethod
    def zeros(cls) -> "ConfusionMatrix":
        return cls(np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def tp(self, c: int) -> int:
        return int(self.counts[c, c])

    def fp(self, c: int) -> int:
        return int(self.counts[:, c].sum() - self.counts[c, c])

    def fn(self, c: int) -> int:
        return int(self.counts[c, :].sum() - self.counts[c, c])

    def tn(self, c: int) -> int:
        return self.total - self.tp(c) - self.fp(c) - self.fn(c)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)


def confusion_matrix(pred, truth) -> ConfusionMatrix:
    """Count (true, predicted) label pairs."""
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"pred has {pred.size} labels, truth has {truth.size}")
    if pred.size and (pred.min() < 0 or pred.max() >= NUM_CLASSES
                      or truth.min() < 0 or truth.max() >= NUM_CLASSES):
        raise ValueError("labels out of class range")
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(counts, (truth, pred), 1)
    return ConfusionMatrix(counts)


def class_accuracy(cm: ConfusionMatrix, c: int) -> float:
    """CA_c = (TP + TN) / total."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return (cm.tp(c) + cm.tn(c)) / cm.total


def iou(cm: ConfusionMatrix, c: int) -> float | None:
    """IoU_c = TP / (TP + FP + FN); None when undefined (0/0)."""
    denom = cm.tp(c) + cm.fp(c) + cm.fn(c)
    if denom == 0:
        return None
    return cm.tp(c) / denom


def mean_metrics(cm: ConfusionMatrix, class_mask=None):
    """(mCA, mIoU, per-class table) averaged over classes with defined values.

    ``class_mask`` restricts the evaluation to a subset of class ids.
    The table maps class name -> {"ca": float, "iou": float | None};
    undefined-IoU classes are excluded from mIoU and listed under the
    "undefined" key of the returned summary dict.
    """
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    classes = range(NUM_CLASSES) if class_mask is None else sorted(class_mask)
    table = {}
    cas, ious, undefined = [], [], []
    for c in classes:
        ca_c = class_accuracy(cm, c)
        iou_c = iou(cm, c)
        table[CLASS_NAMES[c]] = {"ca": ca_c, "iou": iou_c}
        cas.append(ca_c)
        if iou_c is None:
            undefined.append(CLASS_NAMES[c])
        else:
            ious.append(iou_c)
    if not ious:
        raise ValueError("IoU undefined for every evaluated class")
    return {
        "mca": float(np.mean(cas)),
        "miou": float(np.mean(ious)),
        "per_class": table,
        "undefined": undefined,
    }


def merge_linear_labels(labels) -> np.ndarray:
    """Collapse Door and Elevator into Wall (line detectors cannot split them)."""
    labels = np.asarray(labels, dtype=np.int64).copy()
    for c in (ClassLabel.DOOR, ClassLabel.ELEVATOR):
        labels[labels == int(c)] = int(ClassLabel.WALL)
    return labels


def class_frequencies(label_arrays):
    """Per-class point counts and percentages over a stream of label arrays.

    Percentages sum to 100 within 1e-9.  Raises on an empty stream.
    """
    counts = np.zeros(NUM_CLASSES, dtype=np.int64)
    seen = False
    for labels in label_arrays:
        seen = True
        counts += np.bincount(np.asarray(labels, dtype=np.int64).ravel(),
                              minlength=NUM_CLASSES)
    if not seen or counts.sum() == 0:
        raise ValueError("no labeled points in stream")
    percentages = 100.0 * counts / counts.sum()
    return counts, percentages


def _aggregate(values):
    """(mean, std) over per-sample metric values; std is None for one sample."""
    if len(values) == 1:
        return (float(values[0]), None)
    return (float(np.mean(values)), float(np.std(values)))


def evaluate_predictions(predictions, truth, merge_linear=False,
                         class_mask=None):
    """Score a prediction stream against per-scan ground truth.

    ``predictions`` carry either one label array per scan or S stochastic
    sample arrays; ``truth`` maps (scene_id, frame) to a label array.  With
    samples, every metric is evaluated once per sample index and reported as
    mean +- std across samples.  ``merge_linear`` collapses Door/Elevator
    into Wall on both streams (for detectors that cannot split them);
    ``class_mask`` restricts which classes enter the means.
    """
    predictions = list(predictions)
    if not predictions:
        raise ValueError("no predictions to evaluate")
    n_samples = 1
    for p in predictions:
        if p.samples is not None:
            s = p.samples.shape[0]
            if n_samples not in (1, s):
                raise ValueError("inconsistent sample counts across predictions")
            n_samples = max(n_samples, s)

    classes = sorted(class_mask) if class_mask is not None else list(range(NUM_CLASSES))
    if merge_linear:
        classes = [c for c in classes
                   if c not in (int(ClassLabel.DOOR), int(ClassLabel.ELEVATOR))]
    no_other = [c for c in classes if c != int(ClassLabel.OTHER)]

    per_sample = []
    n_points = 0
    for s in range(n_samples):
        cm = ConfusionMatrix.zeros()
        for p in predictions:
            key = p.key()
            if key not in truth:
                raise KeyError(f"no ground truth for scan {key}")
            pred_labels = p.labels if p.labels is not None else p.samples[s]
            truth_labels = truth[key]
            if merge_linear:
                pred_labels = merge_linear_labels(pred_labels)
                truth_labels = merge_linear_labels(truth_labels)
            cm = cm + confusion_matrix(pred_labels, truth_labels)
        if s == 0:
            n_points = cm.total
        entry = {"ca": {}, "iou": {}}
        for c in classes:
            entry["ca"][c] = class_accuracy(cm, c)
            entry["iou"][c] = iou(cm, c)
        per_sample.append(entry)

    def mean_over(cs, metric, sample):
        values = [sample[metric][c] for c in cs]
        values = [v for v in values if v is not None]
        return float(np.mean(values)) if values else None

    report = {
        "classes": classes,
        "n_scans": len(predictions),
        "n_points": n_points,
        "n_samples": n_samples,
        "per_class": {},
        "undefined": [],
    }
    for c in classes:
        cas = [e["ca"][c] for e in per_sample]
        ious = [e["iou"][c] for e in per_sample if e["iou"][c] is not None]
        report["per_class"][CLASS_NAMES[c]] = {
            "ca": _aggregate(cas),
            "iou": _aggregate(ious) if ious else None,
        }
        if not ious:
            report["undefined"].append(CLASS_NAMES[c])
    for key, cs in (("mca", classes), ("miou", classes),
                    ("mca_no_other", no_other), ("miou_no_other", no_other)):
        metric = "ca" if key.startswith("mca") else "iou"
        values = [mean_over(cs, metric, e) for e in per_sample]
        values = [v for v in values if v is not None]
        report[key] = _aggregate(values) if values else (float("nan"), None)
    return report
