"""Geometric baselines scored with the toolkit's metrics.

Line extraction can only say "linear structure"; leg detection can only say
"person". The evaluator handles both: undefined IoUs are excluded from the
means, and Door/Elevator can be merged into Wall for the line detector.

Run: python demos/06_baselines_and_metrics.py
"""

import math

import numpy as np

from semlabel import SensorSpec
from semlabel.dataset_io import Prediction
from semlabel.eval_metrics import evaluate_predictions
from semlabel.leg_detect import detect_person_points
from semlabel.line_extract import LineExtractParams, extract_lines
from semlabel.scan_model import CLASS_NAMES, ClassLabel
from semlabel.scenes import circular_trajectory, furnished_room
from semlabel.sim import PoseNoise, RaycastNoise, simulate_sequence

spec = SensorSpec()
scene = furnished_room()
frames = simulate_sequence(scene, circular_trajectory(40), spec,
                           RaycastNoise(0.01, 0.02),
                           PoseNoise(0.0, 0.0), seed=5)
truth = {("demo", f.frame): f.truth_labels for f in frames}

line_preds, leg_preds = [], []
for f in frames:
    labels = np.full(spec.n_beams, int(ClassLabel.OTHER), dtype=np.int64)
    for seg in extract_lines(f.scan, spec, LineExtractParams()):
        labels[seg.inlier_beams] = int(ClassLabel.WALL)
    line_preds.append(Prediction(scene_id="demo", frame=f.frame, labels=labels))

    mask = detect_person_points(f.scan, spec)
    labels = np.where(mask, int(ClassLabel.PERSON),
                      int(ClassLabel.OTHER)).astype(np.int64)
    leg_preds.append(Prediction(scene_id="demo", frame=f.frame, labels=labels))


def show(title, report):
    print(f"\n{title}")
    for name, entry in report["per_class"].items():
        iou = entry["iou"]
        iou_str = "   -  " if iou is None else f"{100 * iou[0]:6.2f}"
        print(f"  {name:<9} CA {100 * entry['ca'][0]:6.2f}   IoU {iou_str}")
    print(f"  mCA {100 * report['mca'][0]:.2f}  mIoU {100 * report['miou'][0]:.2f}"
          f"  (undefined IoU excluded: {', '.join(report['undefined']) or 'none'})")


# the line detector cannot split Wall/Door/Elevator, so merge them for truth
report = evaluate_predictions(line_preds, truth, merge_linear=True,
                              class_mask={int(ClassLabel.WALL)})
show("line extraction vs merged linear truth (Wall+Door+Elevator):", report)

report = evaluate_predictions(leg_preds, truth,
                              class_mask={int(ClassLabel.PERSON)})
show("leg detection vs person truth:", report)

report = evaluate_predictions(line_preds, truth)
show("line extraction over all 10 classes (everything else scores 0):", report)
