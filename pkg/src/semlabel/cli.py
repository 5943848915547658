"""Command-line surface.

Subcommands cover the full workflow: rasterize an annotated map, auto-label
scan files against it, run the geometric baselines, score predictions,
simulate synthetic scenes, report dataset statistics, and split datasets.
Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset_io, eval_metrics, map_label, sim
from .autolabel import AutoLabelConfig, label_sequence
from .dataset_io import (DatasetRecord, Prediction, RecordFormatError,
                         SplitSpec, predictions_from_records,
                         read_predictions_file, read_records_file,
                         split_dataset, write_predictions_file,
                         write_records_file)
from .eval_metrics import evaluate_predictions
from .leg_detect import detect_person_points
from .line_extract import LineExtractParams, extract_lines
from .scan_model import CLASS_NAMES, ClassLabel, class_from_name


class DataError(Exception):
    pass


def _load_truth(path):
    spec, records = read_records_file(path)
    truth = {}
    for r in records:
        if r.labels is None:
            raise DataError(f"truth record ({r.scene_id}, {r.frame}) has no labels")
        truth[r.key()] = r.labels
    return spec, truth


def _load_predictions(path):
    """Prediction file, or a labeled dataset file used as predictions."""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    try:
        head = json.loads(first) if first.strip() else {}
    except json.JSONDecodeError:
        head = {}
    if isinstance(head, dict) and "schema_version" in head and "sensor" in head:
        _, records = read_records_file(path)
        return predictions_from_records(records)
    return read_predictions_file(path)


def cmd_rasterize_map(args) -> int:
    grid = map_label.load_map_files(args.map)
    polygons = map_label.load_labelme_polygons(
        Path(args.labels).read_text(), grid)
    semmap = map_label.rasterize_labels(polygons, grid)
    Path(args.out).write_bytes(map_label.save_semantic_map(semmap))
    occupied = int(np.sum(grid.cells == map_label.OCCUPIED))
    print(f"rasterized {len(polygons)} polygons onto {grid.width}x{grid.height} "
          f"map ({occupied} occupied cells) -> {args.out}")
    return 0


def cmd_autolabel(args) -> int:
    semmap = map_label.load_semantic_map(Path(args.semmap).read_bytes())
    spec, records = read_records_file(args.infile)
    config = AutoLabelConfig(spec=spec, use_icp=not args.no_icp)
    labeled, report = label_sequence(
        [(r.scan(), r.init_pose) for r in records], semmap, config)
    out_records = []
    for record, ls in zip(records, labeled):
        out_records.append(DatasetRecord(
            scene_id=record.scene_id, frame=record.frame,
            timestamp=record.timestamp, ranges=record.ranges,
            intensities=record.intensities, init_pose=ls.pose_refined,
            true_pose=record.true_pose, labels=ls.labels, flagged=ls.flagged))
    write_records_file(args.out, out_records, spec)
    print(f"labeled {report.n_scans} scans -> {args.out} "
          f"({report.flagged_scans} flagged, mean rms {report.mean_rms:.4f} m)")
    if args.report:
        with open(args.report, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["class", "points", "percent"])
            pct = report.class_percentages()
            for c, name in enumerate(CLASS_NAMES):
                writer.writerow([name, int(report.class_counts[c]),
                                 f"{pct[c]:.4f}"])
            writer.writerow(["flagged_scans", report.flagged_scans, ""])
            writer.writerow(["mean_rms", f"{report.mean_rms:.6f}", ""])
    return 0


def cmd_extract_lines(args) -> int:
    spec, records = read_records_file(args.infile)
    params = LineExtractParams()
    preds = []
    for r in records:
        segments = extract_lines(r.scan(), spec, params)
        labels = np.full(spec.n_beams, int(ClassLabel.OTHER), dtype=np.int64)
        for seg in segments:
            labels[seg.inlier_beams] = int(ClassLabel.WALL)
        preds.append(Prediction(scene_id=r.scene_id, frame=r.frame, labels=labels))
    write_predictions_file(args.out, preds)
    print(f"line predictions for {len(preds)} scans -> {args.out}")
    return 0


def cmd_detect_legs(args) -> int:
    spec, records = read_records_file(args.infile)
    preds = []
    for r in records:
        mask = detect_person_points(r.scan(), spec)
        labels = np.where(mask, int(ClassLabel.PERSON),
                          int(ClassLabel.OTHER)).astype(np.int64)
        preds.append(Prediction(scene_id=r.scene_id, frame=r.frame, labels=labels))
    write_predictions_file(args.out, preds)
    print(f"leg predictions for {len(preds)} scans -> {args.out}")
    return 0


def _format_cell(entry):
    if entry is None:
        return "-"
    mean, std = entry
    if std is None:
        return f"{100 * mean:.2f}"
    return f"{100 * mean:.2f}±{100 * std:.2f}"


def cmd_eval(args) -> int:
    _, truth = _load_truth(args.truth)
    predictions = _load_predictions(args.pred)
    class_mask = None
    if args.classes:
        class_mask = {int(class_from_name(n)) for n in args.classes.split(",")}
    report = evaluate_predictions(predictions, truth,
                                  merge_linear=args.merge_linear,
                                  class_mask=class_mask)

    names = [CLASS_NAMES[c] for c in report["classes"]]
    print(f"evaluated {report['n_scans']} scans, {report['n_points']} points"
          + (f", {report['n_samples']} samples" if report["n_samples"] > 1 else ""))
    header = ["Metric", "All"] + names
    rows = [
        ["CA"] + [_format_cell(report["mca"])] +
        [_format_cell(report["per_class"][n]["ca"]) for n in names],
        ["IoU"] + [_format_cell(report["miou"])] +
        [_format_cell(report["per_class"][n]["iou"]) for n in names],
    ]
    widths = [max(len(str(row[i])) for row in [header] + rows)
              for i in range(len(header))]
    for row in [header] + rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))
    if report["undefined"]:
        print(f"IoU undefined (excluded from mIoU): {', '.join(report['undefined'])}")
    print(f"means excluding Other: mCA {_format_cell(report['mca_no_other'])}  "
          f"mIoU {_format_cell(report['miou_no_other'])}")

    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["class", "ca_mean", "ca_std", "iou_mean", "iou_std"])
            for name in names:
                entry = report["per_class"][name]
                ca, iou_ = entry["ca"], entry["iou"]
                writer.writerow([
                    name, ca[0], "" if ca[1] is None else ca[1],
                    "" if iou_ is None else iou_[0],
                    "" if iou_ is None or iou_[1] is None else iou_[1]])
            for key in ("mca", "miou", "mca_no_other", "miou_no_other"):
                mean, std = report[key]
                writer.writerow([key, mean, "" if std is None else std, "", ""])
    return 0


def cmd_simulate(args) -> int:
    scene, noise, pose_noise, trajectory, seed = sim.load_scene_file(args.scene)
    if not trajectory:
        raise DataError("scene file has no trajectory")
    from .scan_model import SensorSpec
    spec = SensorSpec()
    frames = sim.simulate_sequence(scene, trajectory, spec, noise,
                                   pose_noise, seed)
    records = [DatasetRecord(
        scene_id=scene.scene_id, frame=f.frame, timestamp=f.timestamp,
        ranges=f.scan.ranges, intensities=f.scan.intensities,
        init_pose=f.init_pose, true_pose=f.true_pose, labels=f.truth_labels)
        for f in frames]
    write_records_file(args.out, records, spec)
    print(f"simulated {len(records)} frames of scene "
          f"{scene.scene_id!r} -> {args.out}")
    if args.map_out:
        semmap = sim.rasterize_scene(scene)
        Path(args.map_out).write_bytes(map_label.save_semantic_map(semmap))
        print(f"ground-truth semantic map -> {args.map_out}")
    return 0


def cmd_stats(args) -> int:
    _, records = read_records_file(args.infile)
    labeled = [r.labels for r in records if r.labels is not None]
    if not labeled:
        raise DataError("no labeled records in input")
    counts, percentages = eval_metrics.class_frequencies(labeled)
    print(f"{'class':<10}  {'points':>12}  {'percent':>8}")
    for c, name in enumerate(CLASS_NAMES):
        print(f"{name:<10}  {int(counts[c]):>12}  {percentages[c]:>7.2f}%")
    print(f"{'total':<10}  {int(counts.sum()):>12}  {100.0:>7.2f}%")
    return 0


def cmd_split(args) -> int:
    path = Path(args.infile)
    files = sorted(path.glob("*.jsonl")) if path.is_dir() else [path]
    if not files:
        raise DataError(f"no .jsonl files under {path}")
    spec = None
    records = []
    for f in files:
        file_spec, file_records = read_records_file(f)
        if spec is None:
            spec = file_spec
        elif file_spec != spec:
            raise DataError(f"{f} has a different sensor spec")
        records.extend(file_records)
    split_spec = SplitSpec(seed=args.seed)
    train, val, test = split_dataset(records, split_spec)
    out_dir = Path(args.out_dir) if args.out_dir else \
        (path if path.is_dir() else path.parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, subset in (("train", train), ("val", val), ("test", test)):
        write_records_file(out_dir / f"{name}.jsonl", subset, spec)
    print(f"split {len(records)} records -> train {len(train)} / "
          f"val {len(val)} / test {len(test)} in {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semlabel",
        description="semi-automatic semantic labeling toolkit for 2D lidar scans")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rasterize-map",
                       help="rasterize polygon annotations onto an occupancy map")
    p.add_argument("--map", required=True, help="map metadata YAML")
    p.add_argument("--labels", required=True, help="polygon annotation JSON")
    p.add_argument("--out", required=True, help="output semantic map file")
    p.set_defaults(func=cmd_rasterize_map)

    p = sub.add_parser("autolabel", help="label scans against a semantic map")
    p.add_argument("--semmap", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-icp", action="store_true",
                   help="use the initial pose without ICP refinement")
    p.add_argument("--report", help="per-class count CSV")
    p.set_defaults(func=cmd_autolabel)

    p = sub.add_parser("extract-lines",
                       help="line-extraction baseline predictions")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract_lines)

    p = sub.add_parser("detect-legs", help="leg-detection baseline predictions")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect_legs)

    p = sub.add_parser("eval", help="score predictions against labeled truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--merge-linear", action="store_true",
                   help="collapse Door/Elevator into Wall before scoring")
    p.add_argument("--classes", help="comma-separated class names to average over")
    p.add_argument("--csv", help="write the report as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="raycast a synthetic scene file")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--map-out", help="also write the ground-truth semantic map")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="class frequency statistics of a labeled file")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="deterministic train/val/test split")
    p.add_argument("--in", dest="infile", required=True,
                   help="record file or directory of .jsonl files")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_split)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, RecordFormatError, map_label.MapParseError,
            map_label.UnsupportedFormatError, ValueError, KeyError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
