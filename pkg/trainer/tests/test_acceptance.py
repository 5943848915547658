"""Trainer release criteria, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s`. The desk-scale criterion
trains two models on ~2,000 simulated frames; expect a few minutes on CPU.
"""

import csv
import json
import math
import subprocess
import time

import numpy as np
import pytest
import torch

from segvae import (ModelConfig, TrainConfig, predict_records,
                    predict_to_files, read_record_file, train)

SLIM = ModelConfig(encoder_channels=(16, 32, 64), latent_dim=128)


def report(name, elapsed=None):
    suffix = f" ({elapsed:.0f} s)" if elapsed is not None else ""
    print(f"[PASS] {name}{suffix}")


def eval_csv(pred_path, truth_path, csv_path):
    """Score a prediction file with the toolkit evaluator; returns the CSV rows."""
    subprocess.run(["semlabel", "eval", "--pred", str(pred_path),
                    "--truth", str(truth_path), "--csv", str(csv_path)],
                   check=True, capture_output=True)
    rows = {}
    with open(csv_path) as f:
        for row in csv.reader(f):
            if row and row[0] not in ("class",):
                rows[row[0]] = row
    return rows


def metric(rows, name):
    mean = float(rows[name][1])
    std = float(rows[name][2]) if rows[name][2] else None
    return mean, std


def test_cross_implementation_loss_equality(tmp_path):
    """Eq-for-eq agreement with the toolkit's reference loss on a pinned
    exported batch, 1e-5 relative."""
    from test_losses import export_batch, reference_value, trainer_value
    worst = 0.0
    for seed in range(5):
        path = export_batch(tmp_path, seed=seed)
        ref, _ = reference_value(path)
        ours, _ = trainer_value(path)
        worst = max(worst, abs(ours - ref) / abs(ref))
        assert ours == pytest.approx(ref, rel=1e-5)
    report(f"cross-implementation loss equality (worst rel diff {worst:.2e})")


@pytest.fixture(scope="module")
def desk_scale_run(desk_scale_splits, tmp_path_factory):
    """Train the full and range-only models once; share across criteria."""
    root = tmp_path_factory.mktemp("run")
    sensor, train_recs = read_record_file(desk_scale_splits["train"])
    assert len(train_recs) >= 2000
    results = {}
    t0 = time.monotonic()
    for variant in ("ri", "r"):
        config = TrainConfig(
            model=ModelConfig(input_variant=variant,
                              encoder_channels=(16, 32, 64), latent_dim=128),
            epochs=30, seed=0)
        results[variant] = train(train_recs, sensor, config, log=None)
    train_time = time.monotonic() - t0
    return {"sensor": sensor, "results": results, "train_time": train_time,
            "root": root, "n_train": len(train_recs)}


def test_desk_scale_learning_signal(desk_scale_run, desk_scale_splits):
    """Test mIoU beats both geometric baselines; intensity ablation does not
    beat the full model (the scene's door/elevator panels differ from walls
    almost only in material)."""
    t0 = time.monotonic()
    root = desk_scale_run["root"]
    sensor = desk_scale_run["sensor"]
    test_path = desk_scale_splits["test"]
    _, test_recs = read_record_file(test_path)

    assert desk_scale_run["train_time"] < 1800, "training exceeded 30 minutes"

    miou = {}
    for variant, result in desk_scale_run["results"].items():
        pred_path = root / f"pred_{variant}.jsonl"
        predict_to_files(result.model, test_recs, sensor, result.stats,
                         pred_path, n_samples=8, seed=1)
        rows = eval_csv(pred_path, test_path, root / f"eval_{variant}.csv")
        miou[variant], _ = metric(rows, "miou")

    baseline_miou = {}
    for tool, name in (("extract-lines", "lines"), ("detect-legs", "legs")):
        pred_path = root / f"{name}.jsonl"
        subprocess.run(["semlabel", tool, "--in", str(test_path),
                        "--out", str(pred_path)], check=True,
                       capture_output=True)
        rows = eval_csv(pred_path, test_path, root / f"eval_{name}.csv")
        baseline_miou[name], _ = metric(rows, "miou")

    elapsed = time.monotonic() - t0
    assert miou["ri"] > baseline_miou["lines"], \
        f"mIoU {miou['ri']:.3f} !> line baseline {baseline_miou['lines']:.3f}"
    assert miou["ri"] > baseline_miou["legs"], \
        f"mIoU {miou['ri']:.3f} !> leg baseline {baseline_miou['legs']:.3f}"
    assert miou["r"] <= miou["ri"], \
        f"range-only {miou['r']:.3f} beat range+intensity {miou['ri']:.3f}"
    report(f"desk-scale learning signal (mIoU {miou['ri']:.3f} vs lines "
           f"{baseline_miou['lines']:.3f} / legs {baseline_miou['legs']:.3f}; "
           f"range-only {miou['r']:.3f}; trained {desk_scale_run['n_train']} "
           f"scans in {desk_scale_run['train_time']:.0f} s)", elapsed)


def test_sampling_consistency(desk_scale_run, desk_scale_splits):
    """Metric std over 32 stochastic samples stays under 2% absolute."""
    t0 = time.monotonic()
    root = desk_scale_run["root"]
    sensor = desk_scale_run["sensor"]
    result = desk_scale_run["results"]["ri"]
    _, test_recs = read_record_file(desk_scale_splits["test"])
    subset = test_recs[:60]
    truth_path = root / "consistency_truth.jsonl"
    # re-emit the subset as its own truth file through the documented format
    with open(desk_scale_splits["test"]) as f:
        lines = f.read().splitlines()
    keep = {(r.scene_id, r.frame) for r in subset}
    with open(truth_path, "w") as f:
        f.write(lines[0] + "\n")
        for line in lines[1:]:
            obj = json.loads(line)
            if (obj["scene_id"], obj["frame"]) in keep:
                f.write(line + "\n")

    pred_path = root / "pred_32.jsonl"
    predict_to_files(result.model, subset, sensor, result.stats, pred_path,
                     n_samples=32, seed=2)
    rows = eval_csv(pred_path, truth_path, root / "eval_32.csv")
    miou_mean, miou_std = metric(rows, "miou")
    mca_mean, mca_std = metric(rows, "mca")
    elapsed = time.monotonic() - t0
    assert miou_std is not None and mca_std is not None
    assert miou_std < 0.02, f"mIoU std {miou_std:.4f} over 32 samples"
    assert mca_std < 0.02, f"mCA std {mca_std:.4f} over 32 samples"
    report(f"sampling consistency (mIoU {miou_mean:.3f} +- {miou_std:.4f}, "
           f"mCA {mca_mean:.3f} +- {mca_std:.4f} over 32 samples)", elapsed)
