import json
import math

import numpy as np
import pytest

from semlabel.cli import main
from semlabel.dataset_io import read_predictions_file, read_records_file
from semlabel.map_label import load_semantic_map
from semlabel.scan_model import ClassLabel, Pose2D, SensorSpec
from semlabel.scenes import circular_trajectory, furnished_room
from semlabel.sim import PoseNoise, RaycastNoise, scene_to_dict

SPEC = SensorSpec()


@pytest.fixture(scope="module")
def sim_files(tmp_path_factory):
    """Scene file -> simulated records + ground-truth semantic map."""
    root = tmp_path_factory.mktemp("sim")
    scene = furnished_room()
    doc = scene_to_dict(scene, RaycastNoise(0.01, 0.02),
                        PoseNoise(0.05, math.radians(2)),
                        circular_trajectory(12), seed=3)
    scene_path = root / "scene.json"
    scene_path.write_text(json.dumps(doc))
    scans = root / "scans.jsonl"
    semmap = root / "semmap.bin"
    code = main(["simulate", "--scene", str(scene_path), "--out", str(scans),
                 "--map-out", str(semmap)])
    assert code == 0
    return root, scans, semmap


def test_simulate_outputs(sim_files):
    root, scans, semmap = sim_files
    spec, records = read_records_file(scans)
    assert spec == SPEC
    assert len(records) == 12
    assert records[0].labels is not None
    sem = load_semantic_map(semmap.read_bytes())
    assert sem.grid.cells.shape[0] > 100


def test_autolabel_and_eval(sim_files, tmp_path):
    root, scans, semmap = sim_files
    labeled = tmp_path / "labeled.jsonl"
    report = tmp_path / "report.csv"
    assert main(["autolabel", "--semmap", str(semmap), "--in", str(scans),
                 "--out", str(labeled), "--report", str(report)]) == 0
    _, records = read_records_file(labeled)
    assert all(r.labels is not None for r in records)
    assert report.exists()

    # evaluating the simulator's own labels against themselves is perfect
    csv_out = tmp_path / "eval.csv"
    assert main(["eval", "--pred", str(scans), "--truth", str(scans),
                 "--csv", str(csv_out)]) == 0
    rows = csv_out.read_text().strip().splitlines()
    mca_row = [r for r in rows if r.startswith("mca,")][0]
    assert float(mca_row.split(",")[1]) == 1.0

    # auto labels against simulator truth are nearly perfect on this scene
    assert main(["eval", "--pred", str(labeled), "--truth", str(scans),
                 "--csv", str(csv_out)]) == 0
    rows = csv_out.read_text().strip().splitlines()
    mca = float([r for r in rows if r.startswith("mca,")][0].split(",")[1])
    assert mca > 0.9


def test_autolabel_no_icp_flag(sim_files, tmp_path):
    root, scans, semmap = sim_files
    out = tmp_path / "noicp.jsonl"
    assert main(["autolabel", "--semmap", str(semmap), "--in", str(scans),
                 "--out", str(out), "--no-icp"]) == 0
    _, records = read_records_file(out)
    _, originals = read_records_file(scans)
    # without ICP the output pose equals the initial estimate
    for r, o in zip(records, originals):
        assert r.init_pose == o.init_pose


def test_extract_lines_and_detect_legs(sim_files, tmp_path):
    root, scans, semmap = sim_files
    lines = tmp_path / "lines.jsonl"
    legs = tmp_path / "legs.jsonl"
    assert main(["extract-lines", "--in", str(scans), "--out", str(lines)]) == 0
    assert main(["detect-legs", "--in", str(scans), "--out", str(legs)]) == 0
    line_preds = read_predictions_file(lines)
    leg_preds = read_predictions_file(legs)
    assert len(line_preds) == len(leg_preds) == 12
    line_labels = np.unique(np.concatenate([p.labels for p in line_preds]))
    assert set(line_labels) <= {int(ClassLabel.OTHER), int(ClassLabel.WALL)}
    leg_labels = np.unique(np.concatenate([p.labels for p in leg_preds]))
    assert set(leg_labels) <= {int(ClassLabel.OTHER), int(ClassLabel.PERSON)}


def test_eval_merge_linear_and_classes(sim_files, tmp_path):
    root, scans, semmap = sim_files
    lines = tmp_path / "lines.jsonl"
    assert main(["extract-lines", "--in", str(scans), "--out", str(lines)]) == 0
    csv_out = tmp_path / "lines_eval.csv"
    assert main(["eval", "--pred", str(lines), "--truth", str(scans),
                 "--merge-linear", "--classes", "Wall",
                 "--csv", str(csv_out)]) == 0
    rows = csv_out.read_text().strip().splitlines()
    wall_row = [r for r in rows if r.startswith("Wall,")][0]
    iou_wall = float(wall_row.split(",")[3])
    assert iou_wall > 0.5


def test_stats_matches_recount(sim_files, capsys):
    root, scans, semmap = sim_files
    assert main(["stats", "--in", str(scans)]) == 0
    out = capsys.readouterr().out
    _, records = read_records_file(scans)
    wall_count = int(sum(np.sum(r.labels == int(ClassLabel.WALL))
                         for r in records))
    wall_line = [l for l in out.splitlines() if l.startswith("Wall")][0]
    assert str(wall_count) in wall_line


def test_split_cli(sim_files, tmp_path):
    root, scans, semmap = sim_files
    out_dir = tmp_path / "splits"
    assert main(["split", "--in", str(scans), "--seed", "5",
                 "--out-dir", str(out_dir)]) == 0
    sizes = {}
    for name in ("train", "val", "test"):
        _, records = read_records_file(out_dir / f"{name}.jsonl")
        sizes[name] = len(records)
    # 12 frames: floor(8.4), floor(1.2), remainder
    assert (sizes["train"], sizes["val"], sizes["test"]) == (8, 1, 3)

    again = tmp_path / "splits2"
    assert main(["split", "--in", str(scans), "--seed", "5",
                 "--out-dir", str(again)]) == 0
    for name in ("train", "val", "test"):
        assert (out_dir / f"{name}.jsonl").read_bytes() == \
            (again / f"{name}.jsonl").read_bytes()


def test_rasterize_map(tmp_path):
    # 20x20 map image: free interior, occupied border
    pixels = np.full((20, 20), 254, dtype=np.uint8)
    pixels[0, :] = pixels[-1, :] = pixels[:, 0] = pixels[:, -1] = 0
    (tmp_path / "map.pgm").write_bytes(
        b"P5\n20 20\n255\n" + pixels.tobytes())
    (tmp_path / "map.yaml").write_text(
        "image: map.pgm\nresolution: 0.1\norigin: [0.0, 0.0, 0.0]\n"
        "negate: 0\noccupied_thresh: 0.65\nfree_thresh: 0.196\n")
    annotations = {"shapes": [
        {"label": "Wall", "points": [[0, 0], [20, 0], [20, 20], [0, 20]]},
        {"label": "Door", "points": [[8, 19], [12, 19], [12, 21], [8, 21]]},
    ]}
    (tmp_path / "labels.json").write_text(json.dumps(annotations))
    out = tmp_path / "semmap.bin"
    assert main(["rasterize-map", "--map", str(tmp_path / "map.yaml"),
                 "--labels", str(tmp_path / "labels.json"),
                 "--out", str(out)]) == 0
    sem = load_semantic_map(out.read_bytes())
    assert sem.grid.cells.shape == (20, 20)
    # the bottom image rows (world bottom after flip) carry the door strip
    assert int(ClassLabel.DOOR) in np.unique(sem.labels)
    assert int(ClassLabel.WALL) in np.unique(sem.labels)


def test_missing_file_is_data_error(tmp_path):
    assert main(["stats", "--in", str(tmp_path / "nope.jsonl")]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as err:
        main(["autolabel"])  # missing required arguments
    assert err.value.code == 2
