"""Shared fixtures: synthetic datasets produced by the labeling toolkit CLI.

The trainer consumes the toolkit exclusively through its file formats, so
fixtures shell out to `semlabel simulate` / `semlabel split` instead of
importing the library for data generation.
"""

import json
import math
import subprocess

import pytest


def scene_document(n_frames, seed=5):
    """Furnished-room scene file built against the documented schema.

    Straight surfaces snap onto the map's cell-center lattice (resolution /
    2 thick) so the raster map stays alignment-friendly; the door and
    elevator panels sit one cell proud of their walls and are metal (narrow
    specular lobe) while walls are matte, so intensity is the only strong
    cue separating them.
    """
    res = 0.02

    def snap(v, origin=-4.7):
        return origin + res / 2 + round((v - (origin + res / 2)) / res) * res

    band = res / 2
    metal = {"intensity_base": 4000.0, "angle_exponent": 8.0, "range_decay": 0.05}
    wood = {"intensity_base": 2300.0, "angle_exponent": 1.8, "range_decay": 0.10}
    h = snap(4.5)
    walls = [
        {"shape": "wall", "class": "Wall", "p0": [-h, -h], "p1": [h, -h], "thickness": band},
        {"shape": "wall", "class": "Wall", "p0": [h, -h], "p1": [h, h], "thickness": band},
        {"shape": "wall", "class": "Wall", "p0": [h, h], "p1": [-h, h], "thickness": band},
        {"shape": "wall", "class": "Wall", "p0": [-h, h], "p1": [-h, -h], "thickness": band},
        {"shape": "wall", "class": "Door", "material": wood,
         "p0": [snap(-1.2), snap(-4.5 + res)], "p1": [snap(-0.2), snap(-4.5 + res)],
         "thickness": band},
        {"shape": "wall", "class": "Elevator", "material": metal,
         "p0": [snap(4.5 - res), snap(-0.6)], "p1": [snap(4.5 - res), snap(0.6)],
         "thickness": band},
    ]

    def box(cls, x0, y0, x1, y1):
        x0, y0, x1, y1 = snap(x0), snap(y0), snap(x1), snap(y1)
        return [
            {"shape": "wall", "class": cls, "p0": [x0, y0], "p1": [x1, y0], "thickness": band},
            {"shape": "wall", "class": cls, "p0": [x1, y0], "p1": [x1, y1], "thickness": band},
            {"shape": "wall", "class": cls, "p0": [x1, y1], "p1": [x0, y1], "thickness": band},
            {"shape": "wall", "class": cls, "p0": [x0, y1], "p1": [x0, y0], "thickness": band},
        ]

    objects = walls
    objects += box("Table", 2.2, 2.0, 3.4, 2.8)
    objects += box("Sofa", -4.0, -2.0, -3.3, -0.4)
    objects += box("Chair", 1.6, -3.2, 2.1, -2.7)
    objects.append({"shape": "disc", "class": "Pillar", "center": [-2.5, 2.0], "radius": 0.25})
    objects.append({"shape": "disc", "class": "TrashBin", "center": [3.6, -3.4], "radius": 0.2})
    objects.append({"shape": "disc", "class": "Person", "center": [1.5, 0.8],
                    "radius": 0.15, "dynamic": True, "velocity": [-0.03, 0.01]})
    objects.append({"shape": "disc", "class": "Person", "center": [-1.2, -1.6],
                    "radius": 0.15, "dynamic": True, "velocity": [0.02, 0.02]})

    trajectory = []
    for k in range(n_frames):
        r = 0.5 + 0.9 * (0.5 + 0.5 * math.sin(k * 0.013))
        a = k * 0.05
        trajectory.append([r * math.cos(a), r * math.sin(a), a + math.pi / 2])

    return {
        "schema_version": 1,
        "scene_id": "trainroom",
        "bounds": [-4.7, -4.7, 4.7, 4.7],
        "map_resolution": res,
        "seed": seed,
        "noise": {"range_std": 0.01, "intensity_frac": 0.02},
        "pose_noise": {"xy_std": 0.05, "theta_std": math.radians(2)},
        "objects": objects,
        "trajectory": trajectory,
    }


def simulate(path_dir, n_frames, seed=5):
    scene_path = path_dir / "scene.json"
    scans_path = path_dir / "scans.jsonl"
    scene_path.write_text(json.dumps(scene_document(n_frames, seed)))
    subprocess.run(["semlabel", "simulate", "--scene", str(scene_path),
                    "--out", str(scans_path)], check=True,
                   capture_output=True)
    return scans_path


@pytest.fixture(scope="session")
def small_scans(tmp_path_factory):
    """100 labeled frames for fast tests."""
    return simulate(tmp_path_factory.mktemp("small"), 100)


@pytest.fixture(scope="session")
def desk_scale_splits(tmp_path_factory):
    """~2,900 frames split 70/10/20 -> train has just over 2,000 scans."""
    root = tmp_path_factory.mktemp("desk")
    scans = simulate(root, 2900)
    subprocess.run(["semlabel", "split", "--in", str(scans), "--seed", "3",
                    "--out-dir", str(root / "splits")], check=True,
                   capture_output=True)
    return {name: root / "splits" / f"{name}.jsonl"
            for name in ("train", "val", "test")}
