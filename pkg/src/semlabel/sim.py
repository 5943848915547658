"""Synthetic 2D scene raycaster with ground-truth labels.

Scenes are built from rectangles, discs, and thick wall segments, each with a
class and a reflectance material.  Casting a scan returns exact ray-object
intersections plus Gaussian range noise, an intensity response that falls off
with range and incidence angle

    intensity = I0 * cos(phi)^k / (1 + a * r)

(painted drywall decays gently with range and angle; bare metal keeps a
narrow specular lobe), and the true class of every beam.  Rasterizing the
static objects yields the matching ground-truth semantic map, so the entire
labeling pipeline can be scored against a known answer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .map_label import FREE, OCCUPIED, OccupancyGridMap, SemanticGridMap
from .scan_model import (ClassLabel, LidarScan, Pose2D, SensorSpec,
                         beam_angles, class_from_name, CLASS_NAMES)

SCENE_SCHEMA_VERSION = 1

_T_MIN = 1e-9  # ignore intersections closer than this (self-hits)


@dataclass(frozen=True)
class Material:
    intensity_base: float   # I0, raw sensor units at zero range, normal incidence
    angle_exponent: float   # k: cos(phi)^k lobe width (high k = narrow/specular)
    range_decay: float      # a [1/m]: 1 / (1 + a * r) falloff

    def __post_init__(self):
        if self.intensity_base < 0 or self.angle_exponent < 0 or self.range_decay < 0:
            raise ValueError("material parameters must be non-negative")


# invented per-class reflectance presets: matte builders' surfaces decay
# gradually, metal keeps a narrow lobe, fabrics are dim
MATERIAL_PRESETS = {
    ClassLabel.OTHER: Material(1500.0, 1.0, 0.15),
    ClassLabel.CHAIR: Material(2000.0, 2.0, 0.10),
    ClassLabel.DOOR: Material(2300.0, 1.8, 0.10),
    ClassLabel.ELEVATOR: Material(4000.0, 8.0, 0.05),
    ClassLabel.PERSON: Material(1800.0, 1.0, 0.20),
    ClassLabel.PILLAR: Material(2600.0, 1.0, 0.12),
    ClassLabel.SOFA: Material(1700.0, 0.9, 0.18),
    ClassLabel.TABLE: Material(2250.0, 1.6, 0.10),
    ClassLabel.TRASH_BIN: Material(2100.0, 1.2, 0.10),
    ClassLabel.WALL: Material(3000.0, 0.8, 0.15),
}


@dataclass
class SceneObject:
    """One scene primitive: axis-aligned rect, disc, or thick wall segment.

    Dynamic objects (only Person discs may move) advance along a linear path
    at ``velocity`` meters per second.
    """

    shape: str                  # "rect" | "disc" | "wall"
    label: ClassLabel
    material: Material | None = None
    # rect
    minimum: np.ndarray | None = None
    size: np.ndarray | None = None
    # disc
    center: np.ndarray | None = None
    radius: float = 0.0
    # wall segment
    p0: np.ndarray | None = None
    p1: np.ndarray | None = None
    thickness: float = 0.0
    dynamic: bool = False
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.material is None:
            self.material = MATERIAL_PRESETS[self.label]
        if self.shape == "rect":
            self.minimum = np.asarray(self.minimum, dtype=float)
            self.size = np.asarray(self.size, dtype=float)
            if np.any(self.size <= 0):
                raise ValueError("rect size must be positive")
        elif self.shape == "disc":
            self.center = np.asarray(self.center, dtype=float)
            if self.radius <= 0:
                raise ValueError("disc radius must be positive")
        elif self.shape == "wall":
            self.p0 = np.asarray(self.p0, dtype=float)
            self.p1 = np.asarray(self.p1, dtype=float)
            if self.thickness <= 0:
                raise ValueError("wall thickness must be positive")
            if np.linalg.norm(self.p1 - self.p0) < 1e-12:
                raise ValueError("wall endpoints coincide")
        else:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.dynamic and self.label != ClassLabel.PERSON:
            raise ValueError("only Person objects may be dynamic")
        self.velocity = np.asarray(self.velocity, dtype=float)

    def at_time(self, t: float) -> "SceneObject":
        if not self.dynamic or t == 0.0:
            return self
        offset = self.velocity * t
        if self.shape == "disc":
            return replace(self, center=self.center + offset)
        if self.shape == "rect":
            return replace(self, minimum=self.minimum + offset)
        return replace(self, p0=self.p0 + offset, p1=self.p1 + offset)

    def area(self) -> float:
        if self.shape == "rect":
            return float(self.size[0] * self.size[1])
        if self.shape == "disc":
            return math.pi * self.radius ** 2
        return float(np.linalg.norm(self.p1 - self.p0) * self.thickness)

    def boundary_segments(self) -> np.ndarray:
        """(K, 2, 2) array of boundary segments for raycasting."""
        if self.shape == "rect":
            x0, y0 = self.minimum
            x1, y1 = self.minimum + self.size
            c = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        elif self.shape == "wall":
            axis = self.p1 - self.p0
            n = np.array([-axis[1], axis[0]]) / np.linalg.norm(axis)
            h = 0.5 * self.thickness * n
            c = np.array([self.p0 - h, self.p1 - h, self.p1 + h, self.p0 + h])
        else:
            raise ValueError("discs have no boundary segments")
        return np.stack((c, np.roll(c, -1, axis=0)), axis=1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean containment test for (N, 2) points (boundary inclusive)."""
        pts = np.asarray(points, dtype=float)
        if self.shape == "rect":
            hi = self.minimum + self.size
            return np.all((pts >= self.minimum) & (pts <= hi), axis=1)
        if self.shape == "disc":
            return np.sum((pts - self.center) ** 2, axis=1) <= self.radius ** 2
        axis = self.p1 - self.p0
        length = np.linalg.norm(axis)
        u = axis / length
        n = np.array([-u[1], u[0]])
        rel = pts - (self.p0 + self.p1) / 2.0
        return (np.abs(rel @ u) <= length / 2.0) & \
            (np.abs(rel @ n) <= self.thickness / 2.0)


@dataclass
class Scene:
    objects: list
    bounds: np.ndarray  # [xmin, ymin, xmax, ymax]
    scene_id: str = "scene"
    map_resolution: float = 0.05

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.bounds.shape != (4,) or np.any(self.bounds[2:] <= self.bounds[:2]):
            raise ValueError("bounds must be [xmin, ymin, xmax, ymax] with positive extent")

    def at_time(self, t: float) -> "Scene":
        if not any(o.dynamic for o in self.objects):
            return self
        return replace(self, objects=[o.at_time(t) for o in self.objects])

    def static_objects(self) -> list:
        return [o for o in self.objects if not o.dynamic
                and o.label != ClassLabel.PERSON]


@dataclass(frozen=True)
class RaycastNoise:
    range_std: float = 0.01
    intensity_frac: float = 0.02  # sigma as a fraction of the hit material's I0

    def __post_init__(self):
        if self.range_std < 0 or self.intensity_frac < 0:
            raise ValueError("noise levels must be non-negative")


@dataclass
class RaycastHits:
    """Per-beam hit metadata: object index (-1 = miss), true range, cos(incidence)."""

    object_index: np.ndarray
    true_range: np.ndarray
    cos_incidence: np.ndarray


def _intersect_segments(origin, dirs, segments):
    """Smallest hit parameter per (beam, segment) pair.

    ``dirs`` is (B, 2) unit directions, ``segments`` (K, 2, 2).  Returns
    (t, cos_incidence) arrays of shape (B, K) with inf where there is no hit.
    """
    a = segments[:, 0]                      # (K, 2)
    e = segments[:, 1] - segments[:, 0]     # (K, 2)
    rel = a - origin                        # (K, 2)
    # cross products via components: d x e and rel x e, rel x d
    denom = dirs[:, 0:1] * e[None, :, 1] - dirs[:, 1:2] * e[None, :, 0]  # (B, K)
    rel_cross_e = rel[:, 0] * e[:, 1] - rel[:, 1] * e[:, 0]              # (K,)
    rel_cross_d = rel[None, :, 0] * dirs[:, 1:2] - rel[None, :, 1] * dirs[:, 0:1]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = rel_cross_e[None, :] / denom
        s = rel_cross_d / denom
    valid = (np.abs(denom) > 1e-12) & (t > _T_MIN) & (s >= 0.0) & (s <= 1.0)
    t = np.where(valid, t, np.inf)
    seg_len = np.linalg.norm(e, axis=1)
    normals = np.column_stack((e[:, 1], -e[:, 0])) / seg_len[:, None]
    cos_inc = np.abs(dirs @ normals.T)      # (B, K)
    return t, cos_inc


def _intersect_circles(origin, dirs, centers, radii):
    """Smallest hit parameter per (beam, circle) pair; (t, cos_incidence)."""
    oc = origin[None, :] - centers          # (M, 2)
    b = 2.0 * (dirs @ oc.T)                 # (B, M)
    c = np.sum(oc ** 2, axis=1) - radii ** 2
    disc = b ** 2 - 4.0 * c[None, :]
    sqrt_disc = np.sqrt(np.maximum(disc, 0.0))
    t1 = (-b - sqrt_disc) / 2.0
    t2 = (-b + sqrt_disc) / 2.0
    t = np.where(t1 > _T_MIN, t1, np.where(t2 > _T_MIN, t2, np.inf))
    t = np.where(disc >= 0.0, t, np.inf)
    t_safe = np.where(np.isfinite(t), t, 0.0)
    hit = origin[None, None, :] + t_safe[:, :, None] * dirs[:, None, :]
    normal = (hit - centers[None, :, :]) / radii[None, :, None]
    cos_inc = np.abs(np.sum(dirs[:, None, :] * normal, axis=2))
    cos_inc = np.where(np.isfinite(t), cos_inc, 0.0)
    return t, cos_inc


def raycast_scan(scene: Scene, pose: Pose2D, spec: SensorSpec,
                 noise: RaycastNoise | None = None, rng=None):
    """Cast one scan from ``pose``; returns (LidarScan, truth labels, hits).

    Each beam takes the nearest intersection over all objects; misses (or
    hits beyond the sensor's max range) become no-return beams labeled Other.
    """
    noise = noise or RaycastNoise()
    if rng is None or isinstance(rng, int):
        rng = np.random.default_rng(rng)

    angles = beam_angles(spec) + pose.theta
    dirs = np.column_stack((np.cos(angles), np.sin(angles)))
    origin = pose.translation()

    best_t = np.full(spec.n_beams, np.inf)
    best_obj = np.full(spec.n_beams, -1, dtype=np.int64)
    best_cos = np.zeros(spec.n_beams)

    seg_list, seg_obj = [], []
    circ_centers, circ_radii, circ_obj = [], [], []
    for oi, obj in enumerate(scene.objects):
        if obj.shape == "disc":
            circ_centers.append(obj.center)
            circ_radii.append(obj.radius)
            circ_obj.append(oi)
        else:
            segs = obj.boundary_segments()
            seg_list.append(segs)
            seg_obj.extend([oi] * len(segs))

    if seg_list:
        segments = np.concatenate(seg_list, axis=0)
        t, cos_inc = _intersect_segments(origin, dirs, segments)
        k = np.argmin(t, axis=1)
        rows = np.arange(spec.n_beams)
        better = t[rows, k] < best_t
        best_t = np.where(better, t[rows, k], best_t)
        best_cos = np.where(better, cos_inc[rows, k], best_cos)
        seg_obj = np.asarray(seg_obj)
        best_obj = np.where(better, seg_obj[k], best_obj)

    if circ_centers:
        t, cos_inc = _intersect_circles(origin, dirs,
                                        np.asarray(circ_centers),
                                        np.asarray(circ_radii))
        k = np.argmin(t, axis=1)
        rows = np.arange(spec.n_beams)
        better = t[rows, k] < best_t
        best_t = np.where(better, t[rows, k], best_t)
        best_cos = np.where(better, cos_inc[rows, k], best_cos)
        circ_obj = np.asarray(circ_obj)
        best_obj = np.where(better, circ_obj[k], best_obj)

    hit = np.isfinite(best_t) & (best_t <= spec.range_max)
    ranges = np.full(spec.n_beams, spec.no_return)
    intensities = np.zeros(spec.n_beams)
    labels = np.full(spec.n_beams, int(ClassLabel.OTHER), dtype=np.uint8)

    range_noise = rng.normal(0.0, noise.range_std, spec.n_beams) \
        if noise.range_std > 0 else np.zeros(spec.n_beams)
    intensity_noise = rng.standard_normal(spec.n_beams) \
        if noise.intensity_frac > 0 else np.zeros(spec.n_beams)

    if np.any(hit):
        obj_i0 = np.array([o.material.intensity_base for o in scene.objects])
        obj_k = np.array([o.material.angle_exponent for o in scene.objects])
        obj_a = np.array([o.material.range_decay for o in scene.objects])
        obj_label = np.array([int(o.label) for o in scene.objects], dtype=np.uint8)
        idx = np.flatnonzero(hit)
        oi = best_obj[idx]
        r = best_t[idx]
        ranges[idx] = np.clip(r + range_noise[idx], 0.0, spec.range_max)
        value = obj_i0[oi] * best_cos[idx] ** obj_k[oi] / (1.0 + obj_a[oi] * r)
        value += noise.intensity_frac * obj_i0[oi] * intensity_noise[idx]
        intensities[idx] = np.maximum(value, 0.0)
        labels[idx] = obj_label[oi]

    scan = LidarScan(ranges=ranges, intensities=intensities)
    hits = RaycastHits(object_index=np.where(hit, best_obj, -1),
                       true_range=np.where(hit, best_t, np.inf),
                       cos_incidence=np.where(hit, best_cos, 0.0))
    return scan, labels, hits


def rasterize_scene(scene: Scene, resolution: float | None = None) -> SemanticGridMap:
    """Ground-truth semantic map of the scene's static objects.

    A cell is Occupied with an object's class when its center lies inside the
    object (smallest object wins ties, then smallest class id, matching the
    annotation rasterizer); all other in-bounds cells are Free.
    """
    resolution = resolution or scene.map_resolution
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    xmin, ymin, xmax, ymax = scene.bounds
    width = max(1, int(math.ceil((xmax - xmin) / resolution)))
    height = max(1, int(math.ceil((ymax - ymin) / resolution)))
    origin = Pose2D(xmin, ymin, 0.0)
    cells = np.full((height, width), FREE, dtype=np.uint8)
    labels = np.full((height, width), int(ClassLabel.OTHER), dtype=np.uint8)
    grid = OccupancyGridMap(width=width, height=height, resolution=resolution,
                            origin=origin, cells=cells)
    centers = grid.cell_centers().reshape(-1, 2)
    order = sorted(scene.static_objects(),
                   key=lambda o: (o.area(), int(o.label)), reverse=True)
    flat_cells = cells.reshape(-1)
    flat_labels = labels.reshape(-1)
    for obj in order:
        mask = obj.contains(centers)
        flat_cells[mask] = OCCUPIED
        flat_labels[mask] = int(obj.label)
    return SemanticGridMap(grid=grid, labels=labels)


@dataclass
class SimFrame:
    frame: int
    timestamp: float
    scan: LidarScan
    truth_labels: np.ndarray
    true_pose: Pose2D
    init_pose: Pose2D


@dataclass(frozen=True)
class PoseNoise:
    xy_std: float = 0.05
    theta_std: float = math.radians(1.0)

    def __post_init__(self):
        if self.xy_std < 0 or self.theta_std < 0:
            raise ValueError("pose noise must be non-negative")


def simulate_sequence(scene: Scene, trajectory, spec: SensorSpec,
                      noise: RaycastNoise | None = None,
                      pose_noise: PoseNoise | None = None,
                      seed: int = 0) -> list[SimFrame]:
    """Simulate a drive along ``trajectory`` (one scan per pose).

    Deterministic for a fixed seed: every frame derives its own RNG stream
    from (seed, frame index), so results do not depend on evaluation order.
    The "localization" initial pose is the true pose perturbed by Gaussian
    noise, mimicking an imperfect on-robot estimate.  Dynamic objects advance
    along their linear paths at the sensor frame rate.
    """
    noise = noise or RaycastNoise()
    pose_noise = pose_noise or PoseNoise()
    frames = []
    for k, pose in enumerate(trajectory):
        if not isinstance(pose, Pose2D):
            pose = Pose2D(*pose)
        t = k / spec.rate
        rng = np.random.default_rng((seed, k))
        scan, labels, _ = raycast_scan(scene.at_time(t), pose, spec, noise, rng)
        scan.timestamp = t
        dx, dy = rng.normal(0.0, pose_noise.xy_std, 2) \
            if pose_noise.xy_std > 0 else (0.0, 0.0)
        dth = rng.normal(0.0, pose_noise.theta_std) \
            if pose_noise.theta_std > 0 else 0.0
        init = Pose2D(pose.x + dx, pose.y + dy, pose.theta + dth)
        frames.append(SimFrame(frame=k, timestamp=t, scan=scan,
                               truth_labels=labels, true_pose=pose,
                               init_pose=init))
    return frames


# ---------------------------------------------------------------------------
# Scene description files (JSON; see docs/formats.md)


def scene_to_dict(scene: Scene, noise: RaycastNoise | None = None,
                  pose_noise: PoseNoise | None = None,
                  trajectory=None, seed: int = 0) -> dict:
    objects = []
    for o in scene.objects:
        entry = {"shape": o.shape, "class": CLASS_NAMES[int(o.label)]}
        if o.shape == "rect":
            entry["min"] = list(map(float, o.minimum))
            entry["size"] = list(map(float, o.size))
        elif o.shape == "disc":
            entry["center"] = list(map(float, o.center))
            entry["radius"] = float(o.radius)
        else:
            entry["p0"] = list(map(float, o.p0))
            entry["p1"] = list(map(float, o.p1))
            entry["thickness"] = float(o.thickness)
        entry["material"] = {
            "intensity_base": o.material.intensity_base,
            "angle_exponent": o.material.angle_exponent,
            "range_decay": o.material.range_decay,
        }
        if o.dynamic:
            entry["dynamic"] = True
            entry["velocity"] = list(map(float, o.velocity))
        objects.append(entry)
    doc = {
        "schema_version": SCENE_SCHEMA_VERSION,
        "scene_id": scene.scene_id,
        "bounds": list(map(float, scene.bounds)),
        "map_resolution": scene.map_resolution,
        "objects": objects,
        "seed": seed,
    }
    if noise is not None:
        doc["noise"] = {"range_std": noise.range_std,
                        "intensity_frac": noise.intensity_frac}
    if pose_noise is not None:
        doc["pose_noise"] = {"xy_std": pose_noise.xy_std,
                             "theta_std": pose_noise.theta_std}
    if trajectory is not None:
        doc["trajectory"] = [[p.x, p.y, p.theta] if isinstance(p, Pose2D)
                             else list(map(float, p)) for p in trajectory]
    return doc


def scene_from_dict(doc: dict):
    """Parse a scene document; returns (scene, noise, pose_noise, trajectory, seed)."""
    version = doc.get("schema_version")
    if version != SCENE_SCHEMA_VERSION:
        raise ValueError(f"unsupported scene schema_version {version!r}")
    objects = []
    for entry in doc["objects"]:
        label = class_from_name(entry["class"])
        mat = entry.get("material")
        material = Material(**mat) if mat else None
        kwargs = dict(shape=entry["shape"], label=label, material=material,
                      dynamic=bool(entry.get("dynamic", False)),
                      velocity=np.asarray(entry.get("velocity", (0.0, 0.0))))
        if entry["shape"] == "rect":
            kwargs.update(minimum=entry["min"], size=entry["size"])
        elif entry["shape"] == "disc":
            kwargs.update(center=entry["center"], radius=float(entry["radius"]))
        elif entry["shape"] == "wall":
            kwargs.update(p0=entry["p0"], p1=entry["p1"],
                          thickness=float(entry["thickness"]))
        else:
            raise ValueError(f"unknown shape {entry['shape']!r}")
        objects.append(SceneObject(**kwargs))
    scene = Scene(objects=objects, bounds=np.asarray(doc["bounds"], dtype=float),
                  scene_id=doc.get("scene_id", "scene"),
                  map_resolution=float(doc.get("map_resolution", 0.05)))
    n = doc.get("noise", {})
    noise = RaycastNoise(range_std=float(n.get("range_std", 0.01)),
                         intensity_frac=float(n.get("intensity_frac", 0.02)))
    pn = doc.get("pose_noise", {})
    pose_noise = PoseNoise(xy_std=float(pn.get("xy_std", 0.05)),
                           theta_std=float(pn.get("theta_std", math.radians(1.0))))
    trajectory = [Pose2D(*p) for p in doc.get("trajectory", [])]
    return scene, noise, pose_noise, trajectory, int(doc.get("seed", 0))


def load_scene_file(path):
    from pathlib import Path
    return scene_from_dict(json.loads(Path(path).read_text()))
