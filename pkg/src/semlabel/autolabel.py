"""End-to-end semi-automatic scan labeling.

One annotated map per scene is enough to label every scan recorded there:
take the localization pose as an initial guess, keep only the stable line
points, refine the pose with ICP, then transfer labels cell-by-cell.  Points
whose endpoint matches an occupied cell take that cell's label; points
landing in free space must have hit something that is not in the map, which
in this dataset means a person; everything else (unknown space, out of map)
is Other.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .line_extract import LineExtractParams, extract_lines, line_inlier_points
from .map_label import FREE, OCCUPIED, SemanticGridMap
from .scan_align import IcpParams, MapPointIndex, icp_refine
from .scan_model import (ClassLabel, LidarScan, Pose2D, SensorSpec,
                         polar_to_cartesian, transform_points)


@dataclass(frozen=True)
class LabelTransferParams:
    """``assoc_radius`` is the search radius for the nearest occupied cell.

    The default of 1.5 cells absorbs sub-cell alignment error without
    bleeding object labels into free space.
    """

    assoc_radius: float

    def __post_init__(self):
        if self.assoc_radius < 0:
            raise ValueError("assoc_radius must be >= 0")

    @classmethod
    def for_map(cls, semmap: SemanticGridMap) -> "LabelTransferParams":
        return cls(assoc_radius=1.5 * semmap.grid.resolution)


@dataclass
class LabeledScan:
    """A scan plus one class label per beam and its alignment diagnostics."""

    scan: LidarScan
    labels: np.ndarray
    pose_refined: Pose2D
    alignment_rms: float
    flagged: bool

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.labels.shape[0] != self.scan.n_beams:
            raise ValueError("labels length must equal the beam count")


class LabelQueryIndex:
    """Semantic map packaged for fast per-point label transfer."""

    def __init__(self, semmap: SemanticGridMap):
        self.semmap = semmap
        grid = semmap.grid
        iy, ix = np.nonzero(grid.cells == OCCUPIED)
        if len(ix):
            self.occupied_points = grid.cell_center(ix, iy)
            self.occupied_labels = semmap.labels[iy, ix]
            self.tree = cKDTree(self.occupied_points)
        else:
            self.occupied_points = np.zeros((0, 2))
            self.occupied_labels = np.zeros(0, dtype=np.uint8)
            self.tree = None

    def map_index(self) -> MapPointIndex:
        return MapPointIndex(self.occupied_points)

    def label_points(self, points: np.ndarray,
                     params: LabelTransferParams) -> np.ndarray:
        """Vectorized label transfer for (N, 2) world points."""
        points = np.asarray(points, dtype=np.float64)
        labels = np.full(len(points), int(ClassLabel.OTHER), dtype=np.uint8)
        if len(points) == 0:
            return labels
        near_occupied = np.zeros(len(points), dtype=bool)
        if self.tree is not None:
            dists, idx = self.tree.query(points)
            near_occupied = dists <= params.assoc_radius
            labels[near_occupied] = self.occupied_labels[idx[near_occupied]]
        grid = self.semmap.grid
        rest = np.flatnonzero(~near_occupied)
        for i in rest:
            result = _cell_state(grid, points[i])
            if result == FREE:
                labels[i] = int(ClassLabel.PERSON)
        return labels


def _cell_state(grid, p):
    ix, iy = grid.world_to_cell(p)
    if not grid.in_bounds(ix, iy):
        return None
    return int(grid.cells[iy, ix])


def label_point(semmap: SemanticGridMap, p, params: LabelTransferParams,
                index: LabelQueryIndex | None = None) -> ClassLabel:
    """Label a single world point.

    Nearest occupied cell within ``assoc_radius`` wins; otherwise a Free cell
    means Person (the only moving class) and anything else means Other.
    """
    if index is None:
        index = LabelQueryIndex(semmap)
    return ClassLabel(index.label_points(np.asarray([p], dtype=float), params)[0])


@dataclass
class AutoLabelConfig:
    spec: SensorSpec = field(default_factory=SensorSpec)
    line_params: LineExtractParams = field(default_factory=LineExtractParams)
    icp_params: IcpParams = field(default_factory=IcpParams)
    transfer_params: LabelTransferParams | None = None
    use_icp: bool = True
    # a labeling run flags scans whose alignment quality is doubtful
    rms_flag_factor: float = 2.0


def auto_label_scan(scan: LidarScan, init: Pose2D, semmap: SemanticGridMap,
                    config: AutoLabelConfig | None = None,
                    index: LabelQueryIndex | None = None) -> LabeledScan:
    """Label every beam of one scan against the annotated map.

    Pipeline: extract line features, refine the pose by ICP on the line
    inlier points, transform all finite beams by the refined pose, and
    transfer a label per beam.  No-return beams are labeled Other.  Scans
    with poor alignment (rms above ``rms_flag_factor`` map resolutions, ICP
    not converged, or no usable line points) are still labeled but flagged.
    """
    config = config or AutoLabelConfig()
    index = index or LabelQueryIndex(semmap)
    transfer = config.transfer_params or LabelTransferParams.for_map(semmap)
    spec = config.spec

    pose = init
    rms = float("inf")
    flagged = True
    if config.use_icp:
        try:
            segments = extract_lines(scan, spec, config.line_params)
            source = line_inlier_points(scan, spec, segments)
            if len(source) >= 2:
                result = icp_refine(source, init, index.map_index(),
                                    config.icp_params)
                pose, rms = result.pose, result.rms
                flagged = (not result.converged) or \
                    rms > config.rms_flag_factor * semmap.grid.resolution
        except ValueError:
            pose, rms, flagged = init, float("inf"), True
    else:
        flagged = False

    points, beam_idx = polar_to_cartesian(scan, spec)
    labels = np.full(scan.n_beams, int(ClassLabel.OTHER), dtype=np.uint8)
    if len(points):
        world = transform_points(points, pose)
        labels[beam_idx] = index.label_points(world, transfer)
    return LabeledScan(scan=scan, labels=labels, pose_refined=pose,
                       alignment_rms=rms, flagged=flagged)


@dataclass
class LabelRunReport:
    class_counts: np.ndarray
    flagged_scans: int
    mean_rms: float
    n_scans: int

    def class_percentages(self) -> np.ndarray:
        total = self.class_counts.sum()
        if total == 0:
            return np.zeros_like(self.class_counts, dtype=float)
        return 100.0 * self.class_counts / total


def worker_count() -> int:
    """Worker cap from the SEMLABEL_THREADS environment variable (0 = auto)."""
    raw = os.environ.get("SEMLABEL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def label_sequence(items, semmap: SemanticGridMap,
                   config: AutoLabelConfig | None = None):
    """Label a stream of (scan, init_pose) pairs, preserving order.

    Returns (labeled scans, run report).  Scans may be processed by several
    workers (SEMLABEL_THREADS) but the output order always matches the input.
    Errors abort with the index of the failing item.
    """
    config = config or AutoLabelConfig()
    index = LabelQueryIndex(semmap)
    items = list(items)

    def run(i):
        scan, init = items[i]
        try:
            return auto_label_scan(scan, init, semmap, config, index)
        except Exception as exc:
            raise RuntimeError(f"labeling failed at record {i}: {exc}") from exc

    workers = worker_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            labeled = list(pool.map(run, range(len(items))))
    else:
        labeled = [run(i) for i in range(len(items))]

    from .scan_model import NUM_CLASSES
    counts = np.zeros(NUM_CLASSES, dtype=np.int64)
    rms_values = []
    flagged = 0
    for ls in labeled:
        counts += np.bincount(ls.labels, minlength=NUM_CLASSES)
        flagged += int(ls.flagged)
        if np.isfinite(ls.alignment_rms):
            rms_values.append(ls.alignment_rms)
    report = LabelRunReport(
        class_counts=counts, flagged_scans=flagged,
        mean_rms=float(np.mean(rms_values)) if rms_values else float("nan"),
        n_scans=len(labeled))
    return labeled, report
