"""Trimmed point-to-point ICP of a scan against the occupancy map.

The localization estimate that tags each scan is close but not close enough
for per-beam label transfer, so the pose is refined by registering the scan's
stable line points against the centers of occupied map cells.  Trimming makes
the match robust to clutter that survived the line filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .map_label import OCCUPIED, OccupancyGridMap
from .scan_model import Pose2D, transform_points


@dataclass(frozen=True)
class IcpParams:
    max_correspondence_dist: float = 0.5
    trim_fraction: float = 0.1
    max_iterations: int = 50
    translation_tol: float = 1e-4
    rotation_tol: float = 1e-4

    def __post_init__(self):
        if self.max_correspondence_dist <= 0:
            raise ValueError("max_correspondence_dist must be positive")
        if not 0 <= self.trim_fraction < 1:
            raise ValueError("trim_fraction must lie in [0, 1)")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.translation_tol <= 0 or self.rotation_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class IcpResult:
    pose: Pose2D
    rms: float
    iterations: int
    converged: bool
    n_correspondences: int


class MapPointIndex:
    """Occupied-cell centers with a nearest-neighbor index."""

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=np.float64)
        if len(points) == 0:
            raise ValueError("alignment impossible: map has no occupied cells")
        self.points = points
        self.tree = cKDTree(points)

    def nearest(self, queries: np.ndarray):
        """(distances, target points) of the nearest occupied center per query."""
        dists, idx = self.tree.query(queries)
        return dists, self.points[idx]


def map_to_points(grid: OccupancyGridMap) -> MapPointIndex:
    """Index the centers of all occupied cells; errors if there are none."""
    iy, ix = np.nonzero(grid.cells == OCCUPIED)
    if len(ix) == 0:
        raise ValueError("alignment impossible: map has no occupied cells")
    return MapPointIndex(grid.cell_center(ix, iy))


def best_rigid_transform(source: np.ndarray, target: np.ndarray) -> Pose2D:
    """Closed-form least-squares rigid transform mapping source onto target.

    theta = atan2(sum(s' x t'), sum(s' . t')) over centered pairs; the
    translation follows from the centroids.  Minimizes sum ||R s + t - t_i||^2.
    """
    s = np.asarray(source, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if s.shape != t.shape or s.ndim != 2 or s.shape[1] != 2:
        raise ValueError("source and target must be matching (N, 2) arrays")
    if len(s) < 2:
        raise ValueError("need at least two correspondence pairs")
    s_mean, t_mean = s.mean(axis=0), t.mean(axis=0)
    sc, tc = s - s_mean, t - t_mean
    if np.max(np.abs(sc)) < 1e-12:
        raise ValueError("degenerate transform: all source points coincident")
    cross = float(np.sum(sc[:, 0] * tc[:, 1] - sc[:, 1] * tc[:, 0]))
    dot = float(np.sum(sc[:, 0] * tc[:, 0] + sc[:, 1] * tc[:, 1]))
    theta = math.atan2(cross, dot)
    c, v = math.cos(theta), math.sin(theta)
    tx = t_mean[0] - (c * s_mean[0] - v * s_mean[1])
    ty = t_mean[1] - (v * s_mean[0] + c * s_mean[1])
    return Pose2D(tx, ty, theta)


def icp_refine(source: np.ndarray, init: Pose2D, index: MapPointIndex,
               params: IcpParams) -> IcpResult:
    """Refine ``init`` so that ``source`` (sensor frame) aligns with the map.

    Each iteration transforms the source by the current pose, matches every
    point to its nearest map point, drops matches beyond the correspondence
    distance plus the worst ``trim_fraction`` by distance, solves the
    closed-form rigid update, and composes it onto the pose.  Stops when the
    update falls below both tolerances (converged) or at ``max_iterations``.

    Running out of correspondences is not a hard failure: the result carries
    the initial pose with ``converged=False``.
    """
    source = np.asarray(source, dtype=np.float64)
    if len(source) == 0:
        raise ValueError("source point set is empty")

    pose = init
    rms = float("inf")
    n_kept = 0
    converged = False
    iterations = 0

    def match(current: Pose2D):
        world = transform_points(source, current)
        dists, targets = index.nearest(world)
        keep = dists <= params.max_correspondence_dist
        if not np.any(keep):
            return None
        kept_dists = dists[keep]
        kept_src = source[keep]
        kept_tgt = targets[keep]
        n_drop = int(math.floor(params.trim_fraction * len(kept_dists)))
        if n_drop > 0:
            order = np.argsort(kept_dists, kind="stable")[:len(kept_dists) - n_drop]
            kept_src, kept_tgt = kept_src[order], kept_tgt[order]
            kept_dists = kept_dists[order]
        return kept_src, kept_tgt, kept_dists

    if params.max_iterations == 0:
        m = match(pose)
        if m is not None:
            rms = float(np.sqrt(np.mean(m[2] ** 2)))
            n_kept = len(m[2])
        return IcpResult(pose=pose, rms=rms if n_kept else float("inf"),
                         iterations=0, converged=False, n_correspondences=n_kept)

    for iterations in range(1, params.max_iterations + 1):
        m = match(pose)
        if m is None:
            return IcpResult(pose=init, rms=float("inf"), iterations=iterations,
                             converged=False, n_correspondences=0)
        kept_src, kept_tgt, _ = m
        if len(kept_src) < 2:
            return IcpResult(pose=init, rms=float("inf"), iterations=iterations,
                             converged=False, n_correspondences=len(kept_src))
        world_src = transform_points(kept_src, pose)
        try:
            delta = best_rigid_transform(world_src, kept_tgt)
        except ValueError:
            return IcpResult(pose=init, rms=float("inf"), iterations=iterations,
                             converged=False, n_correspondences=len(kept_src))
        pose = delta.compose(pose)
        n_kept = len(kept_src)
        residuals = transform_points(kept_src, pose) - kept_tgt
        rms = float(np.sqrt(np.mean(np.sum(residuals ** 2, axis=1))))
        step_t = math.hypot(delta.x, delta.y)
        if step_t < params.translation_tol and abs(delta.theta) < params.rotation_tol:
            converged = True
            break

    return IcpResult(pose=pose, rms=rms, iterations=iterations,
                     converged=converged, n_correspondences=n_kept)
