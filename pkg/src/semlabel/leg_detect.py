"""Geometry-only person detection from leg patterns.

A person standing in a planar scan shows up as one or two narrow arcs.  The
detector clusters the scan at range jumps and marks clusters that look like
legs: a leg-width cluster with a second one nearby (legs apart), or a single
cluster about two legs wide (legs together).  Purely geometric, so intensity
values never influence the mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .line_extract import LineExtractParams, segment_scan
from .scan_model import LidarScan, SensorSpec, polar_to_cartesian


@dataclass(frozen=True)
class LegDetectParams:
    # anthropometric widths at scan height
    leg_width_min: float = 0.05
    leg_width_max: float = 0.25
    pair_distance: float = 0.5
    merged_width_max: float = 0.45
    min_points: int = 3
    jump_abs: float = 0.1
    jump_rel: float = 0.05


@dataclass
class ScanCluster:
    beams: np.ndarray      # contiguous beam indices
    width: float           # Euclidean distance between first and last point
    centroid: np.ndarray


def cluster_scan(scan: LidarScan, spec: SensorSpec,
                 params: LegDetectParams | None = None) -> list[ScanCluster]:
    """Cluster the scan with relaxed minimum size and measure each cluster."""
    params = params or LegDetectParams()
    seg_params = LineExtractParams(jump_abs=params.jump_abs,
                                   jump_rel=params.jump_rel,
                                   min_points=params.min_points)
    points, beam_idx = polar_to_cartesian(scan, spec)
    pos_of_beam = {b: i for i, b in enumerate(beam_idx)}
    clusters = []
    for beams in segment_scan(scan, spec, seg_params):
        pts = points[[pos_of_beam[b] for b in beams]]
        width = float(np.linalg.norm(pts[-1] - pts[0]))
        clusters.append(ScanCluster(beams=beams, width=width,
                                    centroid=pts.mean(axis=0)))
    return clusters


def detect_person_points(scan: LidarScan, spec: SensorSpec,
                         params: LegDetectParams | None = None) -> np.ndarray:
    """Boolean mask over beams belonging to leg-like clusters.

    Rule (a): cluster width in [leg_width_min, leg_width_max] with another
    such cluster centroid within ``pair_distance`` (legs apart).
    Rule (b): single cluster width in (leg_width_max, merged_width_max]
    (legs together).
    """
    params = params or LegDetectParams()
    clusters = cluster_scan(scan, spec, params)
    mask = np.zeros(spec.n_beams, dtype=bool)

    leg_like = [c for c in clusters
                if params.leg_width_min <= c.width <= params.leg_width_max]
    for c in clusters:
        if params.leg_width_min <= c.width <= params.leg_width_max:
            for other in leg_like:
                if other is c:
                    continue
                if np.linalg.norm(other.centroid - c.centroid) <= params.pair_distance:
                    mask[c.beams] = True
                    break
        elif params.leg_width_max < c.width <= params.merged_width_max:
            mask[c.beams] = True
    return mask
