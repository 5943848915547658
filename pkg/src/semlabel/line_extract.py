"""Line feature extraction from a single scan.

Walls, doors, and elevator fronts are the stable structure a scan shares with
the environment map, so their beams are what alignment should use.  The
pipeline is classic split-and-merge: cluster the scan at range
discontinuities, recursively split each cluster at the point farthest from
the chord, refit every leaf with a range-weighted total-least-squares line,
then merge adjacent collinear leaves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scan_model import LidarScan, SensorSpec, polar_to_cartesian


class DegenerateFitError(ValueError):
    """All points coincident: no line is defined."""


@dataclass(frozen=True)
class LineExtractParams:
    jump_abs: float = 0.1          # m, absolute range-jump break threshold
    jump_rel: float = 0.05         # relative jump threshold (fraction of range)
    split_threshold: float = 0.05  # m, max point-to-line distance inside a segment
    min_points: int = 8
    min_length: float = 0.3        # m
    noise_floor: float = 0.01      # m, sigma_0 of the range noise model
    noise_slope: float = 0.001     # sigma(r) = noise_floor + noise_slope * r

    def __post_init__(self):
        for name in ("jump_abs", "jump_rel", "split_threshold",
                     "min_length", "noise_floor", "noise_slope"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.min_points <= 0:
            raise ValueError("min_points must be positive")


@dataclass
class LineSegment:
    """A fitted line n . p = d with its supporting beams.

    ``normal`` is unit length, ``offset`` >= 0 by convention, and every inlier
    point lies within the extraction split threshold of the line.
    """

    normal: np.ndarray
    offset: float
    endpoints: np.ndarray      # (2, 2): projections of the extreme inliers
    inlier_beams: np.ndarray   # sorted beam indices
    rms_residual: float

    def length(self) -> float:
        return float(np.linalg.norm(self.endpoints[1] - self.endpoints[0]))

    def residuals(self, points: np.ndarray) -> np.ndarray:
        return points @ self.normal - self.offset


def segment_scan(scan: LidarScan, spec: SensorSpec,
                 params: LineExtractParams) -> list[np.ndarray]:
    """Split the scan into contiguous beam clusters at range discontinuities.

    A break is inserted between consecutive finite beams whenever
    |r_i - r_{i-1}| > max(jump_abs, jump_rel * min(r_i, r_{i-1})); no-return
    beams always break.  Clusters with fewer than ``min_points`` beams are
    discarded.
    """
    scan.validate_against(spec)
    finite = scan.finite_mask(spec)
    r = scan.ranges
    clusters = []
    start = None
    for i in range(spec.n_beams):
        if not finite[i]:
            if start is not None:
                clusters.append(np.arange(start, i))
                start = None
            continue
        if start is None:
            start = i
            continue
        jump = abs(r[i] - r[i - 1])
        if jump > max(params.jump_abs, params.jump_rel * min(r[i], r[i - 1])):
            clusters.append(np.arange(start, i))
            start = i
    if start is not None:
        clusters.append(np.arange(start, spec.n_beams))
    return [c for c in clusters if len(c) >= params.min_points]


def weighted_line_fit(points: np.ndarray, weights: np.ndarray):
    """Weighted total-least-squares line fit.

    Minimizes sum w_i (n . p_i - d)^2 over unit normals n: n is the
    eigenvector of the smallest eigenvalue of the weighted scatter matrix and
    d = n . weighted_centroid, flipped so d >= 0.  Returns
    (normal, offset, weighted rms residual).
    """
    pts = np.asarray(points, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least two 2-D points")
    if len(w) != len(pts) or np.any(w <= 0):
        raise ValueError("weights must be positive and match the point count")

    wsum = w.sum()
    centroid = (w[:, None] * pts).sum(axis=0) / wsum
    centered = pts - centroid
    if np.max(np.abs(centered)) < 1e-12:
        raise DegenerateFitError("all points coincident")
    scatter = (w[:, None] * centered).T @ centered
    eigvals, eigvecs = np.linalg.eigh(scatter)
    normal = eigvecs[:, 0]
    d = float(normal @ centroid)
    if d < 0:
        normal, d = -normal, -d
    residuals = pts @ normal - d
    rms = float(np.sqrt((w * residuals ** 2).sum() / wsum))
    return normal, d, rms


def _chord_distances(points: np.ndarray) -> np.ndarray:
    """Distance of each point from the chord through the first and last point."""
    a, b = points[0], points[-1]
    chord = b - a
    norm = np.linalg.norm(chord)
    if norm < 1e-12:
        return np.linalg.norm(points - a, axis=1)
    rel = points - a
    cross = chord[0] * rel[:, 1] - chord[1] * rel[:, 0]
    return np.abs(cross) / norm


def _split_on_chord(idx: np.ndarray, points: np.ndarray,
                    threshold: float) -> list[np.ndarray]:
    """Recursive iterative-end-point split; returns leaf index arrays."""
    if len(idx) <= 2:
        return [idx]
    dists = _chord_distances(points[idx])
    k = int(np.argmax(dists))
    if dists[k] <= threshold or k == 0 or k == len(idx) - 1:
        return [idx]
    return (_split_on_chord(idx[:k + 1], points, threshold)
            + _split_on_chord(idx[k + 1:], points, threshold))


def _fit_leaf(idx, points, weights):
    if len(idx) < 2:
        return None
    try:
        normal, d, rms = weighted_line_fit(points[idx], weights[idx])
    except DegenerateFitError:
        return None
    return normal, d, rms


def _split_on_residuals(idx, points, weights, threshold):
    """Ensure every leaf's refit keeps all residuals within the threshold."""
    fit = _fit_leaf(idx, points, weights)
    if fit is None:
        return []
    normal, d, rms = fit
    residuals = np.abs(points[idx] @ normal - d)
    k = int(np.argmax(residuals))
    if residuals[k] <= threshold or len(idx) <= 2 or k in (0, len(idx) - 1):
        return [(idx, fit)]
    return (_split_on_residuals(idx[:k + 1], points, weights, threshold)
            + _split_on_residuals(idx[k + 1:], points, weights, threshold))


def _make_segment(idx, fit, points, beam_indices) -> LineSegment:
    normal, d, rms = fit
    pts = points[idx]
    direction = np.array([-normal[1], normal[0]])
    t = pts @ direction
    foot = d * normal
    endpoints = np.vstack((foot + t.min() * direction, foot + t.max() * direction))
    return LineSegment(normal=normal, offset=d, endpoints=endpoints,
                       inlier_beams=beam_indices[idx], rms_residual=rms)


def extract_lines(scan: LidarScan, spec: SensorSpec,
                  params: LineExtractParams) -> list[LineSegment]:
    """Extract line segments from a scan via split-and-merge.

    Leaves are refit with weights w_i = 1 / (noise_floor + noise_slope*r_i)^2,
    adjacent collinear leaves are merged while the merged fit stays within the
    split threshold, and segments shorter than ``min_length`` or supported by
    fewer than ``min_points`` beams are dropped.  Inlier sets are disjoint.
    """
    points, beam_idx = polar_to_cartesian(scan, spec)
    if len(points) == 0:
        return []
    ranges = scan.ranges[beam_idx]
    weights = 1.0 / (params.noise_floor + params.noise_slope * ranges) ** 2
    # map beam index -> position in the flattened finite-point arrays
    pos_of_beam = {b: i for i, b in enumerate(beam_idx)}

    segments: list[LineSegment] = []
    for cluster in segment_scan(scan, spec, params):
        local = np.array([pos_of_beam[b] for b in cluster])
        leaves: list[tuple[np.ndarray, tuple]] = []
        for leaf_idx in _split_on_chord(local, points, params.split_threshold):
            leaves.extend(_split_on_residuals(leaf_idx, points, weights,
                                              params.split_threshold))

        # merge adjacent collinear leaves while the joint fit stays tight
        merged: list[tuple[np.ndarray, tuple]] = []
        for idx, fit in leaves:
            if merged:
                prev_idx, _ = merged[-1]
                union = np.concatenate((prev_idx, idx))
                union_fit = _fit_leaf(union, points, weights)
                if union_fit is not None:
                    normal, d, rms = union_fit
                    max_resid = float(np.max(np.abs(points[union] @ normal - d)))
                    if rms < params.split_threshold and \
                            max_resid <= params.split_threshold:
                        merged[-1] = (union, union_fit)
                        continue
            merged.append((idx, fit))

        for idx, fit in merged:
            if fit is None or len(idx) < params.min_points:
                continue
            seg = _make_segment(idx, fit, points, beam_idx)
            if seg.length() >= params.min_length:
                segments.append(seg)
    return segments


def line_inlier_points(scan: LidarScan, spec: SensorSpec,
                       segments: list[LineSegment]) -> np.ndarray:
    """Sensor-frame points of all beams belonging to extracted segments."""
    if not segments:
        return np.zeros((0, 2))
    beams = np.concatenate([seg.inlier_beams for seg in segments])
    points, beam_idx = polar_to_cartesian(scan, spec)
    mask = np.isin(beam_idx, beams)
    return points[mask]
