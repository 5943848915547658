"""Occupancy grid maps with per-cell semantic labels.

Maps arrive as binary PGM rasters plus YAML metadata (the usual mapping-stack
convention): pixel occupancy ``occ = (255 - pixel) / 255`` (or ``pixel / 255``
when ``negate`` is set), thresholded into Occupied / Free / Unknown, with image
row 0 at the *top* of the map so rows are flipped into the world frame.

Human annotations are polygons drawn on the map image; rasterizing them gives
one class label per cell.  Overlaps resolve to the smallest-area polygon
(doors and elevators are drawn on top of wall runs, so the more specific
region must win), ties to the smallest class id.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
import yaml

from .scan_model import ClassLabel, Pose2D, class_from_name

FREE = 0
OCCUPIED = 1
UNKNOWN = 2

CELL_STATE_NAMES = {FREE: "Free", OCCUPIED: "Occupied", UNKNOWN: "Unknown"}


class OutOfBounds:
    """Singleton marker returned by point queries that miss the grid."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OutOfBounds"


OUT_OF_BOUNDS = OutOfBounds()


class MapParseError(ValueError):
    """Malformed PGM or metadata; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(ValueError):
    pass


@dataclass
class OccupancyGridMap:
    """Trinary occupancy raster in the world frame.

    ``cells`` is (height, width) with row 0 at the world-frame *bottom*
    (already flipped from image order).  ``origin`` is the world pose of the
    corner of cell (0, 0).  ``pixels`` keeps the source raster in image order
    so that saving reproduces the PGM payload bit-exactly.
    """

    width: int
    height: int
    resolution: float
    origin: Pose2D
    cells: np.ndarray
    pixels: np.ndarray | None = None

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells shape must be (height, width)")

    def world_to_cell(self, p) -> tuple[int, int]:
        """Floor-convention cell indices (ix, iy) for a world point."""
        local = self.origin.inverse().rotation() @ (np.asarray(p, dtype=float)
                                                    - self.origin.translation())
        return int(math.floor(local[0] / self.resolution)), \
            int(math.floor(local[1] / self.resolution))

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def cell_center(self, ix, iy) -> np.ndarray:
        """World coordinates of cell centers; accepts scalars or arrays."""
        lx = (np.asarray(ix, dtype=float) + 0.5) * self.resolution
        ly = (np.asarray(iy, dtype=float) + 0.5) * self.resolution
        local = np.stack(np.broadcast_arrays(lx, ly), axis=-1)
        return local @ self.origin.rotation().T + self.origin.translation()

    def cell_centers(self) -> np.ndarray:
        """(height, width, 2) world coordinates of every cell center."""
        iy, ix = np.mgrid[0:self.height, 0:self.width]
        return self.cell_center(ix, iy)


@dataclass
class SemanticGridMap:
    """Occupancy grid fused with a class label per cell.

    Person is a dynamic class and never appears as a map label.
    """

    grid: OccupancyGridMap
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.labels.shape != self.grid.cells.shape:
            raise ValueError("labels must have the same shape as the grid cells")
        if np.any(self.labels == ClassLabel.PERSON):
            raise ValueError("Person is not a valid map label")


@dataclass
class AnnotationPolygon:
    """A labeled polygon in the world frame (>= 3 vertices, positive area)."""

    label: ClassLabel
    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2 \
                or self.vertices.shape[0] < 3:
            raise ValueError("polygon needs at least 3 (x, y) vertices")
        if self.label == ClassLabel.PERSON:
            raise ValueError("Person polygons are rejected: people are never map content")
        if self.area() <= 0:
            raise ValueError("degenerate polygon (zero area)")

    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


# ---------------------------------------------------------------------------
# PGM / YAML parsing


def _read_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-separated token, skipping '#' comments; returns (token, new_pos)."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise MapParseError("unexpected end of PGM header", pos)
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode a binary (P5) 8-bit PGM into a (rows, cols) uint8 array."""
    if data[:2] != b"P5":
        raise MapParseError("not a binary PGM (missing P5 magic)", 0)
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _read_pgm_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise MapParseError(f"bad PGM header token {token!r}", pos - len(token))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise MapParseError("non-positive PGM dimensions", 2)
    if maxval != 255:
        raise UnsupportedFormatError(
            f"only 8-bit PGM is supported (maxval 255, got {maxval})")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise MapParseError("missing whitespace before PGM raster", pos)
    pos += 1
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise MapParseError(
            f"PGM raster truncated: expected {width * height} bytes, "
            f"got {len(raster)}", pos)
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def load_occupancy_map(pgm_bytes: bytes, metadata) -> OccupancyGridMap:
    """Build an occupancy grid from PGM bytes plus map metadata.

    ``metadata`` is a dict (or YAML text) with resolution, origin [x, y, theta],
    negate, occupied_thresh, and free_thresh.
    """
    if isinstance(metadata, (str, bytes)):
        try:
            metadata = yaml.safe_load(metadata)
        except yaml.YAMLError as exc:
            raise MapParseError(f"bad map YAML: {exc}") from exc
    try:
        resolution = float(metadata["resolution"])
        origin_raw = metadata["origin"]
        negate = int(metadata.get("negate", 0))
        occupied_thresh = float(metadata["occupied_thresh"])
        free_thresh = float(metadata["free_thresh"])
    except (KeyError, TypeError) as exc:
        raise MapParseError(f"map metadata missing field: {exc}") from exc
    origin = Pose2D(float(origin_raw[0]), float(origin_raw[1]),
                    float(origin_raw[2]) if len(origin_raw) > 2 else 0.0)

    pixels = parse_pgm(pgm_bytes)
    occ = pixels.astype(np.float64) / 255.0 if negate else (255.0 - pixels) / 255.0
    cells = np.full(pixels.shape, UNKNOWN, dtype=np.uint8)
    cells[occ > occupied_thresh] = OCCUPIED
    cells[occ < free_thresh] = FREE
    # image row 0 is the top of the map; world row 0 is the bottom
    cells = cells[::-1].copy()
    height, width = pixels.shape
    return OccupancyGridMap(width=width, height=height, resolution=resolution,
                            origin=origin, cells=cells, pixels=pixels.copy())


def save_occupancy_map(grid: OccupancyGridMap) -> bytes:
    """Serialize back to binary PGM; the payload round-trips bit-exactly."""
    if grid.pixels is not None:
        pixels = np.asarray(grid.pixels, dtype=np.uint8)
    else:
        # synthesize a raster from the trinary states
        values = np.full(grid.cells.shape, 205, dtype=np.uint8)
        values[grid.cells == OCCUPIED] = 0
        values[grid.cells == FREE] = 254
        pixels = values[::-1]
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def load_map_files(yaml_path) -> OccupancyGridMap:
    """Convenience loader: read map YAML, resolve the image path, parse both."""
    from pathlib import Path
    yaml_path = Path(yaml_path)
    metadata = yaml.safe_load(yaml_path.read_text())
    image = Path(metadata["image"])
    if not image.is_absolute():
        image = yaml_path.parent / image
    return load_occupancy_map(image.read_bytes(), metadata)


# ---------------------------------------------------------------------------
# Annotation rasterization


def _points_in_polygon(points: np.ndarray, vertices: np.ndarray,
                       boundary_eps: float = 1e-12) -> np.ndarray:
    """Even-odd containment for many points; boundary counts as inside."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    on_boundary = np.zeros(len(points), dtype=bool)
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        # even-odd crossing test against the upward/downward half-open edge
        crosses = ((y1 > y) != (y2 > y))
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, x_at, np.inf))
        # distance from point to the closed segment
        dx, dy = x2 - x1, y2 - y1
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0:
            dist2 = (x - x1) ** 2 + (y - y1) ** 2
        else:
            t = np.clip(((x - x1) * dx + (y - y1) * dy) / seg_len2, 0.0, 1.0)
            dist2 = (x - (x1 + t * dx)) ** 2 + (y - (y1 + t * dy)) ** 2
        on_boundary |= dist2 <= boundary_eps ** 2
    return inside | on_boundary


def rasterize_labels(polygons, grid: OccupancyGridMap) -> SemanticGridMap:
    """Assign each cell the class of the smallest-area polygon containing its center.

    Cells covered by no polygon get Other.  Equal-area overlaps break to the
    smallest class id, which also makes the result independent of input order.
    """
    labels = np.full(grid.cells.shape, ClassLabel.OTHER, dtype=np.uint8)
    centers = grid.cell_centers().reshape(-1, 2)
    # paint largest first so the smallest polygon ends up on top
    order = sorted(polygons, key=lambda p: (p.area(), int(p.label)), reverse=True)
    flat = labels.reshape(-1)
    for poly in order:
        mask = _points_in_polygon(centers, poly.vertices)
        flat[mask] = int(poly.label)
    return SemanticGridMap(grid=grid, labels=labels)


def query_label(semmap: SemanticGridMap, p):
    """Look up (cell state, label) at a world point; OUT_OF_BOUNDS if it misses."""
    ix, iy = semmap.grid.world_to_cell(p)
    if not semmap.grid.in_bounds(ix, iy):
        return OUT_OF_BOUNDS
    return int(semmap.grid.cells[iy, ix]), ClassLabel(semmap.labels[iy, ix])


# ---------------------------------------------------------------------------
# LabelMe import


def load_labelme_polygons(doc, grid: OccupancyGridMap) -> list[AnnotationPolygon]:
    """Convert LabelMe-style JSON annotations to world-frame polygons.

    Accepts the annotation document as JSON text or a parsed dict with a
    "shapes" list of {"label": str, "points": [[px, py], ...]}.  Pixel
    coordinates are measured from the top-left of the map image and are
    converted through the grid origin/resolution (pixel y points down, world
    y points up).  Unknown label strings raise with the offending label named.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    shapes = doc["shapes"] if "shapes" in doc else doc
    polygons = []
    for shape in shapes:
        label = class_from_name(shape["label"])
        pts = np.asarray(shape["points"], dtype=np.float64)
        local = np.column_stack((pts[:, 0] * grid.resolution,
                                 (grid.height - pts[:, 1]) * grid.resolution))
        world = local @ grid.origin.rotation().T + grid.origin.translation()
        polygons.append(AnnotationPolygon(label=label, vertices=world))
    return polygons


# ---------------------------------------------------------------------------
# Binary semantic-map container (see docs/formats.md for the byte layout)

_SEMMAP_MAGIC = b"SEMMAP\x00\x01"


def save_semantic_map(semmap: SemanticGridMap) -> bytes:
    g = semmap.grid
    header = _SEMMAP_MAGIC + struct.pack(
        "<IIdddd", g.width, g.height, g.resolution,
        g.origin.x, g.origin.y, g.origin.theta)
    return header + g.cells.tobytes() + semmap.labels.tobytes()


def load_semantic_map(data: bytes) -> SemanticGridMap:
    if data[:8] != _SEMMAP_MAGIC:
        raise MapParseError("not a semantic map file (bad magic)", 0)
    width, height, resolution, ox, oy, otheta = struct.unpack_from("<IIdddd", data, 8)
    offset = 8 + struct.calcsize("<IIdddd")
    n = width * height
    if len(data) < offset + 2 * n:
        raise MapParseError("semantic map truncated", len(data))
    cells = np.frombuffer(data[offset:offset + n],
                          dtype=np.uint8).reshape(height, width).copy()
    labels = np.frombuffer(data[offset + n:offset + 2 * n],
                           dtype=np.uint8).reshape(height, width).copy()
    grid = OccupancyGridMap(width=width, height=height, resolution=resolution,
                            origin=Pose2D(ox, oy, otheta), cells=cells)
    return SemanticGridMap(grid=grid, labels=labels)
