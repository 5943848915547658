"""Ready-made synthetic scenes for pipeline checks and demos.

Raster maps carry an inherent half-cell offset between an object's surface
and the nearest occupied cell center.  To keep that offset small and
symmetric, these builders snap every straight surface onto the map's
cell-center lattice and give it a band thickness of half a cell, which puts
exactly one row of occupied cells under each surface.  Without this care,
alignment quality silently depends on where walls happen to fall relative to
the grid.
"""

from __future__ import annotations

import math

import numpy as np

from .scan_model import ClassLabel, Pose2D
from .sim import Material, Scene, SceneObject


def snap_to_lattice(value: float, origin: float, resolution: float) -> float:
    """Nearest cell-center coordinate of a 1-D grid starting at ``origin``."""
    k = round((value - (origin + resolution / 2.0)) / resolution)
    return origin + resolution / 2.0 + k * resolution


class SceneBuilder:
    """Accumulates lattice-snapped objects for a rectangular scene."""

    def __init__(self, bounds, resolution: float = 0.02, scene_id: str = "scene"):
        self.bounds = np.asarray(bounds, dtype=float)
        self.resolution = resolution
        self.scene_id = scene_id
        self.band = resolution / 2.0
        self.objects: list[SceneObject] = []

    def snap(self, x: float, y: float) -> tuple[float, float]:
        return (snap_to_lattice(x, self.bounds[0], self.resolution),
                snap_to_lattice(y, self.bounds[1], self.resolution))

    def wall(self, label: ClassLabel, p0, p1,
             material: Material | None = None) -> None:
        p0 = self.snap(*p0)
        p1 = self.snap(*p1)
        self.objects.append(SceneObject(
            shape="wall", label=label, material=material,
            p0=np.asarray(p0), p1=np.asarray(p1), thickness=self.band))

    def box(self, label: ClassLabel, minimum, maximum,
            material: Material | None = None) -> None:
        """Hollow axis-aligned box outline (how furniture appears in a map)."""
        x0, y0 = self.snap(*minimum)
        x1, y1 = self.snap(*maximum)
        for a, b in (((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)),
                     ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))):
            self.objects.append(SceneObject(
                shape="wall", label=label, material=material,
                p0=np.asarray(a), p1=np.asarray(b), thickness=self.band))

    def disc(self, label: ClassLabel, center, radius: float,
             material: Material | None = None, dynamic: bool = False,
             velocity=(0.0, 0.0)) -> None:
        self.objects.append(SceneObject(
            shape="disc", label=label, material=material,
            center=np.asarray(center, dtype=float), radius=radius,
            dynamic=dynamic, velocity=np.asarray(velocity, dtype=float)))

    def build(self) -> Scene:
        return Scene(objects=list(self.objects), bounds=self.bounds.copy(),
                     scene_id=self.scene_id, map_resolution=self.resolution)


def rectangular_room(width: float, height: float, resolution: float = 0.02,
                     scene_id: str = "room") -> SceneBuilder:
    """Walled rectangular room centered on the origin, margin included."""
    margin = 0.2
    bounds = [-width / 2 - margin, -height / 2 - margin,
              width / 2 + margin, height / 2 + margin]
    b = SceneBuilder(bounds, resolution, scene_id)
    x0, y0 = b.snap(-width / 2, -height / 2)
    x1, y1 = b.snap(width / 2, height / 2)
    for p0, p1 in (((x0, y0), (x1, y0)), ((x1, y0), (x1, y1)),
                   ((x1, y1), (x0, y1)), ((x0, y1), (x0, y0))):
        b.wall(ClassLabel.WALL, p0, p1)
    return b


def furnished_room(resolution: float = 0.02, scene_id: str = "furnished",
                   with_persons: bool = True) -> Scene:
    """A 9 x 9 m room with six static classes and two walking persons.

    The door and elevator panels sit one cell proud of the south/east walls
    so their surfaces are unambiguous in both raycasts and the raster map;
    their materials differ strongly from drywall, which is what makes them
    distinguishable for an intensity-aware segmenter.
    """
    b = rectangular_room(9.0, 9.0, resolution, scene_id)
    south = snap_to_lattice(-4.5, b.bounds[1], resolution)
    east = snap_to_lattice(4.5, b.bounds[0], resolution)
    b.wall(ClassLabel.DOOR, (-1.2, south + resolution), (-0.2, south + resolution))
    b.wall(ClassLabel.ELEVATOR, (east - resolution, -0.6), (east - resolution, 0.6))
    b.box(ClassLabel.TABLE, (2.2, 2.0), (3.4, 2.8))
    b.box(ClassLabel.SOFA, (-4.0, -2.0), (-3.3, -0.4))
    b.disc(ClassLabel.PILLAR, (-2.5, 2.0), 0.25)
    b.disc(ClassLabel.TRASH_BIN, (3.6, -3.4), 0.2)
    b.box(ClassLabel.CHAIR, (1.6, -3.2), (2.1, -2.7))
    if with_persons:
        b.disc(ClassLabel.PERSON, (1.5, 0.8), 0.15, dynamic=True,
               velocity=(-0.06, 0.02))
        b.disc(ClassLabel.PERSON, (-1.2, -1.6), 0.15, dynamic=True,
               velocity=(0.05, 0.05))
    return b.build()


def random_room(rng: np.random.Generator, resolution: float = 0.02,
                scene_id: str = "random") -> Scene:
    """Random rectangular room with a few hollow boxes, for alignment tests."""
    width = float(rng.uniform(6.0, 10.0))
    height = float(rng.uniform(6.0, 10.0))
    b = rectangular_room(width, height, resolution, scene_id)
    for _ in range(int(rng.integers(1, 4))):
        bx = float(rng.uniform(-width / 2 + 1.0, width / 2 - 2.5))
        by = float(rng.uniform(-height / 2 + 1.0, height / 2 - 2.5))
        bw = float(rng.uniform(0.5, 1.5))
        bh = float(rng.uniform(0.5, 1.5))
        b.box(ClassLabel.TABLE, (bx, by), (bx + bw, by + bh))
    return b.build()


def circular_trajectory(n_frames: int, radius: float = 0.8,
                        angular_step: float = 0.05) -> list[Pose2D]:
    """Slow loop around the room center with the heading sweeping all directions."""
    return [Pose2D(radius * math.cos(k * angular_step),
                   radius * math.sin(k * angular_step),
                   k * angular_step + math.pi / 2) for k in range(n_frames)]
