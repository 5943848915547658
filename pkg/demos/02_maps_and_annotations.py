"""Occupancy maps and polygon annotations: one labeled map per scene.

Builds a small PGM map in memory, annotates it with polygons the way a
human would in an image tool, rasterizes the labels, and queries points.

Run: python demos/02_maps_and_annotations.py
"""

import numpy as np

from semlabel.map_label import (CELL_STATE_NAMES, OUT_OF_BOUNDS,
                                load_labelme_polygons, load_occupancy_map,
                                query_label, rasterize_labels)
from semlabel.scan_model import CLASS_NAMES

# a 30x20 map image: free interior, occupied one-pixel border
pixels = np.full((20, 30), 254, dtype=np.uint8)
pixels[0, :] = pixels[-1, :] = pixels[:, 0] = pixels[:, -1] = 0
pgm = b"P5\n30 20\n255\n" + pixels.tobytes()
metadata = {"resolution": 0.1, "origin": [0.0, 0.0, 0.0], "negate": 0,
            "occupied_thresh": 0.65, "free_thresh": 0.196}
grid = load_occupancy_map(pgm, metadata)
print(f"loaded {grid.width}x{grid.height} map at {grid.resolution} m/cell; "
      f"{np.sum(grid.cells == 1)} occupied cells")

# annotations in image-pixel coordinates (y measured from the image top):
# the whole border is Wall, one stretch of the bottom edge is a Door
annotations = {"shapes": [
    {"label": "wall", "points": [[0, 0], [30, 0], [30, 20], [0, 20]]},
    {"label": "door", "points": [[10, 19], [16, 19], [16, 21], [10, 21]]},
]}
polygons = load_labelme_polygons(annotations, grid)
print(f"imported {len(polygons)} polygons "
      f"({', '.join(CLASS_NAMES[int(p.label)] for p in polygons)})")

semmap = rasterize_labels(polygons, grid)
counts = np.bincount(semmap.labels.ravel(), minlength=10)
for cid in np.flatnonzero(counts):
    print(f"  {CLASS_NAMES[cid]:<8} {counts[cid]:>4} cells")

# the door strip wins over the wall polygon because it is smaller
for p in [(1.25, 0.05), (0.05, 1.0), (1.5, 1.0), (99.0, 0.0)]:
    result = query_label(semmap, p)
    if result is OUT_OF_BOUNDS:
        print(f"point {p}: out of bounds")
    else:
        state, label = result
        print(f"point {p}: {CELL_STATE_NAMES[state]}, {CLASS_NAMES[int(label)]}")
