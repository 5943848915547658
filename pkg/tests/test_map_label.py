import json
import math

import numpy as np
import pytest

from semlabel.map_label import (FREE, OCCUPIED, OUT_OF_BOUNDS, UNKNOWN,
                                AnnotationPolygon, MapParseError,
                                OccupancyGridMap, SemanticGridMap,
                                UnsupportedFormatError, load_labelme_polygons,
                                load_occupancy_map, load_semantic_map,
                                parse_pgm, query_label, rasterize_labels,
                                save_occupancy_map, save_semantic_map)
from semlabel.scan_model import ClassLabel, Pose2D

META = {"resolution": 0.05, "origin": [0.0, 0.0, 0.0], "negate": 0,
        "occupied_thresh": 0.65, "free_thresh": 0.196}


def pgm_bytes(pixels):
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode() + pixels.tobytes()


def flat_grid(width=10, height=10, resolution=1.0, state=FREE):
    cells = np.full((height, width), state, dtype=np.uint8)
    return OccupancyGridMap(width=width, height=height, resolution=resolution,
                            origin=Pose2D(0, 0, 0), cells=cells)


def pnpoly(x, y, vertices):
    """Independent even-odd oracle (classic crossing-number loop)."""
    inside = False
    n = len(vertices)
    j = n - 1
    for i in range(n):
        xi, yi = vertices[i]
        xj, yj = vertices[j]
        if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return inside


class TestPgmParsing:
    def test_thresholds(self):
        # occ = (255 - pixel) / 255 against (0.65, 0.196)
        grid = load_occupancy_map(pgm_bytes([[0, 254, 205]]), META)
        assert grid.cells[0, 0] == OCCUPIED       # occ = 1.0
        assert grid.cells[0, 1] == FREE           # occ = 1/255 ~ 0.0039
        assert grid.cells[0, 2] == UNKNOWN        # occ ~ 0.196..0.65

    def test_negate_inverts(self):
        meta = dict(META, negate=1)
        grid = load_occupancy_map(pgm_bytes([[255, 0]]), meta)
        assert grid.cells[0, 0] == OCCUPIED
        assert grid.cells[0, 1] == FREE

    def test_image_row_zero_is_map_top(self):
        # occupied pixel in image row 0 must land at the highest world y
        pixels = np.full((3, 2), 254, dtype=np.uint8)
        pixels[0, 0] = 0
        grid = load_occupancy_map(pgm_bytes(pixels), META)
        assert grid.cells[2, 0] == OCCUPIED
        assert grid.cells[0, 0] == FREE

    def test_comments_allowed_in_header(self):
        data = b"P5\n# made by a mapper\n2 1\n255\n" + bytes([0, 254])
        pixels = parse_pgm(data)
        assert pixels.shape == (1, 2)

    def test_bad_magic_reports_offset(self):
        with pytest.raises(MapParseError) as err:
            parse_pgm(b"P2\n1 1\n255\n\x00")
        assert err.value.offset == 0

    def test_truncated_raster_reports_offset(self):
        with pytest.raises(MapParseError, match="truncated"):
            parse_pgm(b"P5\n4 4\n255\n\x00\x00")

    def test_sixteen_bit_unsupported(self):
        with pytest.raises(UnsupportedFormatError):
            parse_pgm(b"P5\n1 1\n65535\n\x00\x00")

    def test_missing_metadata_field(self):
        with pytest.raises(MapParseError):
            load_occupancy_map(pgm_bytes([[0]]), {"resolution": 0.05})

    def test_save_load_roundtrip_payload_bit_exact(self):
        rng = np.random.default_rng(0)
        pixels = rng.integers(0, 256, (17, 23), dtype=np.uint8)
        grid = load_occupancy_map(pgm_bytes(pixels), META)
        saved = save_occupancy_map(grid)
        grid2 = load_occupancy_map(saved, META)
        assert grid2.pixels.tobytes() == pixels.tobytes()
        assert save_occupancy_map(grid2) == saved


class TestRasterizeLabels:
    def test_no_polygons_all_other(self):
        sem = rasterize_labels([], flat_grid())
        assert np.all(sem.labels == int(ClassLabel.OTHER))

    def test_rectangle_matches_brute_force(self):
        grid = flat_grid(8, 8)
        # rectangle chosen to contain exactly the centers of cells 2..4 x 2..4
        poly = AnnotationPolygon(ClassLabel.WALL, [[2.1, 2.1], [4.9, 2.1],
                                                   [4.9, 4.9], [2.1, 4.9]])
        sem = rasterize_labels([poly], grid)
        for iy in range(8):
            for ix in range(8):
                expected = ClassLabel.WALL if pnpoly(ix + 0.5, iy + 0.5,
                                                     poly.vertices) \
                    else ClassLabel.OTHER
                assert sem.labels[iy, ix] == int(expected), (ix, iy)
        wall_cells = np.argwhere(sem.labels == int(ClassLabel.WALL))
        assert sorted(map(tuple, wall_cells)) == [
            (iy, ix) for iy in (2, 3, 4) for ix in (2, 3, 4)]

    def test_nested_smaller_polygon_wins(self):
        grid = flat_grid(10, 10)
        wall = AnnotationPolygon(ClassLabel.WALL, [[0.2, 0.2], [9.8, 0.2],
                                                   [9.8, 9.8], [0.2, 9.8]])
        door = AnnotationPolygon(ClassLabel.DOOR, [[3.2, 3.2], [6.8, 3.2],
                                                   [6.8, 6.8], [3.2, 6.8]])
        assert door.area() < wall.area()
        sem = rasterize_labels([wall, door], grid)
        assert sem.labels[5, 5] == int(ClassLabel.DOOR)
        assert sem.labels[1, 1] == int(ClassLabel.WALL)

    def test_order_independent(self):
        grid = flat_grid(12, 12)
        polys = [
            AnnotationPolygon(ClassLabel.WALL, [[0.5, 0.5], [11.5, 0.5],
                                                [11.5, 11.5], [0.5, 11.5]]),
            AnnotationPolygon(ClassLabel.DOOR, [[2.2, 2.2], [7.8, 2.2],
                                                [7.8, 7.8], [2.2, 7.8]]),
            AnnotationPolygon(ClassLabel.TABLE, [[4.1, 4.1], [6.9, 4.1],
                                                 [6.9, 6.9], [4.1, 6.9]]),
        ]
        a = rasterize_labels(polys, grid).labels
        b = rasterize_labels(polys[::-1], grid).labels
        c = rasterize_labels([polys[1], polys[2], polys[0]], grid).labels
        assert np.array_equal(a, b) and np.array_equal(a, c)

    def test_equal_area_tie_breaks_to_smaller_class_id(self):
        grid = flat_grid(4, 4)
        square = [[0.2, 0.2], [3.8, 0.2], [3.8, 3.8], [0.2, 3.8]]
        wall = AnnotationPolygon(ClassLabel.WALL, square)
        chair = AnnotationPolygon(ClassLabel.CHAIR, square)
        sem1 = rasterize_labels([wall, chair], grid)
        sem2 = rasterize_labels([chair, wall], grid)
        assert np.all(sem1.labels[1:3, 1:3] == int(ClassLabel.CHAIR))
        assert np.array_equal(sem1.labels, sem2.labels)

    def test_person_polygon_rejected(self):
        with pytest.raises(ValueError, match="[Pp]erson"):
            AnnotationPolygon(ClassLabel.PERSON, [[0, 0], [1, 0], [1, 1]])

    def test_degenerate_polygon_rejected(self):
        with pytest.raises(ValueError):
            AnnotationPolygon(ClassLabel.WALL, [[0, 0], [1, 1], [2, 2]])

    def test_random_polygons_match_pnpoly_oracle(self):
        rng = np.random.default_rng(11)
        grid = flat_grid(20, 20, resolution=0.5)
        polys = []
        for label in (ClassLabel.WALL, ClassLabel.SOFA, ClassLabel.DOOR):
            center = rng.uniform(2, 8, 2)
            angles = np.sort(rng.uniform(0, 2 * math.pi, 6))
            radii = rng.uniform(1.0, 4.0, 6)
            verts = center + np.column_stack((radii * np.cos(angles),
                                              radii * np.sin(angles)))
            polys.append(AnnotationPolygon(label, verts))
        sem = rasterize_labels(polys, grid)
        order = sorted(polys, key=lambda p: (p.area(), int(p.label)))
        for iy in range(20):
            for ix in range(20):
                x, y = (ix + 0.5) * 0.5, (iy + 0.5) * 0.5
                expected = ClassLabel.OTHER
                for poly in order:
                    if pnpoly(x, y, poly.vertices):
                        expected = poly.label
                        break
                assert sem.labels[iy, ix] == int(expected), (ix, iy)


class TestQueryLabel:
    def semmap(self):
        grid = flat_grid(5, 5)
        grid.cells[2, 3] = OCCUPIED
        labels = np.zeros((5, 5), dtype=np.uint8)
        labels[2, 3] = int(ClassLabel.WALL)
        return SemanticGridMap(grid=grid, labels=labels)

    def test_direct_lookup(self):
        assert query_label(self.semmap(), (3.5, 2.5)) == (OCCUPIED, ClassLabel.WALL)

    def test_out_of_bounds_marker(self):
        assert query_label(self.semmap(), (-0.5, 2.0)) is OUT_OF_BOUNDS
        assert query_label(self.semmap(), (5.5, 2.0)) is OUT_OF_BOUNDS

    def test_edge_point_floor_convention(self):
        # a point exactly on a shared cell edge belongs to the higher cell
        # under floor indexing; the lower-index cell owns [k, k+1)
        state, label = query_label(self.semmap(), (3.0, 2.0))
        assert (state, label) == (OCCUPIED, ClassLabel.WALL)
        state, label = query_label(self.semmap(), (4.0, 2.5))
        assert label == ClassLabel.OTHER


class TestLabelMeImport:
    def test_pixel_to_world_conversion(self):
        grid = flat_grid(10, 10, resolution=0.5)
        doc = {"shapes": [{"label": "Wall",
                           "points": [[0, 10], [10, 10], [10, 0], [0, 0]]}]}
        polys = load_labelme_polygons(doc, grid)
        # pixel y is measured from the image top; row 10 is the world origin
        assert polys[0].label == ClassLabel.WALL
        assert polys[0].vertices[0] == pytest.approx([0.0, 0.0])
        assert polys[0].vertices[2] == pytest.approx([5.0, 5.0])

    def test_case_insensitive_labels(self):
        grid = flat_grid()
        doc = json.dumps({"shapes": [{"label": "TRASHBIN",
                                      "points": [[0, 0], [4, 0], [4, 4]]}]})
        assert load_labelme_polygons(doc, grid)[0].label == ClassLabel.TRASH_BIN

    def test_unknown_label_listed_in_error(self):
        grid = flat_grid()
        doc = {"shapes": [{"label": "dragon", "points": [[0, 0], [4, 0], [4, 4]]}]}
        with pytest.raises(KeyError, match="dragon"):
            load_labelme_polygons(doc, grid)


class TestSemanticMapContainer:
    def test_person_label_rejected(self):
        grid = flat_grid(3, 3)
        labels = np.full((3, 3), int(ClassLabel.PERSON), dtype=np.uint8)
        with pytest.raises(ValueError):
            SemanticGridMap(grid=grid, labels=labels)

    def test_binary_roundtrip(self):
        grid = flat_grid(6, 4, resolution=0.25)
        grid.cells[1, 2] = OCCUPIED
        labels = np.zeros((4, 6), dtype=np.uint8)
        labels[1, 2] = int(ClassLabel.PILLAR)
        sem = SemanticGridMap(grid=grid, labels=labels)
        data = save_semantic_map(sem)
        sem2 = load_semantic_map(data)
        assert np.array_equal(sem2.grid.cells, sem.grid.cells)
        assert np.array_equal(sem2.labels, sem.labels)
        assert sem2.grid.resolution == 0.25
        assert save_semantic_map(sem2) == data

    def test_bad_magic(self):
        with pytest.raises(MapParseError):
            load_semantic_map(b"NOTAMAP!" + b"\x00" * 64)
