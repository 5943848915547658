"""Sensor geometry basics: beam angles, projections, normalization.

Run: python demos/01_sensor_and_scans.py
"""

import math

import numpy as np

from semlabel import (LidarScan, NormalizationStats, Pose2D, SensorSpec,
                      beam_angle, normalize_scan, polar_to_cartesian,
                      transform_points)

spec = SensorSpec()
print(f"sensor: {spec.n_beams} beams over {math.degrees(spec.fov):.0f} deg, "
      f"{math.degrees(spec.angular_resolution):.2f} deg per beam, "
      f"max range {spec.range_max:.0f} m at {spec.rate:.0f} Hz")
print(f"beam 0 points at {math.degrees(beam_angle(0, spec)):.1f} deg, "
      f"beam 540 at {math.degrees(beam_angle(540, spec)):.1f} deg, "
      f"beam 1080 at {math.degrees(beam_angle(1080, spec)):.1f} deg")

# a synthetic sweep: 2 m everywhere except a block of no-returns
ranges = np.full(spec.n_beams, 2.0)
ranges[100:140] = spec.no_return
intensities = np.full(spec.n_beams, 1200.0)
scan = LidarScan(ranges=ranges, intensities=intensities, timestamp=0.0)

points, beam_idx = polar_to_cartesian(scan, spec)
print(f"\nprojected {len(points)} finite returns "
      f"({spec.n_beams - len(points)} no-return beams omitted)")
print(f"center beam lands at ({points[beam_idx.tolist().index(540)]} )")

# move the whole scan into the world frame of a robot at (1, 2) facing +y
pose = Pose2D(1.0, 2.0, math.pi / 2)
world = transform_points(points, pose)
print(f"after transform by {pose}: center beam at {world[beam_idx.tolist().index(540)]}")

# normalization maps (range, intensity) into [0, 1] for a learned model
stats = NormalizationStats(range_scale=spec.range_max, intensity_p99=2800.0)
grid = normalize_scan(scan, spec, stats)
print(f"\nnormalized input shape {grid.shape}: "
      f"ranges -> {grid[0].min():.3f}..{grid[0].max():.3f} "
      f"(no-returns become 1.0), intensities -> {grid[1][0]:.3f}")
