"""ICP refinement: from a sloppy localization estimate to a tight pose.

Run: python demos/04_icp_alignment.py
"""

import math

import numpy as np

from semlabel import Pose2D, SensorSpec
from semlabel.line_extract import LineExtractParams, extract_lines, line_inlier_points
from semlabel.scan_align import IcpParams, icp_refine, map_to_points
from semlabel.scenes import random_room
from semlabel.sim import RaycastNoise, rasterize_scene, raycast_scan

spec = SensorSpec()
rng = np.random.default_rng(1)
scene = random_room(rng)
truth = Pose2D(0.4, -0.3, 0.8)

scan, _, _ = raycast_scan(scene, truth, spec, RaycastNoise(0.01, 0.0), rng=1)
segments = extract_lines(scan, spec, LineExtractParams())
source = line_inlier_points(scan, spec, segments)
print(f"{len(source)} line-inlier points feed ICP "
      f"(of {int(scan.finite_mask(spec).sum())} finite beams)")

semmap = rasterize_scene(scene)
index = map_to_points(semmap.grid)
print(f"map index holds {len(index.points)} occupied-cell centers")

init = Pose2D(truth.x + 0.08, truth.y - 0.09, truth.theta + math.radians(4))
err0 = math.hypot(init.x - truth.x, init.y - truth.y)
print(f"\ninitial estimate off by {err0 * 100:.1f} cm and 4.0 deg")

result = icp_refine(source, init, index, IcpParams(max_iterations=200))
err1 = math.hypot(result.pose.x - truth.x, result.pose.y - truth.y)
rot1 = math.degrees(abs(result.pose.theta - truth.theta))
print(f"after {result.iterations} iterations (converged={result.converged}): "
      f"residual {err1 * 1000:.1f} mm, {rot1:.3f} deg, "
      f"rms {result.rms * 1000:.1f} mm over {result.n_correspondences} matches")

# the refinement is what makes per-beam label transfer trustworthy
print("\nwithout this step, labels near object boundaries smear by the "
      "initial pose error;")
print("with it, the transfer error is dominated by sensor noise alone")
