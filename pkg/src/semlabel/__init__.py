"""Semi-automatic semantic labeling toolkit for 2D lidar scans.

Label one environment map by hand, align every scan to it (line filtering +
ICP), and transfer a class label to each beam; plus geometric segmentation
baselines, confusion-matrix metrics, reference loss math, a synthetic scene
simulator with ground truth, and deterministic dataset file formats.
"""

from .scan_model import (ClassLabel, LidarScan, NormalizationStats, Pose2D,
                         SensorSpec, beam_angle, beam_angles,
                         compute_normalization_stats, normalize_scan,
                         polar_to_cartesian, transform_points)
from .map_label import (AnnotationPolygon, OccupancyGridMap, SemanticGridMap,
                        OUT_OF_BOUNDS, FREE, OCCUPIED, UNKNOWN,
                        load_occupancy_map, query_label, rasterize_labels)
from .line_extract import (LineExtractParams, LineSegment, extract_lines,
                           segment_scan, weighted_line_fit)
from .scan_align import (IcpParams, IcpResult, best_rigid_transform,
                         icp_refine, map_to_points)
from .autolabel import (AutoLabelConfig, LabeledScan, LabelTransferParams,
                        auto_label_scan, label_point, label_sequence)
from .leg_detect import LegDetectParams, cluster_scan, detect_person_points
from .eval_metrics import (ConfusionMatrix, class_accuracy, class_frequencies,
                           confusion_matrix, evaluate_predictions, iou,
                           mean_metrics)
from .loss_math import (hybrid_loss, kl_gaussian, lovasz_softmax,
                        median_frequency_weights, weighted_cross_entropy)
from .sim import (Material, PoseNoise, RaycastNoise, Scene, SceneObject,
                  rasterize_scene, raycast_scan, simulate_sequence)
from .dataset_io import (DatasetRecord, Prediction, SplitSpec, read_records,
                         split_dataset, write_records)

__version__ = "0.1.0"
