import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semlabel.scan_model import (ClassLabel, LidarScan, NormalizationStats,
                                 Pose2D, SensorSpec, beam_angle, beam_angles,
                                 class_from_name, encode_no_returns,
                                 normalize_angle, normalize_scan,
                                 polar_to_cartesian, transform_points)

SPEC = SensorSpec()


def make_scan(ranges, intensities=None):
    ranges = np.asarray(ranges, dtype=float)
    if intensities is None:
        intensities = np.zeros_like(ranges)
    return LidarScan(ranges=ranges, intensities=intensities)


class TestSensorSpec:
    def test_default_sensor(self):
        assert SPEC.n_beams == 1081
        assert SPEC.fov == pytest.approx(math.radians(270.0), abs=1e-12)
        assert SPEC.angular_resolution == pytest.approx(math.radians(0.25), abs=1e-12)
        assert SPEC.range_max == 60.0
        assert SPEC.rate == 20.0

    def test_fov_consistency_enforced(self):
        with pytest.raises(ValueError):
            SensorSpec(n_beams=1081, fov=math.radians(180.0))

    def test_fov_matches_beam_count(self):
        assert SPEC.fov == pytest.approx((SPEC.n_beams - 1) * SPEC.angular_resolution,
                                         abs=1e-9)

    def test_no_return_sentinel(self):
        assert SPEC.no_return == 61.0


class TestBeamAngle:
    def test_first_beam_at_minus_half_fov(self):
        assert beam_angle(0, SPEC) == pytest.approx(math.radians(-135.0), abs=1e-12)

    def test_center_beam_at_zero(self):
        assert beam_angle(540, SPEC) == pytest.approx(0.0, abs=1e-12)

    def test_last_beam(self):
        # arithmetic oracle: -135 deg + 1080 * 0.25 deg
        expected = math.radians(-135.0) + 1080 * math.radians(0.25)
        assert beam_angle(1080, SPEC) == pytest.approx(expected, abs=1e-12)
        assert beam_angle(1080, SPEC) == pytest.approx(math.radians(135.0), abs=1e-9)

    @pytest.mark.parametrize("i", [-1, 1081, 5000])
    def test_out_of_range(self, i):
        with pytest.raises(IndexError):
            beam_angle(i, SPEC)

    def test_strictly_increasing_and_spans_fov(self):
        angles = beam_angles(SPEC)
        assert np.all(np.diff(angles) > 0)
        assert angles[-1] - angles[0] == pytest.approx(SPEC.fov, abs=1e-9)
        for i in (0, 1, 540, 1080):
            assert angles[i] == beam_angle(i, SPEC)


class TestPolarToCartesian:
    def test_center_beam_along_x(self):
        r = np.full(SPEC.n_beams, SPEC.no_return)
        r[540] = 2.0
        points, idx = polar_to_cartesian(make_scan(r), SPEC)
        assert idx.tolist() == [540]
        assert points[0] == pytest.approx([2.0, 0.0], abs=1e-12)

    def test_first_beam_direction(self):
        r = np.full(SPEC.n_beams, SPEC.no_return)
        r[0] = 1.0
        points, idx = polar_to_cartesian(make_scan(r), SPEC)
        assert points[0] == pytest.approx(
            [math.cos(math.radians(-135)), math.sin(math.radians(-135))], abs=1e-9)

    def test_all_no_return_gives_empty(self):
        r = np.full(SPEC.n_beams, SPEC.no_return)
        points, idx = polar_to_cartesian(make_scan(r), SPEC)
        assert len(points) == 0 and len(idx) == 0

    def test_range_reconstruction_roundtrip(self):
        rng = np.random.default_rng(3)
        r = rng.uniform(0.1, 59.0, SPEC.n_beams)
        r[rng.random(SPEC.n_beams) < 0.2] = SPEC.no_return
        scan = make_scan(r)
        points, idx = polar_to_cartesian(scan, SPEC)
        assert len(points) == scan.finite_mask(SPEC).sum()
        norms = np.linalg.norm(points, axis=1)
        assert np.allclose(norms, r[idx], atol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            polar_to_cartesian(make_scan(np.ones(100)), SPEC)


class TestTransformPoints:
    def test_identity(self):
        pts = np.array([[1.0, 2.0], [-3.0, 0.5]])
        assert np.allclose(transform_points(pts, Pose2D()), pts)

    def test_pure_translation(self):
        out = transform_points(np.array([[0.0, 0.0]]), Pose2D(1.0, 0.0, 0.0))
        assert out[0] == pytest.approx([1.0, 0.0])

    def test_quarter_turn(self):
        # rotation-matrix oracle at theta = pi/2
        theta = math.pi / 2
        oracle = np.array([[math.cos(theta), -math.sin(theta)],
                           [math.sin(theta), math.cos(theta)]]) @ np.array([1.0, 0.0])
        out = transform_points(np.array([[1.0, 0.0]]), Pose2D(0, 0, theta))
        assert out[0] == pytest.approx(oracle, abs=1e-12)
        assert out[0] == pytest.approx([0.0, 1.0], abs=1e-12)

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-math.pi, math.pi))
    @settings(max_examples=50, deadline=None)
    def test_inverse_roundtrip(self, x, y, theta):
        pose = Pose2D(x, y, theta)
        pts = np.array([[0.3, -1.2], [4.0, 2.0], [0.0, 0.0]])
        back = transform_points(transform_points(pts, pose), pose.inverse())
        assert np.allclose(back, pts, atol=1e-9)


class TestNormalizeScan:
    STATS = NormalizationStats(range_scale=60.0, intensity_p99=1000.0)

    def test_boundary_and_linear_scaling(self):
        r = np.full(SPEC.n_beams, 30.0)
        r[0] = 60.0
        out = normalize_scan(make_scan(r), SPEC, self.STATS)
        assert out[0, 0] == pytest.approx(1.0)
        assert out[0, 1] == pytest.approx(0.5)

    def test_no_return_maps_to_one(self):
        r = np.full(SPEC.n_beams, SPEC.no_return)
        out = normalize_scan(make_scan(r), SPEC, self.STATS)
        assert np.all(out[0] == 1.0)

    def test_intensity_clipped_at_p99(self):
        intensities = np.full(SPEC.n_beams, 2000.0)
        out = normalize_scan(make_scan(np.ones(SPEC.n_beams), intensities),
                             SPEC, self.STATS)
        assert np.all(out[1] == 1.0)

    def test_non_positive_stats_rejected(self):
        with pytest.raises(ValueError):
            NormalizationStats(range_scale=0.0, intensity_p99=1.0)
        with pytest.raises(ValueError):
            NormalizationStats(range_scale=60.0, intensity_p99=-1.0)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_output_always_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        r = encode_no_returns(rng.uniform(-5, 100, SPEC.n_beams), SPEC)
        i = rng.uniform(0, 5000, SPEC.n_beams)
        out = normalize_scan(make_scan(r, i), SPEC, self.STATS)
        assert out.shape == (2, SPEC.n_beams)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)


class TestPose2D:
    @pytest.mark.parametrize("theta,expected", [
        (0.0, 0.0),
        (math.pi, math.pi),
        (-math.pi, math.pi),
        (3 * math.pi, math.pi),
        (2 * math.pi, 0.0),
        (-math.pi / 2, -math.pi / 2),
    ])
    def test_theta_normalized_into_half_open_interval(self, theta, expected):
        assert Pose2D(0, 0, theta).theta == pytest.approx(expected, abs=1e-12)

    @given(st.floats(-50, 50))
    @settings(max_examples=50, deadline=None)
    def test_normalize_angle_range(self, theta):
        wrapped = normalize_angle(theta)
        assert -math.pi < wrapped <= math.pi


class TestClassLabel:
    def test_ten_classes(self):
        assert len(ClassLabel) == 10
        assert ClassLabel.OTHER == 0 and ClassLabel.WALL == 9

    def test_person_lookup_aliases(self):
        assert class_from_name("person") == ClassLabel.PERSON
        assert class_from_name("WALL") == ClassLabel.WALL
        assert class_from_name("trash bin") == ClassLabel.TRASH_BIN

    def test_unknown_name_reported(self):
        with pytest.raises(KeyError, match="spaceship"):
            class_from_name("spaceship")


class TestLidarScan:
    def test_negative_intensity_rejected(self):
        with pytest.raises(ValueError):
            LidarScan(ranges=np.ones(10), intensities=np.full(10, -1.0))

    def test_validate_against_spec(self):
        r = np.full(SPEC.n_beams, 10.0)
        r[5] = 75.0  # not the sentinel
        with pytest.raises(ValueError):
            make_scan(r).validate_against(SPEC)

    def test_encode_no_returns(self):
        raw = np.array([1.0, np.inf, np.nan, 65.0, -0.5])
        spec = SensorSpec(n_beams=5, fov=4 * math.radians(0.25),
                          angular_resolution=math.radians(0.25))
        out = encode_no_returns(raw, spec)
        assert out[0] == 1.0
        assert np.all(out[1:] == spec.no_return)
