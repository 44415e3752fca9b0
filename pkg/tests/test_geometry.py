from __future__ import annotations

import numpy as np
import pytest

from travbev.core.errors import ConfigurationError
from travbev.core.geometry import (
	FrameTag,
	PointCloud,
	Pose,
	WheelFootprint,
	apply_transform,
	colorize_cloud,
	fuse_clouds,
	project_point,
	project_points,
	relative_transform,
	to_odom,
	transform_footprint,
)

def _gradient_image(h:int=100, w:int=100) -> np.ndarray:
	rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
	return np.stack([rows, cols, np.zeros_like(rows)], axis=-1).astype(np.uint8)

class TestPose:
	def test_yaw_rotates_forward_to_left(self):
		pose = Pose.from_yaw(np.pi/2, (1.0, 2.0, 0.0))
		out = apply_transform(pose.matrix(), [[1.0, 0.0, 0.0]])
		np.testing.assert_allclose(out[0], [1.0, 3.0, 0.0], atol=1e-12)

	def test_inverse_matrix(self):
		pose = Pose.from_yaw(0.7, (3.0, -1.0, 0.5))
		np.testing.assert_allclose(pose.inverse_matrix() @ pose.matrix(), np.eye(4), atol=1e-12)

	def test_quaternion_matches_yaw(self):
		half = np.pi/4
		q = Pose.from_quaternion((0.0, 0.0, np.sin(half), np.cos(half)), (0.0, 0.0, 0.0))
		np.testing.assert_allclose(q.rotation, Pose.from_yaw(np.pi/2).rotation, atol=1e-12)

	def test_unnormalized_quaternion_is_accepted(self):
		q = Pose.from_quaternion((0.0, 0.0, 0.0, 2.0), (1.0, 0.0, 0.0))
		np.testing.assert_allclose(q.rotation, np.eye(3))

	def test_rejects_non_orthonormal(self):
		with pytest.raises(ConfigurationError):
			Pose(np.diag([1.0, 2.0, 1.0]), np.zeros(3))

	def test_rejects_reflection(self):
		with pytest.raises(ConfigurationError):
			Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))

	def test_arrays_are_read_only(self):
		pose = Pose.identity()
		with pytest.raises(ValueError):
			pose.translation[0] = 1.0

	def test_relative_transform_of_same_pose_is_identity(self):
		pose = Pose.from_yaw(1.2, (4.0, 5.0, 0.0))
		np.testing.assert_allclose(relative_transform(pose, pose), np.eye(4), atol=1e-12)

class TestProjection:
	def test_principal_point(self, pinhole):
		assert project_point((0.0, 0.0, 1.0), pinhole) == (50.0, 50.0)

	def test_offset_point(self, pinhole):
		u, v = project_point((0.125, 0.375, 1.0), pinhole)
		assert u == pytest.approx(62.5)
		assert v == pytest.approx(87.5)

	def test_behind_camera_is_invalid(self, pinhole):
		_, valid = project_points(np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 0.0]]), pinhole)
		assert not valid.any()

	def test_scaling_a_point_keeps_its_pixel(self, pinhole, rng):
		for _ in range(100):
			p = np.array([rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 1.0])*rng.uniform(0.5, 5.0)
			c = rng.uniform(0.01, 100.0)
			np.testing.assert_allclose(project_point(c*p, pinhole), project_point(p, pinhole), rtol=0, atol=1e-9)

	def test_outside_image_is_none(self, pinhole):
		assert project_point((1.0, 0.0, 1.0), pinhole) is None

	def test_colorize_reads_projected_pixels(self, pinhole):
		cloud = PointCloud(np.array([[0.0, 0.0, 1.0], [0.125, 0.375, 1.0], [0.0, 0.0, -1.0]]))
		out = colorize_cloud(cloud, _gradient_image(), pinhole)
		assert len(out) == 2
		np.testing.assert_array_equal(out.colors, [[50, 50, 0], [87, 62, 0]])

	def test_colorize_rejects_wrong_image_size(self, pinhole):
		cloud = PointCloud(np.array([[0.0, 0.0, 1.0]]))
		with pytest.raises(ConfigurationError):
			colorize_cloud(cloud, _gradient_image(80, 100), pinhole)

class TestFusion:
	def test_previous_points_move_into_current_frame(self):
		prev = PointCloud(np.array([[5.0, 0.0, 0.0]]), np.array([[1, 2, 3]]), FrameTag.ODOMETRY)
		cur = PointCloud(np.array([[0.5, 0.0, 0.0]]), np.array([[4, 5, 6]]))
		fused = fuse_clouds(prev, Pose.from_yaw(0.0, (1.0, 0.0, 0.0)), cur)
		np.testing.assert_allclose(fused.points, [[4.0, 0.0, 0.0], [0.5, 0.0, 0.0]])
		np.testing.assert_array_equal(fused.colors, [[1, 2, 3], [4, 5, 6]])
		assert fused.frame_tag is FrameTag.VEHICLE

	def test_to_odom_then_fuse_is_identity(self, rng):
		pose = Pose.from_yaw(0.4, (2.0, -3.0, 0.1))
		cloud = PointCloud(rng.normal(size=(20, 3)), rng.integers(0, 255, (20, 3)))
		back = fuse_clouds(to_odom(cloud, pose), pose, PointCloud.empty())
		np.testing.assert_allclose(back.points, cloud.points, atol=1e-12)

	def test_colored_and_uncolored_do_not_mix(self):
		prev = PointCloud(np.zeros((1, 3)), np.zeros((1, 3)), FrameTag.ODOMETRY)
		with pytest.raises(ConfigurationError):
			fuse_clouds(prev, Pose.identity(), PointCloud(np.ones((1, 3))))

class TestFootprint:
	def test_polygon_order(self, footprint):
		np.testing.assert_allclose(footprint.polygon()[:, :2], [[1.0, 0.5], [-1.0, 0.5], [-1.0, -0.5], [1.0, -0.5]])

	def test_rejects_swapped_sides(self):
		with pytest.raises(ConfigurationError):
			WheelFootprint.from_extents(1.0, -1.0, -0.5, 0.5)

	def test_future_pose_is_ahead(self, footprint):
		poly = transform_footprint(footprint, Pose.from_yaw(0.0, (2.0, 0.0, 0.0), 1.0), Pose.identity())
		np.testing.assert_allclose(poly[:, 0], [3.0, 1.0, 1.0, 3.0])

	def test_rotated_current_pose(self, footprint):
		# Pose at t faces +y; a footprint recorded 2 m further along +y lands 2 m ahead
		pose_t = Pose.from_yaw(np.pi/2, (0.0, 0.0, 0.0))
		pose_tau = Pose.from_yaw(np.pi/2, (0.0, 2.0, 0.0))
		poly = transform_footprint(footprint, pose_tau, pose_t)
		np.testing.assert_allclose(poly[:, :2], footprint.polygon()[:, :2] + [2.0, 0.0], atol=1e-12)

class TestRandomPoses:
	@staticmethod
	def _random_pose(rng) -> Pose:
		return Pose.from_quaternion(rng.normal(size=4), rng.uniform(-50, 50, 3), float(rng.random()))

	def test_relative_transforms_compose(self, rng):
		for _ in range(100):
			a, b, c = (self._random_pose(rng) for _ in range(3))
			np.testing.assert_allclose(relative_transform(b, c) @ relative_transform(a, b),
				relative_transform(a, c), atol=1e-9)

	def test_odometry_round_trip(self, rng):
		for _ in range(100):
			pose = self._random_pose(rng)
			cloud = PointCloud(rng.uniform(-20, 20, (10, 3)))
			back = fuse_clouds(to_odom(cloud, pose), pose, PointCloud.empty(colored=False))
			np.testing.assert_allclose(back.points, cloud.points, atol=1e-9)

	def test_footprint_at_current_pose_is_unchanged(self, rng, footprint):
		for _ in range(100):
			pose = self._random_pose(rng)
			np.testing.assert_allclose(transform_footprint(footprint, pose, pose), footprint.polygon(), atol=1e-9)
