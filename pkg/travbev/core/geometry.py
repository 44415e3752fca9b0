"""Rigid transforms, LiDAR-to-camera projection, point-cloud fusion.

Column-vector convention throughout: a pose maps vehicle-frame points p to
odometry-frame points R @ p + T. Point arrays are (N, 3), so the batched form
is points @ R.T + T.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from travbev.core.errors import ConfigurationError

ORTHONORMAL_TOL = 1e-6

def _check_rotation(rotation:np.ndarray, what:str) -> None:
	if rotation.shape != (3, 3) or not np.all(np.isfinite(rotation)):
		raise ConfigurationError(f"{what} must be a finite 3x3 matrix")
	if np.max(np.abs(rotation.T @ rotation - np.eye(3))) >= ORTHONORMAL_TOL:
		raise ConfigurationError(f"{what} is not orthonormal")
	if abs(np.linalg.det(rotation) - 1.0) >= ORTHONORMAL_TOL:
		raise ConfigurationError(f"{what} must have determinant +1")

def _frozen(a:np.ndarray) -> np.ndarray:
	a.setflags(write=False)
	return a

@dataclass(frozen=True, eq=False)
class Pose:
	rotation : np.ndarray # 3x3
	translation : np.ndarray # meters
	timestamp : float = 0.0 # seconds

	def __post_init__(self) -> None:
		rot = _frozen(np.array(self.rotation, dtype=np.float64))
		trans = _frozen(np.array(self.translation, dtype=np.float64).reshape(3))
		_check_rotation(rot, "Pose rotation")
		if not np.all(np.isfinite(trans)):
			raise ConfigurationError("Pose translation must be finite")
		object.__setattr__(self, "rotation", rot)
		object.__setattr__(self, "translation", trans)
		object.__setattr__(self, "timestamp", float(self.timestamp))

	@classmethod
	def identity(cls, timestamp:float=0.0) -> "Pose":
		return cls(np.eye(3), np.zeros(3), timestamp)

	@classmethod
	def from_yaw(cls, yaw:float, translation=(0.0, 0.0, 0.0), timestamp:float=0.0) -> "Pose":
		c, s = np.cos(yaw), np.sin(yaw)
		rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
		return cls(rot, np.asarray(translation, dtype=np.float64), timestamp)

	@classmethod
	def from_quaternion(cls, q_xyzw, translation, timestamp:float=0.0) -> "Pose":
		"""
		Build a pose from an (x, y, z, w) quaternion. The quaternion is
		normalized first so logs with rounding noise still load.
		"""
		x, y, z, w = np.asarray(q_xyzw, dtype=np.float64)/np.linalg.norm(q_xyzw)
		rot = np.array([
			[1 - 2*(y*y + z*z), 2*(x*y - z*w), 2*(x*z + y*w)],
			[2*(x*y + z*w), 1 - 2*(x*x + z*z), 2*(y*z - x*w)],
			[2*(x*z - y*w), 2*(y*z + x*w), 1 - 2*(x*x + y*y)],
		])
		return cls(rot, np.asarray(translation, dtype=np.float64), timestamp)

	@classmethod
	def from_matrix(cls, matrix:np.ndarray, timestamp:float=0.0) -> "Pose":
		m = np.asarray(matrix, dtype=np.float64)
		return cls(m[:3, :3], m[:3, 3], timestamp)

	def matrix(self) -> np.ndarray:
		"""Homogeneous 4x4 [R|T]."""
		m = np.eye(4)
		m[:3, :3] = self.rotation
		m[:3, 3] = self.translation
		return m

	def inverse_matrix(self) -> np.ndarray:
		m = np.eye(4)
		m[:3, :3] = self.rotation.T
		m[:3, 3] = -self.rotation.T @ self.translation
		return m

	def as_row(self) -> list[float]:
		"""timestamp, r00..r22 (row-major), tx, ty, tz"""
		return [self.timestamp, *self.rotation.ravel().tolist(), *self.translation.tolist()]

@dataclass(frozen=True, eq=False)
class CameraModel:
	fx : float
	fy : float
	cx : float
	cy : float
	image_width : int
	image_height : int
	lidar_to_cam_rotation : np.ndarray = field(default_factory=lambda: np.eye(3))
	lidar_to_cam_translation : np.ndarray = field(default_factory=lambda: np.zeros(3))

	def __post_init__(self) -> None:
		if not (self.fx > 0 and self.fy > 0):
			raise ConfigurationError("Focal lengths must be positive")
		if not (0 <= self.cx < self.image_width and 0 <= self.cy < self.image_height):
			raise ConfigurationError("Principal point must lie inside the image")
		rot = _frozen(np.array(self.lidar_to_cam_rotation, dtype=np.float64))
		trans = _frozen(np.array(self.lidar_to_cam_translation, dtype=np.float64).reshape(3))
		_check_rotation(rot, "lidar_to_cam_rotation")
		object.__setattr__(self, "lidar_to_cam_rotation", rot)
		object.__setattr__(self, "lidar_to_cam_translation", trans)

	def intrinsics(self) -> np.ndarray:
		return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

	def to_dict(self) -> dict:
		return {
			"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
			"image_width": self.image_width, "image_height": self.image_height,
			"lidar_to_cam_rotation": self.lidar_to_cam_rotation.tolist(),
			"lidar_to_cam_translation": self.lidar_to_cam_translation.tolist(),
		}

class FrameTag(str, Enum):
	VEHICLE = "vehicle"
	ODOMETRY = "odometry"

@dataclass(frozen=True, eq=False)
class PointCloud:
	points : np.ndarray # (N, 3) meters
	colors : np.ndarray | None = None # (N, 3) uint8
	frame_tag : FrameTag = FrameTag.VEHICLE

	def __post_init__(self) -> None:
		pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
		if not np.all(np.isfinite(pts)):
			raise ConfigurationError("Point coordinates must be finite")
		object.__setattr__(self, "points", pts)
		if self.colors is not None:
			cols = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
			if len(cols) != len(pts):
				raise ConfigurationError("Colors must be present for all points or for none")
			object.__setattr__(self, "colors", cols)
		object.__setattr__(self, "frame_tag", FrameTag(self.frame_tag))

	@classmethod
	def empty(cls, colored:bool=True, frame_tag:FrameTag=FrameTag.VEHICLE) -> "PointCloud":
		cols = np.zeros((0, 3), dtype=np.uint8) if colored else None
		return cls(np.zeros((0, 3)), cols, frame_tag)

	def __len__(self) -> int:
		return len(self.points)

	@property
	def is_colored(self) -> bool:
		return self.colors is not None

	def subset(self, keep:np.ndarray) -> "PointCloud":
		cols = None if self.colors is None else self.colors[keep]
		return PointCloud(self.points[keep], cols, self.frame_tag)

@dataclass(frozen=True, eq=False)
class WheelFootprint:
	left_front : np.ndarray
	left_rear : np.ndarray
	right_front : np.ndarray
	right_rear : np.ndarray

	def __post_init__(self) -> None:
		for name in ("left_front", "left_rear", "right_front", "right_rear"):
			object.__setattr__(self, name, _frozen(np.array(getattr(self, name), dtype=np.float64).reshape(3)))
		if not (min(self.left_front[0], self.right_front[0]) > max(self.left_rear[0], self.right_rear[0])):
			raise ConfigurationError("Front contacts must be ahead of rear contacts")
		if not (min(self.left_front[1], self.left_rear[1]) > max(self.right_front[1], self.right_rear[1])):
			raise ConfigurationError("Left contacts must be left of right contacts")

	@classmethod
	def from_extents(cls, front_x:float, rear_x:float, left_y:float, right_y:float, z:float=0.0) -> "WheelFootprint":
		return cls(
			(front_x, left_y, z), (rear_x, left_y, z),
			(front_x, right_y, z), (rear_x, right_y, z),
		)

	def polygon(self) -> np.ndarray:
		"""Contacts in cyclic order lf, lr, rr, rf as a (4, 3) array."""
		return np.stack([self.left_front, self.left_rear, self.right_rear, self.right_front])

## ------ Projection ------ ##
def project_points(points:np.ndarray, cam:CameraModel) -> tuple[np.ndarray, np.ndarray]:
	"""
	Project (N, 3) LiDAR points to pixels.
	Returns (uv, valid): uv is (N, 2) and only meaningful where valid, which
	requires positive camera depth and a pixel inside the image.
	"""
	pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
	pc = pts @ cam.lidar_to_cam_rotation.T + cam.lidar_to_cam_translation
	depth = pc[:, 2]
	in_front = depth > 0
	uv = np.full((len(pts), 2), np.nan)
	safe = np.where(in_front, depth, 1.0)
	uv[:, 0] = cam.fx*pc[:, 0]/safe + cam.cx
	uv[:, 1] = cam.fy*pc[:, 1]/safe + cam.cy
	valid = in_front & (uv[:, 0] >= 0) & (uv[:, 0] < cam.image_width) \
		& (uv[:, 1] >= 0) & (uv[:, 1] < cam.image_height)
	return uv, valid

def project_point(p, cam:CameraModel) -> tuple[float, float] | None:
	uv, valid = project_points(np.asarray(p, dtype=np.float64).reshape(1, 3), cam)
	if not valid[0]:
		return None
	return float(uv[0, 0]), float(uv[0, 1])

def colorize_cloud(cloud:PointCloud, image:np.ndarray, cam:CameraModel) -> PointCloud:
	"""
	Color each point with the pixel it projects into (nearest-pixel lookup).
	Points without a projection are dropped.
	"""
	img = np.asarray(image)
	if img.ndim != 3 or img.shape[2] != 3:
		raise ConfigurationError(f"Expected an RGB image, got shape {img.shape}")
	if img.shape[:2] != (cam.image_height, cam.image_width):
		raise ConfigurationError(
			f"Image is {img.shape[1]}x{img.shape[0]} but camera expects {cam.image_width}x{cam.image_height}")
	uv, valid = project_points(cloud.points, cam)
	cols = np.minimum(np.floor(uv[valid, 0]).astype(np.int64), cam.image_width - 1)
	rows = np.minimum(np.floor(uv[valid, 1]).astype(np.int64), cam.image_height - 1)
	return PointCloud(cloud.points[valid], img[rows, cols].astype(np.uint8), cloud.frame_tag)

## ------ Frame changes ------ ##
def fuse_clouds(prev_fused_odom:PointCloud, pose_t:Pose, current:PointCloud) -> PointCloud:
	"""
	Bring the odometry-frame accumulation into the vehicle frame at t and
	append the current scan: R^T (P - T) U P_t.
	"""
	moved = (prev_fused_odom.points - pose_t.translation) @ pose_t.rotation
	points = np.concatenate([moved, current.points])
	nonempty = [c for c in (prev_fused_odom, current) if len(c)]
	if len({c.is_colored for c in nonempty}) > 1:
		raise ConfigurationError("Cannot fuse colored and uncolored clouds")
	colored = nonempty[0].is_colored if nonempty else current.is_colored
	colors = None
	if colored:
		colors = np.concatenate([np.zeros((0, 3), np.uint8)] + [c.colors for c in nonempty])
	return PointCloud(points, colors, FrameTag.VEHICLE)

def to_odom(cloud_vehicle:PointCloud, pose_t:Pose) -> PointCloud:
	"""Vehicle frame at t -> odometry frame: R p + T."""
	points = cloud_vehicle.points @ pose_t.rotation.T + pose_t.translation
	return PointCloud(points, cloud_vehicle.colors, FrameTag.ODOMETRY)

def relative_transform(pose_from:Pose, pose_to:Pose) -> np.ndarray:
	"""4x4 map from the vehicle frame at pose_from to the vehicle frame at pose_to."""
	return pose_to.inverse_matrix() @ pose_from.matrix()

def apply_transform(matrix:np.ndarray, points:np.ndarray) -> np.ndarray:
	pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
	return pts @ matrix[:3, :3].T + matrix[:3, 3]

def transform_footprint(fp:WheelFootprint, pose_tau:Pose, pose_t:Pose) -> np.ndarray:
	"""
	Wheel contacts recorded at tau expressed in the vehicle frame at t,
	([R|T]^t)^-1 [R|T]^tau J. Returned in polygon order (lf, lr, rr, rf).
	"""
	return apply_transform(relative_transform(pose_tau, pose_t), fp.polygon())
