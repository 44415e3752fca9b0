"""Drive a vehicle along a scene's path and produce sensor frames with exact ground truth."""
from __future__ import annotations
import logging
from dataclasses import dataclass

import numpy as np

from travbev.core.errors import ConfigurationError
from travbev.core.geometry import CameraModel, FrameTag, PointCloud, Pose, project_points
from travbev.pipeline.autolabel import Label
from travbev.pipeline.bev import GridSpec
from travbev.synth.world import TRAVERSABLE_CLASSES, Scene, Terrain

logger = logging.getLogger(__name__)

# Camera looking straight down from above the vehicle: image right = vehicle right, image up = forward
DOWNWARD_ROTATION = np.array([[0.0, -1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])

@dataclass(frozen=True)
class DriveSpec:
	speed : float = 5.0 # m/s
	frame_rate : float = 10.0 # Hz
	duration : float = 5.0 # seconds
	start : float = 50.0 # meters along the driven path
	max_range : float = 45.0 # sensor range, meters; covers the default BEV grid corner to corner
	point_density : float = 6.0 # ground returns per square meter
	camera_height : float = 40.0
	pixel_size : float = 0.1 # ground meters per image pixel
	pose_noise_std : float = 0.0 # meters, added to logged translations
	yaw_noise_std : float = 0.0 # radians, added to logged headings
	seed : int = 0

	def __post_init__(self) -> None:
		if self.speed < 0 or self.frame_rate <= 0 or self.duration < 0:
			raise ConfigurationError("speed and duration must be >= 0, frame_rate > 0")
		if self.max_range <= 0 or self.point_density <= 0 or self.pixel_size <= 0:
			raise ConfigurationError("max_range, point_density and pixel_size must be positive")
		if self.pose_noise_std < 0 or self.yaw_noise_std < 0:
			raise ConfigurationError("Pose noise must be >= 0")

	@property
	def n_frames(self) -> int:
		return int(round(self.duration*self.frame_rate))

@dataclass(frozen=True, eq=False)
class SyntheticFrame:
	timestamp : float
	pose : Pose # logged pose (noisy when pose noise is enabled)
	true_pose : Pose
	cloud : PointCloud # raw, vehicle frame
	image : np.ndarray # (H, W, 3) uint8
	obstacles : np.ndarray # (rows, cols) bool, aligned to the BEV grid
	gt : np.ndarray # (rows, cols) uint8 Label values

def make_camera(drive:DriveSpec) -> CameraModel:
	"""Nadir camera covering the sensor disk with a 10% margin for raised obstacle tops."""
	size = int(np.ceil(2.2*drive.max_range/drive.pixel_size))
	f = drive.camera_height/drive.pixel_size
	return CameraModel(f, f, size/2, size/2, size, size, DOWNWARD_ROTATION, (0.0, 0.0, drive.camera_height))

## ------ Public API ------ ##
def simulate_drive(scene:Scene, drive:DriveSpec, grid:GridSpec, cam:CameraModel|None=None) -> list[SyntheticFrame]:
	"""
	Frames at drive.frame_rate while following the scene's driven path at a
	constant speed. Surfaces are rendered and sampled from the true pose;
	only the logged pose carries noise.
	"""
	cam = cam or make_camera(drive)
	rng = np.random.default_rng(drive.seed)
	frames = []
	for i in range(drive.n_frames):
		t = i/drive.frame_rate
		xy, yaw = scene.point_on_path(drive.start + drive.speed*t)
		true_pose = Pose.from_yaw(float(yaw), (xy[0], xy[1], 0.0), t)
		pose = _logged_pose(true_pose, drive, rng)
		ground, obstacle_pts = _sample_surfaces(scene, true_pose, drive, rng)
		cloud = PointCloud(np.concatenate([ground, obstacle_pts]), None, FrameTag.VEHICLE)
		image = _render(scene, true_pose, cam, obstacle_pts)
		obstacles, gt = _masks(scene, true_pose, grid, drive.max_range)
		frames.append(SyntheticFrame(t, pose, true_pose, cloud, image, obstacles, gt))
	logger.info("Simulated %d frames over %.1f m", len(frames), drive.speed*drive.duration)
	return frames

## ------ Internal ------ ##
def _logged_pose(pose:Pose, drive:DriveSpec, rng:np.random.Generator) -> Pose:
	if drive.pose_noise_std == 0 and drive.yaw_noise_std == 0:
		return pose
	yaw = np.arctan2(pose.rotation[1, 0], pose.rotation[0, 0]) + rng.normal(0.0, drive.yaw_noise_std)
	shift = np.r_[rng.normal(0.0, drive.pose_noise_std, 2), 0.0]
	return Pose.from_yaw(float(yaw), pose.translation + shift, pose.timestamp)

def _to_vehicle(world:np.ndarray, pose:Pose) -> np.ndarray:
	return (world - pose.translation) @ pose.rotation

def _to_world(vehicle:np.ndarray, pose:Pose) -> np.ndarray:
	return vehicle @ pose.rotation.T + pose.translation

def _sample_surfaces(scene:Scene, pose:Pose, drive:DriveSpec, rng:np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
	"""Vehicle-frame ground returns and obstacle returns within range."""
	R = drive.max_range
	n = int(drive.point_density*np.pi*R*R)
	r = R*np.sqrt(rng.random(n))
	theta = 2*np.pi*rng.random(n)
	ground = np.stack([r*np.cos(theta), r*np.sin(theta), np.zeros(n)], axis=1)
	cls = scene.classes_at(_to_world(ground, pose)[:, :2])
	ground = ground[(cls >= 0) & (cls != Terrain.OBSTACLE)]

	chunks = [np.zeros((0, 3))]
	center = pose.translation[:2]
	for ob in scene.obstacles:
		if np.hypot(ob.x - center[0], ob.y - center[1]) > R + ob.radius:
			continue
		n_top = int(drive.point_density*np.pi*ob.radius**2) + 1
		rr = ob.radius*np.sqrt(rng.random(n_top))
		tt = 2*np.pi*rng.random(n_top)
		top = np.stack([ob.x + rr*np.cos(tt), ob.y + rr*np.sin(tt), np.full(n_top, ob.height)], axis=1)
		n_side = int(drive.point_density*2*np.pi*ob.radius*ob.height)
		ts = 2*np.pi*rng.random(n_side)
		# Just inside the rim so side returns keep the obstacle's class
		rim = 0.98*ob.radius
		side = np.stack([ob.x + rim*np.cos(ts), ob.y + rim*np.sin(ts), ob.height*rng.random(n_side)], axis=1)
		chunks.extend([top, side])
	obstacle_pts = _to_vehicle(np.concatenate(chunks), pose)
	obstacle_pts = obstacle_pts[np.hypot(obstacle_pts[:, 0], obstacle_pts[:, 1]) <= R]
	return ground, obstacle_pts

def _render(scene:Scene, pose:Pose, cam:CameraModel, obstacle_pts:np.ndarray) -> np.ndarray:
	"""
	Ground colors by inverse projection of every pixel center onto z = 0,
	then obstacle returns splatted on top, nearest to the camera last.
	"""
	h, w = cam.image_height, cam.image_width
	height = cam.lidar_to_cam_translation[2]
	v, u = np.meshgrid(np.arange(h) + 0.5, np.arange(w) + 0.5, indexing="ij")
	ground = np.stack([-(v - cam.cy)*height/cam.fy, -(u - cam.cx)*height/cam.fx, np.zeros_like(u)], axis=-1)
	image = scene.colors_at(_to_world(ground.reshape(-1, 3), pose)[:, :2]).reshape(h, w, 3)
	if len(obstacle_pts):
		uv, valid = project_points(obstacle_pts, cam)
		pts = obstacle_pts[valid]
		colors = scene.colors_at(_to_world(pts, pose)[:, :2])
		order = np.argsort(pts[:, 2], kind="stable") # low first, highest (nearest) wins
		cols = np.floor(uv[valid, 0]).astype(np.int64)[order]
		rows = np.floor(uv[valid, 1]).astype(np.int64)[order]
		image[rows, cols] = colors[order]
	return image

def _masks(scene:Scene, pose:Pose, grid:GridSpec, max_range:float) -> tuple[np.ndarray, np.ndarray]:
	"""
	Obstacle mask as a range-limited detector would report it, and
	ground truth for every BEV cell inside the world (0 outside it).
	"""
	centers = grid.cell_centers().reshape(-1, 2)
	in_range = np.hypot(centers[:, 0], centers[:, 1]) <= max_range
	world = _to_world(np.c_[centers, np.zeros(len(centers))], pose)
	cls = scene.classes_at(world[:, :2])
	obstacles = in_range & (cls == Terrain.OBSTACLE)
	gt = np.zeros(len(cls), dtype=np.uint8)
	gt[np.isin(cls, [int(c) for c in TRAVERSABLE_CLASSES])] = Label.TRAVERSABLE
	gt[cls == Terrain.OBSTACLE] = Label.UNTRAVERSABLE
	return obstacles.reshape(grid.shape), gt.reshape(grid.shape)
