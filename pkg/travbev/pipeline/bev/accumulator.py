from __future__ import annotations
import logging
from dataclasses import dataclass, field

import numpy as np

from travbev.config import BevConfig
from travbev.core.errors import ConfigurationError, SequenceError
from travbev.core.geometry import CameraModel, FrameTag, PointCloud, Pose, colorize_cloud, fuse_clouds, to_odom
from travbev.pipeline.bev.grid import BevGrid, GridSpec, rasterize

logger = logging.getLogger(__name__)

@dataclass(frozen=True, eq=False)
class AccumulatorState:
	"""
	Sliding-window point accumulation in the odometry frame.
	frame_ids[i] is the index of the frame that contributed cloud point i.
	"""
	config : BevConfig = field(default_factory=BevConfig)
	cloud : PointCloud = field(default_factory=lambda: PointCloud.empty(True, FrameTag.ODOMETRY))
	frame_ids : np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
	frames_seen : int = 0
	last_timestamp : float | None = None

	def __post_init__(self) -> None:
		ids = np.asarray(self.frame_ids, dtype=np.int64).reshape(-1)
		if len(ids) != len(self.cloud):
			raise ConfigurationError("frame_ids must have one entry per accumulated point")
		if self.cloud.frame_tag is not FrameTag.ODOMETRY:
			raise ConfigurationError("Accumulated cloud must be in the odometry frame")
		ids.setflags(write=False)
		object.__setattr__(self, "frame_ids", ids)

	@property
	def spec(self) -> GridSpec:
		return GridSpec.from_config(self.config)

	@property
	def point_cap(self) -> int:
		"""Upper bound on in-grid points after pruning."""
		return self.config.width_cells*self.config.height_cells*self.config.cell_cap

	def ages(self) -> np.ndarray:
		return (self.frames_seen - 1) - self.frame_ids

## ------ Public API ------ ##
def step(state:AccumulatorState, pose_t:Pose, cloud_t:PointCloud,
		image:np.ndarray|None=None, cam:CameraModel|None=None) -> tuple[AccumulatorState, BevGrid]:
	"""
	Advance the accumulator by one frame and return the BEV at pose_t.
	Pass image=None with an already colored cloud_t to skip colorization.
	"""
	if state.last_timestamp is not None and pose_t.timestamp < state.last_timestamp:
		raise SequenceError(
			f"Frame at t={pose_t.timestamp:.6f} arrived after t={state.last_timestamp:.6f}")
	if image is not None:
		if cam is None:
			raise ConfigurationError("A camera model is required to colorize the cloud")
		colored = colorize_cloud(cloud_t, image, cam)
	elif cloud_t.is_colored:
		colored = cloud_t
	else:
		raise ConfigurationError("cloud_t is uncolored and no image was given")

	frame_index = state.frames_seen
	fused = fuse_clouds(state.cloud, pose_t, colored)
	ids = np.concatenate([state.frame_ids, np.full(len(colored), frame_index, np.int64)])
	keep = _prune_mask(fused.points, ids, frame_index, state.config)
	fused, ids = fused.subset(keep), ids[keep]
	bev = rasterize(fused, state.spec, pose_t.timestamp, pose_t)
	logger.debug("frame %d: %d points kept, %d cells occupied", frame_index, len(fused), int(bev.occupancy.sum()))
	new_state = AccumulatorState(state.config, to_odom(fused, pose_t), ids, frame_index + 1, pose_t.timestamp)
	return new_state, bev

## ------ Internal ------ ##
def _prune_mask(points:np.ndarray, frame_ids:np.ndarray, frame_index:int, cfg:BevConfig) -> np.ndarray:
	"""
	Keep points that are young enough, within range, inside the grid and
	among the newest cell_cap points of their cell. Points are in the
	current vehicle frame.
	"""
	spec = GridSpec.from_config(cfg)
	rows, cols, inside = spec.world_to_cells(points)
	keep = (frame_index - frame_ids <= cfg.window_frames) & inside
	keep &= np.linalg.norm(points, axis=1) <= cfg.max_range
	candidates = np.flatnonzero(keep)
	if len(candidates) == 0:
		return keep
	flat = rows[candidates]*spec.width_cells + cols[candidates]
	# Newest frame first, later input order first within a frame
	order = np.lexsort((-candidates, -frame_ids[candidates], flat))
	flat_sorted = flat[order]
	starts = np.r_[0, np.flatnonzero(flat_sorted[1:] != flat_sorted[:-1]) + 1]
	group_start = np.repeat(starts, np.diff(np.r_[starts, len(flat_sorted)]))
	rank = np.arange(len(flat_sorted)) - group_start
	keep[candidates[order[rank >= cfg.cell_cap]]] = False
	return keep
