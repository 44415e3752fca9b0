"""Trajectory and obstacle based trichotomy labels for BEV grids."""
from __future__ import annotations
import logging
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from matplotlib.path import Path as MplPath

from travbev.core.errors import ConfigurationError
from travbev.core.geometry import Pose, WheelFootprint, transform_footprint
from travbev.core.io import load_json, load_labels, load_mask, save_json, save_labels, sidecar_path
from travbev.pipeline.bev import GridSpec

logger = logging.getLogger(__name__)

# Cell centers are nudged off polygon edges so that boundaries shared by two
# cells are assigned to exactly one of them.
_EDGE_NUDGE = 1e-6

class Label(IntEnum):
	UNLABELED = 0
	TRAVERSABLE = 1
	UNTRAVERSABLE = 2

@dataclass(frozen=True, eq=False)
class ObstacleMask:
	mask : np.ndarray # (H, W) bool
	timestamp : float = 0.0

	def __post_init__(self) -> None:
		m = np.array(self.mask, dtype=bool)
		if m.ndim != 2:
			raise ConfigurationError(f"Obstacle mask must be 2D, got shape {m.shape}")
		m.setflags(write=False)
		object.__setattr__(self, "mask", m)

	@classmethod
	def empty(cls, spec:GridSpec, timestamp:float=0.0) -> "ObstacleMask":
		return cls(np.zeros(spec.shape, bool), timestamp)

	@classmethod
	def load(cls, path:str|Path, timestamp:float=0.0) -> "ObstacleMask":
		return cls(load_mask(path), timestamp)

@dataclass(frozen=True, eq=False)
class LabelMask:
	labels : np.ndarray # (H, W) uint8 in {0, 1, 2}
	timestamp : float = 0.0
	conflicts : int = 0 # cells both traversed and flagged as obstacle

	def __post_init__(self) -> None:
		lab = np.array(self.labels, dtype=np.uint8)
		if lab.ndim != 2:
			raise ConfigurationError(f"Label mask must be 2D, got shape {lab.shape}")
		if lab.max(initial=0) > Label.UNTRAVERSABLE:
			raise ConfigurationError("Label values must be 0, 1 or 2")
		lab.setflags(write=False)
		object.__setattr__(self, "labels", lab)

	@property
	def shape(self) -> tuple[int, int]:
		return self.labels.shape

	@property
	def traversable(self) -> np.ndarray:
		return self.labels == Label.TRAVERSABLE

	@property
	def untraversable(self) -> np.ndarray:
		return self.labels == Label.UNTRAVERSABLE

	@property
	def unlabeled(self) -> np.ndarray:
		return self.labels == Label.UNLABELED

	def unlabeled_fraction(self) -> float:
		return float(self.unlabeled.mean()) if self.labels.size else 0.0

## ------ Public API ------ ##
def trajectory_window(trajectory:Sequence[Pose], t:float, horizon:float, past_only:bool=False) -> list[Pose]:
	"""Poses with |tau - t| <= horizon (tau <= t when past_only), in input order."""
	upper = t if past_only else t + horizon
	return [p for p in trajectory if t - horizon <= p.timestamp <= upper]

def footprint_cell_array(trajectory:Sequence[Pose], fp:WheelFootprint, pose_t:Pose,
		spec:GridSpec, horizon:float, past_only:bool=False) -> np.ndarray:
	"""
	(K, 2) int array of the distinct (row, col) cells swept by the footprint
	over the trajectory window, ordered by the first pose that covered them.
	"""
	chunks = [
		_polygon_cells(spec.continuous_cells(transform_footprint(fp, pose, pose_t)), spec)
		for pose in trajectory_window(trajectory, pose_t.timestamp, horizon, past_only)
	]
	chunks = [c for c in chunks if len(c)]
	if not chunks:
		return np.zeros((0, 2), np.int64)
	cells = np.concatenate(chunks)
	flat = cells[:, 0]*spec.width_cells + cells[:, 1]
	_, first = np.unique(flat, return_index=True)
	return cells[np.sort(first)]

def footprint_cells(trajectory:Sequence[Pose], fp:WheelFootprint, pose_t:Pose,
		spec:GridSpec, horizon:float) -> set[tuple[int, int]]:
	return {(int(r), int(c)) for r, c in footprint_cell_array(trajectory, fp, pose_t, spec, horizon)}

def cells_to_mask(cells:Iterable[tuple[int, int]]|np.ndarray, spec:GridSpec) -> np.ndarray:
	mask = np.zeros(spec.shape, bool)
	arr = np.asarray(list(cells) if not isinstance(cells, np.ndarray) else cells, dtype=np.int64).reshape(-1, 2)
	if len(arr) and (arr.min() < 0 or arr[:, 0].max() >= spec.height_cells or arr[:, 1].max() >= spec.width_cells):
		raise ConfigurationError(f"Traversed cells fall outside the {spec.height_cells}x{spec.width_cells} mask")
	mask[arr[:, 0], arr[:, 1]] = True
	return mask

def build_label_mask(trav_cells:Iterable[tuple[int, int]]|np.ndarray, obstacles:ObstacleMask) -> LabelMask:
	"""
	Traversed cells are traversable, remaining obstacle cells untraversable.
	A cell claimed by both is kept traversable and counted as a conflict.
	"""
	h, w = obstacles.mask.shape
	trav = cells_to_mask(trav_cells, GridSpec(w, h))
	labels = np.zeros((h, w), dtype=np.uint8)
	labels[obstacles.mask] = Label.UNTRAVERSABLE
	labels[trav] = Label.TRAVERSABLE
	conflicts = int(np.count_nonzero(trav & obstacles.mask))
	if conflicts:
		logger.warning("%d cells are both traversed and obstacle at t=%.3f; labeled traversable",
			conflicts, obstacles.timestamp)
	return LabelMask(labels, obstacles.timestamp, conflicts)

def save_label_mask(mask:LabelMask, path:str|Path, source_bev:str|None=None) -> None:
	save_labels(mask.labels, path)
	save_json({
		"timestamp": mask.timestamp,
		"source_bev": source_bev,
		"conflicts": mask.conflicts,
		"unlabeled_fraction": mask.unlabeled_fraction(),
	}, sidecar_path(path))

def load_label_mask(path:str|Path) -> LabelMask:
	labels = load_labels(path)
	timestamp, conflicts = 0.0, 0
	side = sidecar_path(path)
	if side.exists():
		meta = load_json(side)
		timestamp = float(meta.get("timestamp", 0.0))
		conflicts = int(meta.get("conflicts", 0))
	return LabelMask(labels, timestamp, conflicts)

## ------ Internal ------ ##
def _polygon_cells(poly_rc:np.ndarray, spec:GridSpec) -> np.ndarray:
	"""Row-major (row, col) cells whose nudged centers fall inside the polygon."""
	lo = np.floor(poly_rc.min(axis=0)).astype(np.int64)
	hi = np.ceil(poly_rc.max(axis=0)).astype(np.int64)
	r0, c0 = max(lo[0], 0), max(lo[1], 0)
	r1, c1 = min(hi[0], spec.height_cells - 1), min(hi[1], spec.width_cells - 1)
	if r0 > r1 or c0 > c1:
		return np.zeros((0, 2), np.int64)
	rows, cols = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij")
	cand = np.stack([rows.ravel(), cols.ravel()], axis=1)
	inside = MplPath(poly_rc).contains_points(cand + _EDGE_NUDGE)
	return cand[inside]
