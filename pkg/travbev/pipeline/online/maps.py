from __future__ import annotations
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from travbev.core.errors import ConfigurationError
from travbev.core.geometry import Pose, WheelFootprint
from travbev.core.io import save_cost, save_json, sidecar_path
from travbev.pipeline.autolabel import footprint_cell_array
from travbev.pipeline.bev import GridSpec
from travbev.pipeline.learning import FeatureMap
from travbev.pipeline.online.queue import PrototypeQueue

logger = logging.getLogger(__name__)

@dataclass(frozen=True, eq=False)
class TraversabilityMap:
	values : np.ndarray # (H, W) in [0, 1]
	timestamp : float = 0.0
	cold_start : bool = False
	queue_size : int = 0
	queue_version : int = 0

	def __post_init__(self) -> None:
		v = np.array(self.values, dtype=np.float64)
		if v.ndim != 2 or np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
			raise ConfigurationError("Traversability values must be a finite 2D array in [0, 1]")
		v.setflags(write=False)
		object.__setattr__(self, "values", v)

## ------ Public API ------ ##
def traversability_map(fmap:FeatureMap, queue:PrototypeQueue, occupancy:np.ndarray|None=None,
		timestamp:float=0.0) -> TraversabilityMap:
	"""
	Per cell, the largest cosine similarity to any prototype, clamped to
	[0, 1]. Unobserved cells are 0. An empty queue gives a zero map flagged
	as a cold start.
	"""
	h, w = fmap.shape
	occ = np.ones((h, w), bool) if occupancy is None else np.asarray(occupancy, dtype=bool)
	if occ.shape != (h, w):
		raise ConfigurationError(f"Occupancy {occ.shape} does not match feature map {(h, w)}")
	if len(queue) == 0:
		logger.warning("Prototype queue is empty at t=%.3f; emitting a cold-start map", timestamp)
		return TraversabilityMap(np.zeros((h, w)), timestamp, True, 0, queue.version)
	if queue.dim != fmap.dim:
		raise ConfigurationError(f"Queue holds D={queue.dim} prototypes but features have D={fmap.dim}")
	feats = fmap.values.reshape(h*w, -1).astype(np.float64)
	best = (feats @ queue.vectors.T).max(axis=1).reshape(h, w)
	values = np.where(occ, np.clip(best, 0.0, 1.0), 0.0)
	return TraversabilityMap(values, timestamp, False, len(queue), queue.version)

def extract_traversed_features(fmap:FeatureMap, trajectory:Sequence[Pose], fp:WheelFootprint, pose_t:Pose,
		spec:GridSpec, n_samples:int, horizon:float, rng:np.random.Generator,
		occupancy:np.ndarray|None=None) -> np.ndarray:
	"""
	Features at cells swept by the footprint over past poses within horizon,
	subsampled to at most n_samples while keeping trajectory order. Cells
	the BEV has not observed are skipped when occupancy is given.
	"""
	cells = footprint_cell_array(trajectory, fp, pose_t, spec, horizon, past_only=True)
	if occupancy is not None and len(cells):
		cells = cells[np.asarray(occupancy, dtype=bool)[cells[:, 0], cells[:, 1]]]
	if len(cells) > n_samples:
		cells = cells[np.sort(rng.choice(len(cells), size=n_samples, replace=False))]
	if not len(cells):
		return np.zeros((0, fmap.dim))
	return fmap.at(cells).astype(np.float64)

def save_traversability(tmap:TraversabilityMap, path:str|Path) -> None:
	"""16-bit cost PNG plus sidecar JSON."""
	save_cost(tmap.values, path)
	save_json({
		"timestamp": tmap.timestamp, "queue_size": tmap.queue_size,
		"queue_version": tmap.queue_version, "cold_start": tmap.cold_start,
	}, sidecar_path(path))
