from __future__ import annotations
import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from travbev.config import OnlineConfig
from travbev.core.geometry import Pose, WheelFootprint
from travbev.pipeline.bev import BevGrid
from travbev.pipeline.learning import ModelParams, forward
from travbev.pipeline.online.maps import TraversabilityMap, extract_traversed_features, traversability_map
from travbev.pipeline.online.queue import PrototypeQueue

logger = logging.getLogger(__name__)

STAGES = ("forward", "extract", "update", "map")

@dataclass(frozen=True, eq=False)
class Snapshot:
	"""What readers get after a step: the map and a frozen copy of the queue."""
	map : TraversabilityMap
	prototypes : np.ndarray
	queue_version : int
	samples : int # traversed features folded in this step
	timings : dict[str, float] = field(default_factory=dict) # milliseconds per stage

class OnlineEngine:
	"""
	Single-writer loop: forward, extract traversed features, fold them into
	the prototype queue in trajectory order, then score every cell.
	"""
	__slots__ = ("params", "config", "footprint", "queue", "frozen", "_rng", "_latest")

	def __init__(self, params:ModelParams, config:OnlineConfig, footprint:WheelFootprint,
			queue:PrototypeQueue|None=None, frozen:bool=False):
		self.params: ModelParams = params
		self.config: OnlineConfig = config
		self.footprint: WheelFootprint = footprint
		self.queue: PrototypeQueue = queue if queue is not None \
			else PrototypeQueue.from_config(config, params.architecture.embedding_dim)
		self.frozen: bool = frozen # frozen queues are read but never updated
		self._rng = np.random.default_rng(config.seed)
		self._latest: Snapshot|None = None

	@property
	def latest(self) -> Snapshot|None:
		return self._latest

	def step(self, bev:BevGrid, pose_t:Pose, trajectory:Sequence[Pose]) -> Snapshot:
		timings = {}
		t0 = time.perf_counter()
		fmap = forward(self.params, bev)
		t1 = time.perf_counter()
		samples = np.zeros((0, fmap.dim))
		if not self.frozen:
			samples = extract_traversed_features(fmap, trajectory, self.footprint, pose_t, bev.spec,
				self.config.samples_per_frame, self.config.horizon, self._rng, bev.occupancy)
		t2 = time.perf_counter()
		self.queue.absorb_all(samples)
		t3 = time.perf_counter()
		tmap = traversability_map(fmap, self.queue, bev.occupancy, pose_t.timestamp)
		t4 = time.perf_counter()
		for name, (a, b) in zip(STAGES, ((t0, t1), (t1, t2), (t2, t3), (t3, t4))):
			timings[name] = (b - a)*1e3
		timings["total"] = (t4 - t0)*1e3

		prototypes = self.queue.vectors.copy()
		prototypes.setflags(write=False)
		self._latest = Snapshot(tmap, prototypes, self.queue.version, len(samples), timings)
		logger.debug("t=%.3f: %d samples, queue %d (v%d), %.1f ms",
			pose_t.timestamp, len(samples), len(self.queue), self.queue.version, timings["total"])
		return self._latest
