from __future__ import annotations
import logging
from pathlib import Path

import numpy as np

from travbev.config import OnlineConfig
from travbev.core.errors import ConfigurationError, FormatError
from travbev.core.io import load_vector_block, save_vector_block
from travbev.core.utils import unit_normalize

logger = logging.getLogger(__name__)

class PrototypeQueue:
	"""
	Ordered traversable prototypes. A sample either merges into its most
	similar prototype (cosine >= alpha) by momentum or is appended as a new
	prototype; past capacity the oldest prototype is evicted.
	"""
	__slots__ = ("alpha", "momentum", "capacity", "version", "rejected", "_vectors")

	def __init__(self, alpha:float=0.9, momentum:float=0.99, capacity:int|None=64, dim:int|None=None):
		if not -1 <= alpha <= 1:
			raise ConfigurationError("alpha must be a cosine in [-1, 1]")
		if not 0 <= momentum <= 1:
			raise ConfigurationError("momentum must be in [0, 1]")
		if capacity is not None and capacity < 1:
			raise ConfigurationError("capacity must be >= 1 or None")
		self.alpha: float = float(alpha)
		self.momentum: float = float(momentum)
		self.capacity: int|None = capacity
		self.version: int = 0 # bumped on every accepted sample
		self.rejected: int = 0 # non-finite samples refused
		self._vectors: np.ndarray|None = None if dim is None else np.zeros((0, dim))

	@classmethod
	def from_config(cls, cfg:OnlineConfig, dim:int|None=None) -> "PrototypeQueue":
		return cls(cfg.alpha, cfg.momentum, cfg.capacity, dim)

	def __len__(self) -> int:
		return 0 if self._vectors is None else len(self._vectors)

	@property
	def dim(self) -> int|None:
		return None if self._vectors is None else self._vectors.shape[1]

	@property
	def vectors(self) -> np.ndarray:
		"""Read-only view of the (n, D) prototypes."""
		v = np.zeros((0, 0)) if self._vectors is None else self._vectors.view()
		v.setflags(write=False)
		return v

	def copy(self) -> "PrototypeQueue":
		out = PrototypeQueue(self.alpha, self.momentum, self.capacity)
		out.version, out.rejected = self.version, self.rejected
		out._vectors = None if self._vectors is None else self._vectors.copy()
		return out

	## ------ Updates ------ ##
	def absorb(self, z:np.ndarray) -> str:
		"""
		Fold one sample in place. Returns the action taken:
		"insert" (first prototype), "append", "merge" or "reject".
		"""
		z = np.asarray(z, dtype=np.float64).reshape(-1)
		if not np.all(np.isfinite(z)) or not np.any(z):
			self.rejected += 1
			logger.warning("Rejected a non-finite or zero prototype sample (%d so far)", self.rejected)
			return "reject"
		z = unit_normalize(z)
		if self._vectors is not None and self._vectors.shape[1] != len(z):
			raise ConfigurationError(f"Queue holds D={self._vectors.shape[1]} prototypes, got D={len(z)}")
		self.version += 1
		if not len(self):
			self._vectors = z[None, :].copy()
			logger.debug("Prototype queue started")
			return "insert"
		sims = self._vectors @ z
		best = int(np.argmax(sims))
		if sims[best] < self.alpha:
			self._vectors = np.concatenate([self._vectors, z[None, :]])
			if self.capacity is not None and len(self._vectors) > self.capacity:
				self._vectors = self._vectors[-self.capacity:]
			logger.debug("Prototype queue grew to %d (best cosine %.3f)", len(self), sims[best])
			return "append"
		self._vectors[best] = unit_normalize(self.momentum*self._vectors[best] + (1 - self.momentum)*z)
		return "merge"

	def absorb_all(self, samples:np.ndarray) -> None:
		"""Fold samples in row order."""
		arr = np.asarray(samples, dtype=np.float64)
		if arr.size == 0:
			return
		for z in np.atleast_2d(arr):
			self.absorb(z)

	## ------ Files ------ ##
	def save(self, path:str|Path) -> None:
		header = {
			"D": self.dim or 0, "alpha": self.alpha, "m": self.momentum, "count": len(self),
			"capacity": self.capacity, "version": self.version,
		}
		save_vector_block(header, self.vectors if len(self) else np.zeros((0, self.dim or 0)), path)

	@classmethod
	def load(cls, path:str|Path) -> "PrototypeQueue":
		header, vectors = load_vector_block(path)
		try:
			queue = cls(float(header["alpha"]), float(header["m"]), header.get("capacity"), int(header["D"]) or None)
		except KeyError as e:
			raise FormatError(f"{path}: prototype queue header is missing {e}") from e
		if len(vectors):
			norms = np.linalg.norm(vectors, axis=1)
			if np.max(np.abs(norms - 1.0)) > 1e-5:
				raise FormatError(f"{path}: stored prototypes are not unit-norm")
			queue._vectors = unit_normalize(vectors)
		queue.version = int(header.get("version", 0))
		return queue

def update_prototypes(queue:PrototypeQueue, z:np.ndarray) -> PrototypeQueue:
	"""Functional form of PrototypeQueue.absorb."""
	out = queue.copy()
	out.absorb(z)
	return out
