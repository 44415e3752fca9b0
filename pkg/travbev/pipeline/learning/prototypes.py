"""Training-time feature queues and the multi-scale k-means prototype hierarchy."""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.cluster import KMeans

from travbev.core.errors import ClusteringError, ConfigurationError
from travbev.core.utils import derive_seed, make_rng, unit_normalize

logger = logging.getLogger(__name__)

CLASSES = ("trav", "untrav")

class FeatureQueue:
	"""
	Bounded FIFO of unit-norm D-vectors for one class.
	"""
	__slots__ = ("tag", "capacity", "_data")

	def __init__(self, tag:str, capacity:int, dim:int|None=None):
		if tag not in CLASSES:
			raise ConfigurationError(f"Queue tag must be one of {CLASSES}, got {tag!r}")
		if capacity < 1:
			raise ConfigurationError("Queue capacity must be >= 1")
		self.tag: str = tag
		self.capacity: int = capacity
		self._data: np.ndarray | None = None if dim is None else np.zeros((0, dim))

	def __len__(self) -> int:
		return 0 if self._data is None else len(self._data)

	@property
	def dim(self) -> int | None:
		return None if self._data is None else self._data.shape[1]

	def push(self, vectors:np.ndarray) -> None:
		"""Append rows in order; the oldest rows are evicted past capacity."""
		v = np.asarray(vectors, dtype=np.float64)
		if v.ndim != 2 or len(v) == 0:
			return
		v = unit_normalize(v)
		if self._data is None:
			self._data = np.zeros((0, v.shape[1]))
		elif v.shape[1] != self._data.shape[1]:
			raise ConfigurationError(f"Queue holds D={self._data.shape[1]} vectors, got D={v.shape[1]}")
		self._data = np.concatenate([self._data, v])[-self.capacity:]

	def vectors(self) -> np.ndarray:
		if self._data is None:
			return np.zeros((0, 0))
		return self._data.copy()

	def clear(self) -> None:
		self._data = None if self._data is None else self._data[:0]

@dataclass(frozen=True)
class KMeansResult:
	centroids : np.ndarray # (k, D), unit-norm
	assignments : np.ndarray # (N,)
	inertia : float

@dataclass(frozen=True, eq=False)
class PrototypeHierarchy:
	"""Group m holds sizes[m] prototypes per class."""
	sizes : tuple[int, ...]
	trav : tuple[np.ndarray, ...]
	untrav : tuple[np.ndarray, ...]

	def __post_init__(self) -> None:
		if not (len(self.sizes) == len(self.trav) == len(self.untrav)):
			raise ConfigurationError("Each group needs prototypes for both classes")
		if any(a >= b for a, b in zip(self.sizes, self.sizes[1:])):
			raise ConfigurationError(f"Group sizes must be strictly increasing, got {self.sizes}")

	@property
	def groups(self) -> int:
		return len(self.sizes)

	def of(self, cls:str, m:int) -> np.ndarray:
		match cls:
			case "trav":
				return self.trav[m]
			case "untrav":
				return self.untrav[m]
			case _:
				raise ConfigurationError(f"Unknown class {cls!r}")

	def union(self, m:int) -> np.ndarray:
		"""Traversable prototypes of group m followed by untraversable ones."""
		return np.concatenate([self.trav[m], self.untrav[m]])

## ------ Public API ------ ##
def kmeans(points:np.ndarray, k:int, rng:np.random.Generator|int|None=None,
		max_iters:int=100, n_init:int=1) -> KMeansResult:
	"""
	Lloyd's algorithm with k-means++ seeding. Centroids are L2-renormalized
	afterwards so they can be compared by cosine.
	"""
	pts = np.asarray(points, dtype=np.float64)
	if pts.ndim != 2 or len(pts) < k or k < 1:
		raise ClusteringError(f"k-means needs at least k={k} points, got {len(pts)}")
	model = KMeans(n_clusters=k, init="k-means++", n_init=n_init, max_iter=max_iters,
		algorithm="lloyd", random_state=derive_seed(make_rng(rng)))
	assignments = model.fit_predict(pts)
	return KMeansResult(unit_normalize(model.cluster_centers_), assignments, float(model.inertia_))

def build_hierarchy(q_trav:FeatureQueue, q_untrav:FeatureQueue, sizes:Sequence[int],
		rng:np.random.Generator|int|None=None, max_iters:int=100) -> PrototypeHierarchy | None:
	"""
	Independent clusterings per class and group size. Returns None while
	either queue holds fewer than max(sizes) vectors.
	"""
	sizes = tuple(int(k) for k in sizes)
	need = max(sizes)
	if len(q_trav) < need or len(q_untrav) < need:
		logger.info("Prototype hierarchy deferred: queues hold %d/%d vectors, need %d",
			len(q_trav), len(q_untrav), need)
		return None
	gen = make_rng(rng)
	trav = tuple(kmeans(q_trav.vectors(), k, gen, max_iters).centroids for k in sizes)
	untrav = tuple(kmeans(q_untrav.vectors(), k, gen, max_iters).centroids for k in sizes)
	return PrototypeHierarchy(sizes, trav, untrav)
