from __future__ import annotations
import logging
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch

from travbev.core.errors import ConfigurationError, DataIOError
from travbev.core.io import SequencePaths, frame_name
from travbev.pipeline.autolabel import Label, LabelMask, load_label_mask
from travbev.pipeline.bev import BevGrid, load_bev
from travbev.pipeline.learning.model import FeatureMap

logger = logging.getLogger(__name__)

def split_index(n_frames:int, fraction:float) -> int:
	"""Number of leading frames covered by fraction (at least one when n_frames > 0)."""
	if n_frames <= 0:
		return 0
	return min(n_frames, max(1, int(np.floor(n_frames*fraction))))

class FrameDataset:
	"""
	Paired BEV grids and label masks, in sequence order.
	"""
	__slots__ = ("bevs", "labels", "names")

	def __init__(self, bevs:Sequence[BevGrid], labels:Sequence[LabelMask], names:Sequence[str]|None=None):
		if len(bevs) != len(labels):
			raise ConfigurationError(f"{len(bevs)} BEV grids but {len(labels)} label masks")
		for bev, lab in zip(bevs, labels):
			if bev.spec.shape != lab.shape:
				raise ConfigurationError(f"Label mask {lab.shape} does not match BEV {bev.spec.shape}")
		shapes = {bev.spec.shape for bev in bevs}
		if len(shapes) > 1:
			raise ConfigurationError(f"All frames must share one grid size, got {sorted(shapes)}")
		self.bevs: list[BevGrid] = list(bevs)
		self.labels: list[LabelMask] = list(labels)
		self.names: list[str] = list(names) if names is not None else [frame_name(i) for i in range(len(bevs))]

	def __len__(self) -> int:
		return len(self.bevs)

	def __getitem__(self, i:int) -> tuple[BevGrid, LabelMask]:
		return self.bevs[i], self.labels[i]

	@property
	def grid_shape(self) -> tuple[int, int]:
		if not self.bevs:
			raise ConfigurationError("Dataset is empty")
		return self.bevs[0].spec.shape

	def batches(self, batch_size:int, rng:np.random.Generator) -> Iterator[list[int]]:
		"""Shuffled index batches covering every frame once."""
		order = rng.permutation(len(self))
		for start in range(0, len(order), batch_size):
			yield order[start:start + batch_size].tolist()

	@classmethod
	def from_sequence(cls, root:str|Path, fraction:float=1.0) -> "FrameDataset":
		"""Leading fraction of the frames that have both a BEV and a label mask."""
		paths = SequencePaths(Path(root))
		bev_ids = set(paths.frame_indices(paths.bev))
		ids = sorted(bev_ids & set(paths.frame_indices(paths.labels)))
		if not ids:
			raise DataIOError(f"No frames with both a BEV and a label mask under {root}")
		ids = ids[:split_index(len(ids), fraction)]
		bevs = [load_bev(paths.bev/f"{frame_name(i)}.png") for i in ids]
		labels = [load_label_mask(paths.labels/f"{frame_name(i)}.png") for i in ids]
		logger.info("Loaded %d frames from %s", len(ids), root)
		return cls(bevs, labels, [f"{Path(root).name}/{frame_name(i)}" for i in ids])

	@classmethod
	def concat(cls, parts:Sequence["FrameDataset"]) -> "FrameDataset":
		return cls(
			[b for p in parts for b in p.bevs],
			[l for p in parts for l in p.labels],
			[n for p in parts for n in p.names],
		)

## ------ Sampling ------ ##
def _pick(mask:np.ndarray, n:int, rng:np.random.Generator) -> np.ndarray:
	flat = np.flatnonzero(mask)
	if len(flat) <= n:
		return flat
	return flat[rng.choice(len(flat), size=n, replace=False)]

def sample_class_features(fmap:FeatureMap|np.ndarray|torch.Tensor, mask:LabelMask, n_per_class:int,
		rng:np.random.Generator):
	"""
	Up to n_per_class pixel features per class, drawn uniformly without
	replacement. Returns (F_trav, F_untrav, F_unlabel) as (k, D) arrays or
	tensors matching the input type.
	"""
	values = fmap.values if isinstance(fmap, FeatureMap) else fmap
	h, w, d = values.shape
	if (h, w) != mask.shape:
		raise ConfigurationError(f"Label mask {mask.shape} does not match feature map {(h, w)}")
	flat = values.reshape(h*w, d)
	out = []
	for label in (Label.TRAVERSABLE, Label.UNTRAVERSABLE, Label.UNLABELED):
		idx = _pick(mask.labels == label, n_per_class, rng)
		if isinstance(flat, torch.Tensor):
			out.append(flat[torch.from_numpy(idx)])
		else:
			out.append(flat[idx])
	return tuple(out)

## ------ Augmentation ------ ##
def augment_pair(bev:BevGrid, mask:LabelMask, rng:np.random.Generator) -> tuple[BevGrid, LabelMask]:
	"""
	Same random flips and cyclic shift applied to a BEV and its label mask.
	Labeled cells end up anywhere on the grid, including next to its border.
	"""
	h, w = mask.shape
	flips = tuple(axis for axis in (0, 1) if rng.random() < 0.5)
	shift = (int(rng.integers(h)), int(rng.integers(w)))

	def move(a:np.ndarray) -> np.ndarray:
		a = np.flip(a, axis=flips) if flips else a
		return np.roll(a, shift, axis=(0, 1))

	grid = BevGrid(bev.spec, move(bev.channels), move(bev.occupancy), bev.timestamp)
	return grid, LabelMask(move(mask.labels), mask.timestamp, mask.conflicts)
