"""Loading predictions and ground truth for scoring."""
from __future__ import annotations
import logging
from pathlib import Path

import numpy as np

from travbev.core.errors import DataIOError, FormatError
from travbev.core.io import SequencePaths, frame_name, load_cost, load_labels, load_mask
from travbev.pipeline.autolabel import Label, LabelMask, load_label_mask
from travbev.pipeline.bev import occupancy_path
from travbev.pipeline.learning import split_index

logger = logging.getLogger(__name__)

def load_prediction(path:str|Path) -> np.ndarray:
	"""
	A 16-bit cost map scaled to [0, 1], or a palette label mask read as a
	hard prediction (traversable = 1, anything else = 0).
	"""
	try:
		return load_cost(path)
	except FormatError:
		return (load_labels(path) == Label.TRAVERSABLE).astype(np.float64)

def scored_frames(pred_dir:str|Path, gt_dir:str|Path, holdout_fraction:float=0.0) -> list[int]:
	"""
	Frame indices present in both directories, skipping the leading
	holdout_fraction of the ground-truth frames.
	"""
	pred_ids = SequencePaths(Path(pred_dir)).frame_indices(Path(pred_dir))
	gt_ids = SequencePaths(Path(gt_dir)).frame_indices(Path(gt_dir))
	start = split_index(len(gt_ids), holdout_fraction) if holdout_fraction > 0 else 0
	ids = sorted(set(gt_ids[start:]) & set(pred_ids))
	if not ids:
		raise DataIOError(f"No frames in common between {pred_dir} and {gt_dir}")
	missing = len(gt_ids[start:]) - len(ids)
	if missing:
		logger.warning("%d ground-truth frames have no prediction in %s", missing, pred_dir)
	return ids

def load_pairs(pred_dir:str|Path, gt_dir:str|Path, ids:list[int],
		bev_dir:str|Path|None=None) -> tuple[list[np.ndarray], list[LabelMask], list[np.ndarray]|None]:
	preds = [load_prediction(Path(pred_dir)/f"{frame_name(i)}.png") for i in ids]
	gts = [load_label_mask(Path(gt_dir)/f"{frame_name(i)}.png") for i in ids]
	observed = None
	if bev_dir is not None:
		observed = [load_mask(occupancy_path(Path(bev_dir)/f"{frame_name(i)}.png")) for i in ids]
	return preds, gts, observed
