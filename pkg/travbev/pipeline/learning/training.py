"""Epoch loop: sample labeled pixels, combine the loss terms, update the network."""
from __future__ import annotations
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import torch

from travbev.config import TrainConfig
from travbev.core.errors import ConfigurationError, DataIOError, TrainingDivergedError
from travbev.pipeline.learning.dataset import FrameDataset, augment_pair, sample_class_features
from travbev.pipeline.learning.losses import cluster_loss, contrast_loss, total_loss, unlabel_loss
from travbev.pipeline.learning.model import ModelParams, bev_tensor, embed
from travbev.pipeline.learning.prototypes import FeatureQueue, PrototypeHierarchy, build_hierarchy, kmeans

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "loss_total", "loss_contrast", "loss_cluster", "loss_unlabel", "lambda", "lr",
	"sim_trav", "sim_cross", "separation"]

@dataclass(eq=False)
class TrainResult:
	params : ModelParams
	history : pd.DataFrame
	q_trav : FeatureQueue
	q_untrav : FeatureQueue

## ------ Public API ------ ##
def fit(dataset:FrameDataset, config:TrainConfig, params:ModelParams) -> TrainResult:
	"""
	Train params in place. The prototype hierarchy is rebuilt from the feature
	queues at the start of every epoch; queues are refreshed after every batch.
	"""
	if len(dataset) == 0:
		raise ConfigurationError("Cannot train on an empty dataset")
	arch = params.architecture
	if dataset.grid_shape != (arch.input_height, arch.input_width):
		raise ConfigurationError(
			f"Dataset grids {dataset.grid_shape} do not match the model input {(arch.input_height, arch.input_width)}")

	rng = np.random.default_rng(config.seed)
	terms = tuple(config.loss_terms)
	needs_hierarchy = "cluster" in terms or "unlabel" in terms
	q_trav = FeatureQueue("trav", config.queue_capacity, arch.embedding_dim)
	q_untrav = FeatureQueue("untrav", config.queue_capacity, arch.embedding_dim)

	params.network.train()
	optimizer = torch.optim.Adam(params.network.parameters(), lr=config.learning_rate)
	scheduler = torch.optim.lr_scheduler.PolynomialLR(optimizer, total_iters=max(config.epochs, 1), power=config.lr_power)

	rows = []
	for epoch in range(config.epochs):
		lam = config.lambda_at(epoch)
		lr = optimizer.param_groups[0]["lr"]
		hierarchy = build_hierarchy(q_trav, q_untrav, config.cluster_sizes, rng, config.kmeans_max_iters) \
			if needs_hierarchy else None
		row = _run_epoch(dataset, config, params, optimizer, hierarchy, lam, epoch, rng, q_trav, q_untrav)
		row.update(epoch=epoch, lr=lr)
		rows.append(row)
		scheduler.step()
		logger.info("epoch %d/%d  loss %.5f (contrast %.5f, cluster %.5f, unlabel %.5f)  lambda %.3f  lr %.2e  separation %.4f",
			epoch + 1, config.epochs, row["loss_total"], row["loss_contrast"], row["loss_cluster"],
			row["loss_unlabel"], lam, lr, row["separation"])
	params.network.eval()

	history = pd.DataFrame(rows)
	ordered = HISTORY_COLUMNS + sorted(c for c in history.columns if c not in HISTORY_COLUMNS)
	history = history.reindex(columns=ordered)
	for col in (c for c in history.columns if c.startswith("skip_")):
		history[col] = history[col].fillna(0).astype(int)
	return TrainResult(params, history, q_trav, q_untrav)

def save_history(history:pd.DataFrame, path:str|Path) -> None:
	p = Path(path)
	p.parent.mkdir(parents=True, exist_ok=True)
	try:
		history.to_csv(p, index=False)
	except OSError as e:
		raise DataIOError(f"Failed to write {p}: {e}") from e

def trained_prototypes(result:TrainResult, config:TrainConfig) -> np.ndarray:
	"""
	Centroids of the final traversable feature queue at the finest group
	size, used to seed the online prototype queue.
	"""
	features = result.q_trav.vectors()
	if len(features) == 0:
		return np.zeros((0, result.params.architecture.embedding_dim))
	k = min(max(config.cluster_sizes), len(features))
	return kmeans(features, k, config.seed, config.kmeans_max_iters).centroids

## ------ Internal ------ ##
def _scalar(value:torch.Tensor|float) -> float:
	return value.detach().item() if torch.is_tensor(value) else float(value)

def _run_epoch(dataset:FrameDataset, config:TrainConfig, params:ModelParams, optimizer:torch.optim.Optimizer,
		hierarchy:PrototypeHierarchy|None, lam:float, epoch:int, rng:np.random.Generator,
		q_trav:FeatureQueue, q_untrav:FeatureQueue) -> dict:
	terms = tuple(config.loss_terms)
	skips: Counter = Counter()
	sums = Counter()
	n_steps = 0
	sim_trav, sim_cross = [], []

	for b, batch in enumerate(dataset.batches(config.batch_size, rng)):
		pairs = [dataset[i] for i in batch]
		if config.augment:
			pairs = [augment_pair(bev, mask, rng) for bev, mask in pairs]
		out = embed(params, bev_tensor([bev for bev, _ in pairs], params.dtype)).permute(0, 2, 3, 1)
		samples = [sample_class_features(out[k], mask, config.samples_per_class, rng)
			for k, (_, mask) in enumerate(pairs)]
		f_trav, f_untrav, f_unlabel = (torch.cat([s[c] for s in samples]) for c in range(3))

		parts: dict[str, torch.Tensor] = {}
		if "contrast" in terms:
			parts["contrast"] = contrast_loss(f_trav, f_untrav, config.temperature, config.contrast_variant, skips)
		if "cluster" in terms:
			parts["cluster"] = cluster_loss(f_trav, f_untrav, hierarchy, config.negatives, config.temperature,
				rng, config.proto_variant, skips)
		if "unlabel" in terms:
			parts["unlabel"] = unlabel_loss(f_unlabel, hierarchy, config.psa_sigma, rng, skips)
		loss = total_loss(parts, lam, terms)

		value_of = {k: _scalar(v) for k, v in parts.items()}
		total = _scalar(loss)
		if not np.isfinite(total):
			detail = ", ".join(f"{k}={v:.6g}" for k, v in value_of.items())
			raise TrainingDivergedError(f"Non-finite loss at epoch {epoch} batch {b}: {detail}")
		if torch.is_tensor(loss) and loss.requires_grad:
			optimizer.zero_grad()
			loss.backward()
			optimizer.step()
		else:
			skips["step"] += 1

		sums["loss_total"] += total
		for name, value in value_of.items():
			sums[f"loss_{name}"] += value
		n_steps += 1

		t, u = f_trav.detach().cpu().numpy(), f_untrav.detach().cpu().numpy()
		q_trav.push(t)
		q_untrav.push(u)
		if len(t) >= 2:
			g = t @ t.T
			sim_trav.append((g.sum() - np.trace(g))/(len(t)*(len(t) - 1)))
		if len(t) and len(u):
			sim_cross.append(float((t @ u.T).mean()))

	if skips:
		logger.info("epoch %d skipped terms: %s", epoch + 1, dict(skips))
	row = {f"loss_{k}": sums[f"loss_{k}"]/max(n_steps, 1) for k in ("total", "contrast", "cluster", "unlabel")}
	row["lambda"] = lam
	row["sim_trav"] = float(np.mean(sim_trav)) if sim_trav else float("nan")
	row["sim_cross"] = float(np.mean(sim_cross)) if sim_cross else float("nan")
	row["separation"] = row["sim_trav"] - row["sim_cross"]
	row.update({f"skip_{k}": v for k, v in skips.items()})
	return row
