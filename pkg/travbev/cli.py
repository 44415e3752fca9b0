"""Command-line entry point: one subcommand per pipeline stage.

	travbev synth     OUT                       synthetic sequence
	travbev bev       DATA [--out DIR]          colored BEV grids   (DATA/bev)
	travbev autolabel DATA [--out DIR]          label masks         (DATA/labels)
	travbev train     DATA... --out CKPT        checkpoint, metrics CSV, trained queue
	travbev infer     DATA --checkpoint CKPT    traversability maps (DATA/maps)
	travbev eval      PRED GT [--out DIR]       metrics report
	travbev bench     DATA --checkpoint CKPT    per-stage latency percentiles
"""
from __future__ import annotations
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from travbev import __version__
from travbev.config import Defaults, load_config
from travbev.core.errors import ConfigurationError, DataIOError, TravbevError
from travbev.core.geometry import CameraModel, WheelFootprint
from travbev.core.io import (
	SequencePaths,
	frame_name,
	load_camera,
	load_cloud,
	load_footprint,
	load_poses,
	load_rgb,
)
from travbev.pipeline.autolabel import ObstacleMask, build_label_mask, footprint_cell_array, save_label_mask
from travbev.pipeline.bev import AccumulatorState, BevGrid, GridSpec, load_bev, save_bev, step
from travbev.pipeline.evaluation import evaluate, load_pairs, participating_cells, save_report, scored_frames
from travbev.pipeline.learning import (
	Architecture,
	FrameDataset,
	ModelParams,
	checkpoint,
	fit,
	init_params,
	save_history,
	trained_prototypes,
)
from travbev.pipeline.online import STAGES, OnlineEngine, PrototypeQueue, save_traversability
from travbev.synth import export_sequence, generate_scene, load_scene_file, make_camera, simulate_drive

logger = logging.getLogger("travbev")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
NON_NETWORK_BUDGET_MS = 20.0
PERCENTILES = (50, 90, 99)

## ------ Public API ------ ##
def main(argv:Sequence[str]|None=None) -> int:
	parser = build_parser()
	args = parser.parse_args(argv)
	_setup_logging(args.verbose, args.quiet)
	try:
		config = _resolve_config(args)
		args.handler(args, config)
	except TravbevError as e:
		logger.error("%s: %s", e.category, e)
		return e.exit_code
	except Exception:
		logger.exception("Unexpected failure")
		return 1
	return 0

def build_parser() -> argparse.ArgumentParser:
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--config", type=Path, help="JSON config with per-module sections")
	common.add_argument("--seed", type=int, help="seed for model init, training, online sampling and synthesis")
	common.add_argument("--desk-scale", action="store_true", help="small hierarchy and short schedule preset")
	verbosity = common.add_mutually_exclusive_group()
	verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
	verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

	parser = argparse.ArgumentParser(prog="travbev", description="Self-supervised BEV traversability pipeline")
	parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
	sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

	p = sub.add_parser("synth", parents=[common], help="generate a synthetic sequence")
	p.add_argument("out", type=Path, help="output sequence directory")
	p.add_argument("--scene", type=Path, help='JSON file with "scene" and "drive" sections')
	p.add_argument("--season", choices=("spring", "winter"), help="texture palette")
	p.set_defaults(handler=cmd_synth)

	p = sub.add_parser("bev", parents=[common], help="build colored BEV grids from a sequence")
	p.add_argument("data", type=Path, help="sequence directory")
	p.add_argument("--out", type=Path, help="output directory (default DATA/bev)")
	p.set_defaults(handler=cmd_bev)

	p = sub.add_parser("autolabel", parents=[common], help="label BEV cells from the trajectory and obstacle masks")
	p.add_argument("data", type=Path, help="sequence directory")
	p.add_argument("--out", type=Path, help="output directory (default DATA/labels)")
	p.set_defaults(handler=cmd_autolabel)

	p = sub.add_parser("train", parents=[common], help="train the embedding network")
	p.add_argument("data", type=Path, nargs="+", help="sequence directories with bev/ and labels/")
	p.add_argument("--out", type=Path, required=True, help="checkpoint path")
	p.add_argument("--epochs", type=int, help="override train.epochs")
	p.add_argument("--loss-terms", nargs="+", choices=("contrast", "cluster", "unlabel"), help="enabled loss terms")
	p.add_argument("--literal-loss-variants", action="store_true",
		help="negatives-only denominators for both contrastive terms")
	p.set_defaults(handler=cmd_train)

	p = sub.add_parser("infer", parents=[common], help="emit traversability maps with the online queue")
	p.add_argument("data", type=Path, help="sequence directory with bev/")
	p.add_argument("--checkpoint", type=Path, required=True)
	p.add_argument("--out", type=Path, help="output directory (default DATA/maps)")
	queue = p.add_mutually_exclusive_group()
	queue.add_argument("--frozen-queue", type=Path, metavar="QUEUE", help="use this queue without updating it")
	queue.add_argument("--init-queue", type=Path, metavar="QUEUE", help="start the adaptive queue from this file")
	p.set_defaults(handler=cmd_infer)

	p = sub.add_parser("eval", parents=[common], help="score predictions against ground truth")
	p.add_argument("pred", type=Path, help="directory of cost maps or label masks")
	p.add_argument("gt", type=Path, help="directory of ground-truth label masks")
	p.add_argument("--out", type=Path, help="write report.json and curve CSVs here")
	p.add_argument("--bev-dir", type=Path, help="score only cells observed in these BEV grids")
	p.add_argument("--holdout", type=float, help="override eval.holdout_fraction")
	p.add_argument("--plot", action="store_true", help="also write curves.png")
	p.set_defaults(handler=cmd_eval)

	p = sub.add_parser("bench", parents=[common], help="per-stage latency of the online step")
	p.add_argument("data", type=Path, help="sequence directory with bev/")
	p.add_argument("--checkpoint", type=Path, required=True)
	p.add_argument("--frames", type=int, help="limit the number of frames")
	p.set_defaults(handler=cmd_bench)
	return parser

## ------ Subcommands ------ ##
def cmd_synth(args:argparse.Namespace, config:Defaults) -> None:
	scene_spec, drive = load_scene_file(_file(args.scene) if args.scene else None)
	if args.seed is not None:
		scene_spec = replace(scene_spec, seed=args.seed)
		drive = replace(drive, seed=args.seed)
	if args.season is not None:
		scene_spec = replace(scene_spec, texture_season=args.season)
	scene = generate_scene(scene_spec)
	cam = make_camera(drive)
	frames = simulate_drive(scene, drive, GridSpec.from_config(config.bev), cam)
	export_sequence(frames, args.out, cam, _footprint(config), scene_spec, drive)

def cmd_bev(args:argparse.Namespace, config:Defaults) -> None:
	paths = SequencePaths(_directory(args.data))
	out = args.out or paths.bev
	poses = load_poses(paths.poses)
	ids = paths.frame_indices(paths.clouds, ".pts")
	_check_frames(ids, poses, paths.poses)
	cam: CameraModel|None = load_camera(paths.camera) if paths.camera.exists() else None
	state = AccumulatorState(config.bev)
	for i in ids:
		cloud = load_cloud(paths.clouds/f"{frame_name(i)}.pts")
		image = None
		if not cloud.is_colored:
			if cam is None:
				raise DataIOError(f"Clouds are uncolored and there is no camera model: {paths.camera}")
			image = load_rgb(paths.images/f"{frame_name(i)}.png")
		state, bev = step(state, poses[i], cloud, image, cam)
		save_bev(bev, out/f"{frame_name(i)}.png")
	logger.info("Wrote %d BEV grids to %s", len(ids), out)

def cmd_autolabel(args:argparse.Namespace, config:Defaults) -> None:
	paths = SequencePaths(_directory(args.data))
	out = args.out or paths.labels
	poses = load_poses(paths.poses)
	ids = paths.frame_indices(paths.obstacles)
	_check_frames(ids, poses, paths.poses)
	fp = load_footprint(paths.vehicle) if paths.vehicle.exists() else _footprint(config)
	spec = GridSpec.from_config(config.bev)
	unlabeled = []
	for i in ids:
		name = frame_name(i)
		obstacles = ObstacleMask.load(paths.obstacles/f"{name}.png", poses[i].timestamp)
		if obstacles.mask.shape != spec.shape:
			raise ConfigurationError(f"Obstacle mask {obstacles.mask.shape} does not match the {spec.shape} grid")
		cells = footprint_cell_array(poses, fp, poses[i], spec, config.autolabel.horizon)
		mask = build_label_mask(cells, obstacles)
		source = f"bev/{name}.png" if (paths.bev/f"{name}.png").exists() else None
		save_label_mask(mask, out/f"{name}.png", source)
		unlabeled.append(mask.unlabeled_fraction())
	logger.info("Wrote %d label masks to %s (mean unlabeled fraction %.3f)",
		len(ids), out, float(np.mean(unlabeled)) if unlabeled else 0.0)

def cmd_train(args:argparse.Namespace, config:Defaults) -> None:
	roots = [_directory(d) for d in args.data]
	config = config.override("train", epochs=args.epochs,
		loss_terms=tuple(args.loss_terms) if args.loss_terms else None)
	if args.literal_loss_variants:
		config = config.override("train", contrast_variant="literal", proto_variant="literal")
	train = config.train
	dataset = FrameDataset.concat([FrameDataset.from_sequence(r, train.train_fraction) for r in roots])
	h, w = dataset.grid_shape
	params = init_params(Architecture.from_config(config.model, h, w), config.model.seed)
	result = fit(dataset, train, params)

	checkpoint.save(result.params, args.out)
	save_history(result.history, _with_suffix(args.out, ".metrics.csv"))
	queue = PrototypeQueue(train.alpha, train.momentum, config.online.capacity, params.architecture.embedding_dim)
	queue.absorb_all(trained_prototypes(result, train))
	queue.save(_with_suffix(args.out, ".queue"))
	logger.info("Saved checkpoint %s and a %d-prototype queue", args.out, len(queue))

def cmd_infer(args:argparse.Namespace, config:Defaults) -> None:
	paths = SequencePaths(_directory(args.data))
	out = args.out or paths.maps
	poses = load_poses(paths.poses)
	ids = paths.frame_indices(paths.bev)
	_check_frames(ids, poses, paths.poses)
	fp = load_footprint(paths.vehicle) if paths.vehicle.exists() else _footprint(config)
	params = checkpoint.load(_file(args.checkpoint))
	queue_file = args.frozen_queue or args.init_queue
	queue = PrototypeQueue.load(_file(queue_file)) if queue_file else None
	engine = None
	for i in ids:
		bev = load_bev(paths.bev/f"{frame_name(i)}.png")
		if engine is None:
			engine = _engine(params, bev, config, fp, queue, frozen=args.frozen_queue is not None)
		snap = engine.step(bev, poses[i], poses)
		save_traversability(snap.map, out/f"{frame_name(i)}.png")
	if engine is not None:
		engine.queue.save(out/"final.queue")
		logger.info("Wrote %d maps to %s; final queue holds %d prototypes", len(ids), out, len(engine.queue))

def cmd_eval(args:argparse.Namespace, config:Defaults) -> None:
	config = config.override("eval", holdout_fraction=args.holdout)
	pred_dir, gt_dir = _directory(args.pred), _directory(args.gt)
	bev_dir = _directory(args.bev_dir) if args.bev_dir else None
	ids = scored_frames(pred_dir, gt_dir, config.eval.holdout_fraction)
	preds, gts, observed = load_pairs(pred_dir, gt_dir, ids, bev_dir)
	report = evaluate(preds, gts, observed)
	print(report.table())
	if args.out is not None:
		cells = participating_cells(preds, gts, observed)
		path = save_report(report, args.out, cells, plot=args.plot, name=pred_dir.name)
		logger.info("Report written to %s", path)

def cmd_bench(args:argparse.Namespace, config:Defaults) -> None:
	paths = SequencePaths(_directory(args.data))
	poses = load_poses(paths.poses)
	ids = paths.frame_indices(paths.bev)
	_check_frames(ids, poses, paths.poses)
	if args.frames is not None:
		ids = ids[:max(args.frames, 0)]
	if not ids:
		raise DataIOError(f"No BEV frames to benchmark under {paths.bev}")
	fp = load_footprint(paths.vehicle) if paths.vehicle.exists() else _footprint(config)
	params = checkpoint.load(_file(args.checkpoint))
	engine = None
	rows = []
	for i in ids:
		bev = load_bev(paths.bev/f"{frame_name(i)}.png")
		if engine is None:
			engine = _engine(params, bev, config, fp, None)
		rows.append(engine.step(bev, poses[i], poses).timings)
	timings = pd.DataFrame(rows, columns=[*STAGES, "total"])
	timings["update+map"] = timings["update"] + timings["map"]
	table = timings.quantile([p/100 for p in PERCENTILES]).T
	table.columns = [f"p{p}" for p in PERCENTILES]
	print(f"{len(timings)} frames, milliseconds")
	print(table.to_string(float_format=lambda v: f"{v:9.3f}"))
	if table.loc["update+map", "p99"] > NON_NETWORK_BUDGET_MS:
		logger.warning("Prototype update + map p99 is %.1f ms, over the %.0f ms budget",
			table.loc["update+map", "p99"], NON_NETWORK_BUDGET_MS)

## ------ Internal ------ ##
def _setup_logging(verbose:bool, quiet:bool) -> None:
	level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
	logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)

def _resolve_config(args:argparse.Namespace) -> Defaults:
	base = Defaults.desk_scale() if args.desk_scale else Defaults()
	config = load_config(args.config, base)
	if args.seed is not None:
		for section in ("model", "train", "online"):
			config = config.override(section, seed=args.seed)
	return config

def _directory(path:Path) -> Path:
	if not path.is_dir():
		raise DataIOError(f"Directory not found: {path}")
	return path

def _file(path:Path) -> Path:
	if not path.is_file():
		raise DataIOError(f"File not found: {path}")
	return path

def _with_suffix(path:Path, suffix:str) -> Path:
	return path.with_name(path.name + suffix)

def _footprint(config:Defaults) -> WheelFootprint:
	v = config.vehicle
	return WheelFootprint.from_extents(v.front_x, v.rear_x, v.left_y, v.right_y, v.contact_z)

def _check_frames(ids:list[int], poses:list, poses_path:Path) -> None:
	if ids and ids[-1] >= len(poses):
		raise DataIOError(f"Frame {frame_name(ids[-1])} has no pose in {poses_path} ({len(poses)} rows)")

def _engine(params:ModelParams, bev:BevGrid, config:Defaults, fp:WheelFootprint,
		queue:PrototypeQueue|None, frozen:bool=False) -> OnlineEngine:
	arch = params.architecture
	if bev.spec.shape != (arch.input_height, arch.input_width):
		params = params.resized(*bev.spec.shape)
	if queue is not None and queue.dim is not None and queue.dim != arch.embedding_dim:
		raise ConfigurationError(f"Queue holds D={queue.dim} prototypes but the model embeds D={arch.embedding_dim}")
	return OnlineEngine(params, config.online, fp, queue, frozen)
