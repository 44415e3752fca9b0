from __future__ import annotations
import logging
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any

from travbev.core.errors import FormatError
from travbev.core.geometry import CameraModel, WheelFootprint
from travbev.core.io import (
	SequencePaths,
	frame_name,
	load_json,
	save_camera,
	save_cloud,
	save_footprint,
	save_json,
	save_labels,
	save_mask,
	save_poses,
	save_rgb,
)
from travbev.synth.drive import DriveSpec, SyntheticFrame
from travbev.synth.world import SceneSpec

logger = logging.getLogger(__name__)

SCENE_FILE = "scene.json"

## ------ Public API ------ ##
def load_scene_file(path:str|Path|None) -> tuple[SceneSpec, DriveSpec]:
	"""
	Read {"scene": {...}, "drive": {...}}; either section may be omitted.
	None returns the defaults.
	"""
	if path is None:
		return SceneSpec(), DriveSpec()
	raw = load_json(path)
	unknown = set(raw) - {"scene", "drive"}
	if unknown:
		raise FormatError(f"{path}: unknown sections {sorted(unknown)}")
	return _build(SceneSpec, raw.get("scene", {}), path), _build(DriveSpec, raw.get("drive", {}), path)

def export_sequence(frames:list[SyntheticFrame], out_dir:str|Path, cam:CameraModel, footprint:WheelFootprint,
		scene:SceneSpec|None=None, drive:DriveSpec|None=None) -> SequencePaths:
	"""Write frames in the sequence layout read by every pipeline stage."""
	paths = SequencePaths(Path(out_dir))
	save_poses([f.pose for f in frames], paths.poses)
	save_camera(cam, paths.camera)
	save_footprint(footprint, paths.vehicle)
	for i, frame in enumerate(frames):
		name = frame_name(i)
		save_cloud(frame.cloud, paths.clouds/f"{name}.pts")
		save_rgb(frame.image, paths.images/f"{name}.png")
		save_mask(frame.obstacles, paths.obstacles/f"{name}.png")
		save_labels(frame.gt, paths.gt/f"{name}.png")
	if scene is not None or drive is not None:
		meta: dict[str, Any] = {}
		if scene is not None:
			meta["scene"] = asdict(scene)
		if drive is not None:
			meta["drive"] = asdict(drive)
		save_json(meta, paths.root/SCENE_FILE)
	logger.info("Wrote %d synthetic frames to %s", len(frames), paths.root)
	return paths

## ------ Internal ------ ##
def _build(cls, values:Any, path:str|Path):
	if not isinstance(values, dict):
		raise FormatError(f"{path}: section for {cls.__name__} must be an object")
	known = {f.name for f in fields(cls)}
	unknown = set(values) - known
	if unknown:
		raise FormatError(f"{path}: unknown {cls.__name__} fields {sorted(unknown)}")
	return cls(**values)
