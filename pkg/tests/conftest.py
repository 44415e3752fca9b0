from __future__ import annotations
import json
import logging
from pathlib import Path

import numpy as np
import pytest

from travbev.cli import main
from travbev.core.geometry import CameraModel, PointCloud, Pose, WheelFootprint
from travbev.pipeline.bev import BevGrid, GridSpec
from travbev.pipeline.learning import Architecture, init_params
from travbev.synth import DriveSpec, SceneSpec, generate_scene, make_camera, simulate_drive

# Small pipeline settings shared by the CLI and synthetic-data tests
TINY_CONFIG = {
	"bev": {"width_cells": 48, "height_cells": 48, "resolution": 0.5, "window_frames": 10, "max_range": 20.0},
	"model": {"widths": [4, 8], "embedding_dim": 4},
	"train": {
		"epochs": 2, "batch_size": 2, "samples_per_class": 32, "cluster_sizes": [2, 4],
		"queue_capacity": 256, "lambda_ramp_epochs": 1, "learning_rate": 0.01,
	},
	"online": {"samples_per_frame": 16},
	"eval": {"holdout_fraction": 0.6},
}

TINY_SCENE = {
	"scene": {"length": 60.0, "width": 30.0, "resolution": 0.2, "road_width": 5.0, "obstacle_count": 30,
		"obstacle_radius": [0.6, 1.2], "seed": 3},
	"drive": {"speed": 4.0, "frame_rate": 5.0, "duration": 2.0, "start": 10.0, "max_range": 10.0,
		"point_density": 3.0, "pixel_size": 0.2},
}

def run_cli(*argv) -> int:
	"""main() with the root logger restored afterwards."""
	root = logging.getLogger()
	handlers, level = root.handlers[:], root.level
	try:
		return main([str(a) for a in argv])
	finally:
		root.handlers[:] = handlers
		root.setLevel(level)

def random_bev(spec:GridSpec, rng:np.random.Generator, occupied:float=1.0) -> BevGrid:
	occupancy = rng.random(spec.shape) < occupied
	channels = rng.integers(1, 256, size=(*spec.shape, 3), dtype=np.uint8)
	channels[~occupancy] = 0
	return BevGrid(spec, channels, occupancy)

def colored_cloud(points, color=(200, 100, 50)) -> PointCloud:
	pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
	return PointCloud(pts, np.tile(np.asarray(color, np.uint8), (len(pts), 1)))

@pytest.fixture
def rng() -> np.random.Generator:
	return np.random.default_rng(1234)

@pytest.fixture
def small_grid() -> GridSpec:
	return GridSpec(40, 40, 0.5)

@pytest.fixture
def pinhole() -> CameraModel:
	"""100x100 camera looking along +z of the LiDAR frame."""
	return CameraModel(100.0, 100.0, 50.0, 50.0, 100, 100)

@pytest.fixture
def footprint() -> WheelFootprint:
	return WheelFootprint.from_extents(1.0, -1.0, 0.5, -0.5)

@pytest.fixture
def tiny_arch() -> Architecture:
	return Architecture(widths=(4, 8), embedding_dim=4, input_height=16, input_width=16)

@pytest.fixture
def tiny_params(tiny_arch):
	return init_params(tiny_arch, seed=0)

@pytest.fixture
def straight_trajectory() -> list[Pose]:
	"""Vehicle driving +x at 1 m/s, one pose per second from t=-3 to t=3."""
	return [Pose.from_yaw(0.0, (float(t), 0.0, 0.0), float(t)) for t in range(-3, 4)]

@pytest.fixture
def tiny_config_file(tmp_path:Path) -> Path:
	path = tmp_path/"config.json"
	path.write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
	return path

@pytest.fixture
def tiny_scene_file(tmp_path:Path) -> Path:
	path = tmp_path/"scene.json"
	path.write_text(json.dumps(TINY_SCENE), encoding="utf-8")
	return path

@pytest.fixture(scope="session")
def synthetic_run():
	"""(scene, drive, grid, camera, frames) of a short noise-free drive."""
	scene = generate_scene(SceneSpec(**{**TINY_SCENE["scene"], "obstacle_radius": (0.6, 1.2)}))
	drive = DriveSpec(**TINY_SCENE["drive"])
	grid = GridSpec(48, 48, 0.5)
	cam = make_camera(drive)
	return scene, drive, grid, cam, simulate_drive(scene, drive, grid, cam)
