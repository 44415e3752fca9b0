from __future__ import annotations
import json

import numpy as np
import pytest

from travbev.config import VehicleConfig
from travbev.core.errors import ConfigurationError, FormatError
from travbev.core.geometry import WheelFootprint, apply_transform, colorize_cloud
from travbev.core.io import load_labels, load_poses
from travbev.pipeline.autolabel import Label, footprint_cell_array
from travbev.pipeline.bev import GridSpec
from travbev.synth import (
	PALETTES,
	TRAVERSABLE_CLASSES,
	DriveSpec,
	SceneSpec,
	Terrain,
	export_sequence,
	generate_scene,
	load_scene_file,
	make_camera,
	simulate_drive,
)

from conftest import TINY_SCENE

def _tiny_scene_spec(**changes) -> SceneSpec:
	return SceneSpec(**{**TINY_SCENE["scene"], **changes})

def _vehicle_footprint() -> WheelFootprint:
	v = VehicleConfig()
	return WheelFootprint.from_extents(v.front_x, v.rear_x, v.left_y, v.right_y, v.contact_z)

class TestScene:
	def test_deterministic(self):
		a, b = generate_scene(_tiny_scene_spec()), generate_scene(_tiny_scene_spec())
		np.testing.assert_array_equal(a.class_map, b.class_map)
		np.testing.assert_array_equal(a.color_map, b.color_map)
		assert a.obstacles == b.obstacles

	def test_seed_argument_overrides_spec(self):
		a = generate_scene(_tiny_scene_spec(), seed=10)
		b = generate_scene(_tiny_scene_spec(seed=10))
		np.testing.assert_array_equal(a.class_map, b.class_map)

	def test_empty_scene_is_uniform(self):
		scene = generate_scene(SceneSpec(length=20.0, width=10.0, resolution=0.5, road_width=0.0, obstacle_count=0))
		assert scene.class_map.shape == (40, 20)
		assert np.all(scene.class_map == Terrain.GRASS)

	def test_obstacle_fraction_near_expected(self):
		spec = SceneSpec(length=80.0, width=40.0, resolution=0.2, road_width=4.0, obstacle_count=20,
			obstacle_radius=(0.6, 1.2))
		observed = np.mean([generate_scene(spec, seed=s).obstacle_fraction() for s in range(10)])
		assert observed == pytest.approx(spec.expected_obstacle_fraction(), rel=0.2)

	def test_seasons_share_layout(self):
		spring = generate_scene(_tiny_scene_spec(texture_season="spring"))
		winter = generate_scene(_tiny_scene_spec(texture_season="winter"))
		np.testing.assert_array_equal(spring.class_map, winter.class_map)
		assert not np.array_equal(spring.color_map, winter.color_map)

	def test_obstacles_clear_the_road(self):
		scene = generate_scene(_tiny_scene_spec())
		spec = scene.spec
		assert len(scene.obstacles) > 0
		for ob in scene.obstacles:
			gap = np.min(np.hypot(scene.centerline[:, 0] - ob.x, scene.centerline[:, 1] - ob.y))
			assert gap >= spec.road_width/2 + spec.corridor_clearance + ob.radius

	def test_obstacles_clear_the_path(self):
		scene = generate_scene(_tiny_scene_spec())
		for ob in scene.obstacles:
			gap = np.min(np.hypot(scene.path[:, 0] - ob.x, scene.path[:, 1] - ob.y))
			assert gap >= scene.spec.path_clearance + ob.radius

	def test_path_swings_off_the_road(self):
		scene = generate_scene(_tiny_scene_spec())
		lateral = np.abs(scene.path[:, 1] - scene.centerline[:, 1])
		assert np.mean(lateral > scene.spec.road_width/2) > 0.5
		assert lateral.max() <= scene.spec.path_wander + 1e-9

	def test_zero_wander_drives_the_centerline(self):
		scene = generate_scene(_tiny_scene_spec(path_wander=0.0))
		np.testing.assert_allclose(scene.path, scene.centerline)
		s = np.linspace(0.0, scene.arc_length[-1], 17)
		for a, b in zip(scene.point_on_path(s), scene.point_on_road(s)):
			np.testing.assert_allclose(a, b)

	def test_outside_world_is_unknown(self):
		scene = generate_scene(_tiny_scene_spec())
		assert scene.classes_at(np.array([[-1.0, 0.0], [10.0, 100.0]])).tolist() == [-1, -1]

	@pytest.mark.parametrize("changes", [
		{"texture_season": "autumn"},
		{"obstacle_radius": (1.0, 0.5)},
		{"resolution": 0.0},
		{"path_wavelength": 0.0},
	])
	def test_invalid_spec(self, changes):
		with pytest.raises(ConfigurationError):
			_tiny_scene_spec(**changes)

class TestDrive:
	def test_frame_count_and_times(self, synthetic_run):
		_, drive, _, _, frames = synthetic_run
		assert len(frames) == drive.n_frames == 10
		np.testing.assert_allclose([f.timestamp for f in frames], np.arange(10)/drive.frame_rate)

	def test_poses_stay_on_traversable_terrain(self, synthetic_run):
		scene, _, _, _, frames = synthetic_run
		xy = np.array([f.true_pose.translation[:2] for f in frames])
		assert set(scene.classes_at(xy).tolist()) <= {int(c) for c in TRAVERSABLE_CLASSES}

	def test_vehicle_moves_at_speed(self, synthetic_run):
		_, drive, _, _, frames = synthetic_run
		steps = np.hypot(*np.diff([f.true_pose.translation[:2] for f in frames], axis=0).T)
		np.testing.assert_allclose(steps, drive.speed/drive.frame_rate, rtol=0.05)

	def test_standing_still(self):
		scene = generate_scene(_tiny_scene_spec())
		drive = DriveSpec(**{**TINY_SCENE["drive"], "speed": 0.0, "duration": 0.6})
		frames = simulate_drive(scene, drive, GridSpec(20, 20, 0.5))
		for f in frames[1:]:
			np.testing.assert_allclose(f.true_pose.translation, frames[0].true_pose.translation)

	def test_clouds_are_raw_and_in_range(self, synthetic_run):
		_, drive, _, _, frames = synthetic_run
		for f in frames:
			assert not f.cloud.is_colored
			assert np.all(np.hypot(f.cloud.points[:, 0], f.cloud.points[:, 1]) <= drive.max_range + 1e-9)

	def test_masks_agree(self, synthetic_run):
		_, _, grid, _, frames = synthetic_run
		for f in frames:
			assert f.obstacles.shape == f.gt.shape == grid.shape
			assert np.all(f.gt[f.obstacles] == Label.UNTRAVERSABLE)

	def test_ground_colors_match_palette(self):
		scene = generate_scene(_tiny_scene_spec(texture_amplitude=0.0, texture_noise=0.0))
		drive = DriveSpec(**{**TINY_SCENE["drive"], "duration": 0.4})
		cam = make_camera(drive)
		frame = simulate_drive(scene, drive, GridSpec(20, 20, 0.5), cam)[0]
		ground = frame.cloud.subset(frame.cloud.points[:, 2] == 0.0)
		colored = colorize_cloud(ground, frame.image, cam)
		assert len(colored) == len(ground)
		world = apply_transform(frame.true_pose.matrix(), colored.points)
		palette = np.array([PALETTES["spring"][t] for t in Terrain])
		expected = palette[scene.classes_at(world[:, :2])]
		assert np.mean(np.all(colored.colors == expected, axis=1)) >= 0.95

	def test_pose_noise_only_touches_logged_pose(self):
		scene = generate_scene(_tiny_scene_spec())
		drive = DriveSpec(**{**TINY_SCENE["drive"], "duration": 0.6, "pose_noise_std": 0.5, "yaw_noise_std": 0.05})
		frames = simulate_drive(scene, drive, GridSpec(20, 20, 0.5))
		offsets = [np.linalg.norm(f.pose.translation - f.true_pose.translation) for f in frames]
		assert all(o > 0 for o in offsets)
		assert all(f.pose.translation[2] == f.true_pose.translation[2] for f in frames)

	def test_trajectory_labels_fall_on_traversable_ground(self, synthetic_run):
		_, _, grid, _, frames = synthetic_run
		trajectory = [f.true_pose for f in frames]
		hits = []
		for f in frames:
			cells = footprint_cell_array(trajectory, _vehicle_footprint(), f.true_pose, grid, 10.0)
			hits.append(f.gt[cells[:, 0], cells[:, 1]] == Label.TRAVERSABLE)
		assert np.mean(np.concatenate(hits)) >= 0.99

class TestExport:
	def test_sequence_layout(self, tmp_path, synthetic_run):
		scene, drive, _, cam, frames = synthetic_run
		paths = export_sequence(frames, tmp_path/"seq", cam, _vehicle_footprint(), scene.spec, drive)
		assert len(load_poses(paths.poses)) == len(frames)
		for sub, suffix in ((paths.clouds, ".pts"), (paths.images, ".png"), (paths.obstacles, ".png"), (paths.gt, ".png")):
			assert paths.frame_indices(sub, suffix) == list(range(len(frames)))
		np.testing.assert_array_equal(load_labels(paths.gt/"000003.png"), frames[3].gt)
		assert load_scene_file(paths.root/"scene.json") == (scene.spec, drive)

	def test_scene_file_defaults(self):
		assert load_scene_file(None) == (SceneSpec(), DriveSpec())

	def test_scene_file_partial(self, tmp_path):
		(tmp_path/"s.json").write_text(json.dumps({"drive": {"speed": 2.0}}))
		scene, drive = load_scene_file(tmp_path/"s.json")
		assert scene == SceneSpec() and drive.speed == 2.0

	@pytest.mark.parametrize("content", [{"world": {}}, {"scene": {"colour": 1}}, {"drive": [1, 2]}])
	def test_scene_file_errors(self, tmp_path, content):
		(tmp_path/"s.json").write_text(json.dumps(content))
		with pytest.raises(FormatError):
			load_scene_file(tmp_path/"s.json")
