from travbev.synth.world import (
	PALETTES,
	SEASONS,
	TRAVERSABLE_CLASSES,
	Obstacle,
	Scene,
	SceneSpec,
	Terrain,
	generate_scene,
)
from travbev.synth.drive import DriveSpec, SyntheticFrame, make_camera, simulate_drive
from travbev.synth.export import export_sequence, load_scene_file

__all__ = [
	"DriveSpec",
	"Obstacle",
	"PALETTES",
	"SEASONS",
	"Scene",
	"SceneSpec",
	"SyntheticFrame",
	"TRAVERSABLE_CLASSES",
	"Terrain",
	"export_sequence",
	"generate_scene",
	"load_scene_file",
	"make_camera",
	"simulate_drive",
]
