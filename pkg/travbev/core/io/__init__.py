from .io import (
	SequencePaths,
	frame_name,
	load_poses, save_poses,
	load_cloud, save_cloud,
	load_json, save_json,
	load_camera, save_camera,
	load_footprint, save_footprint,
	sidecar_path,
	load_rgb, save_rgb,
	load_mask, save_mask,
	load_labels, save_labels,
	load_cost, save_cost,
	load_vector_block, save_vector_block,
)
