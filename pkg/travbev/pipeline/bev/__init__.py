from travbev.pipeline.bev.grid import (
	BevGrid,
	GridSpec,
	load_bev,
	occupancy_path,
	rasterize,
	save_bev,
	world_to_cell,
)
from travbev.pipeline.bev.accumulator import AccumulatorState, step

__all__ = [
	"AccumulatorState",
	"BevGrid",
	"GridSpec",
	"load_bev",
	"occupancy_path",
	"rasterize",
	"save_bev",
	"step",
	"world_to_cell",
]
