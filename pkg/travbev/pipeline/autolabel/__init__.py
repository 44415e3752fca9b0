from travbev.pipeline.autolabel.labels import (
	Label,
	LabelMask,
	ObstacleMask,
	build_label_mask,
	cells_to_mask,
	footprint_cell_array,
	footprint_cells,
	load_label_mask,
	save_label_mask,
	trajectory_window,
)

__all__ = [
	"Label",
	"LabelMask",
	"ObstacleMask",
	"build_label_mask",
	"cells_to_mask",
	"footprint_cell_array",
	"footprint_cells",
	"load_label_mask",
	"save_label_mask",
	"trajectory_window",
]
