from travbev.pipeline.evaluation.metrics import (
	ThresholdPoint,
	average_precision,
	confusion_at,
	optimal_f1,
	roc_auc,
)
from travbev.pipeline.evaluation.report import (
	EvalReport,
	Participants,
	curves,
	evaluate,
	participating_cells,
	plot_curves,
	save_report,
)
from travbev.pipeline.evaluation.sources import load_pairs, load_prediction, scored_frames

__all__ = [
	"EvalReport",
	"Participants",
	"ThresholdPoint",
	"average_precision",
	"confusion_at",
	"curves",
	"evaluate",
	"load_pairs",
	"load_prediction",
	"optimal_f1",
	"participating_cells",
	"plot_curves",
	"roc_auc",
	"save_report",
	"scored_frames",
]
