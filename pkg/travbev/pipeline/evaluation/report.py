from __future__ import annotations
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from matplotlib.backends.backend_agg import FigureCanvasAgg
from sklearn.metrics import precision_recall_curve, roc_curve

from travbev.core.errors import ConfigurationError, DataIOError, UndefinedMetricError
from travbev.core.utils import str2color
from travbev.pipeline.autolabel import Label, LabelMask
from travbev.pipeline.evaluation.metrics import average_precision, optimal_f1, roc_auc
from travbev.pipeline.online import TraversabilityMap

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class EvalReport:
	auroc : float
	ap : float
	f1 : float
	precision : float
	recall : float
	fpr : float
	fnr : float
	tau_star : float
	n_positive : int
	n_negative : int
	n_frames : int
	## --- Per-frame means over frames containing both classes --- ##
	macro_auroc : float = float("nan")
	macro_ap : float = float("nan")
	macro_f1 : float = float("nan")
	macro_frames : int = 0

	def to_dict(self) -> dict:
		return asdict(self)

	def table(self) -> str:
		rows = [
			("AUROC", self.auroc), ("AP", self.ap), ("F1", self.f1), ("Precision", self.precision),
			("Recall", self.recall), ("FPR", self.fpr), ("FNR", self.fnr), ("tau*", self.tau_star),
		]
		lines = [f"{'metric':<10} {'pooled':>9} {'macro':>9}"]
		macro = {"AUROC": self.macro_auroc, "AP": self.macro_ap, "F1": self.macro_f1}
		for name, value in rows:
			m = macro.get(name)
			lines.append(f"{name:<10} {value:>9.4f} {'' if m is None else f'{m:>9.4f}'}")
		lines.append(f"cells: {self.n_positive} traversable, {self.n_negative} untraversable "
			f"over {self.n_frames} frames ({self.macro_frames} in macro)")
		return "\n".join(lines)

@dataclass(frozen=True, eq=False)
class Participants:
	"""Scores and binary labels of the cells that take part in scoring."""
	scores : np.ndarray
	labels : np.ndarray
	frame : np.ndarray # frame index of each cell

## ------ Public API ------ ##
def participating_cells(maps:Sequence[TraversabilityMap|np.ndarray], gts:Sequence[LabelMask],
		observed:Sequence[np.ndarray]|None=None) -> Participants:
	"""Cells labeled traversable or untraversable in the ground truth (and observed, if given)."""
	if len(maps) != len(gts):
		raise ConfigurationError(f"{len(maps)} maps but {len(gts)} ground-truth masks")
	if observed is not None and len(observed) != len(maps):
		raise ConfigurationError(f"{len(observed)} occupancy masks for {len(maps)} maps")
	scores, labels, frames = [], [], []
	for i, (tmap, gt) in enumerate(zip(maps, gts)):
		values = np.asarray(getattr(tmap, "values", tmap), dtype=np.float64)
		if values.shape != gt.shape:
			raise ConfigurationError(f"Frame {i}: map {values.shape} does not match ground truth {gt.shape}")
		keep = gt.labels != Label.UNLABELED
		if observed is not None:
			keep &= np.asarray(observed[i], dtype=bool)
		scores.append(values[keep])
		labels.append(gt.labels[keep] == Label.TRAVERSABLE)
		frames.append(np.full(int(keep.sum()), i))
	if not scores:
		return Participants(np.zeros(0), np.zeros(0, bool), np.zeros(0, int))
	return Participants(np.concatenate(scores), np.concatenate(labels), np.concatenate(frames))

def evaluate(maps:Sequence[TraversabilityMap|np.ndarray], gts:Sequence[LabelMask],
		observed:Sequence[np.ndarray]|None=None) -> EvalReport:
	"""Metrics pooled over all participating cells of all frames, plus per-frame means."""
	cells = participating_cells(maps, gts, observed)
	if len(cells.scores) == 0:
		raise UndefinedMetricError("No ground-truth labeled cells to evaluate")
	point = optimal_f1(cells.scores, cells.labels)
	macro = _macro(cells)
	return EvalReport(
		auroc=roc_auc(cells.scores, cells.labels),
		ap=average_precision(cells.scores, cells.labels),
		f1=point.f1, precision=point.precision, recall=point.recall,
		fpr=point.fpr, fnr=point.fnr, tau_star=point.tau_star,
		n_positive=int(cells.labels.sum()), n_negative=int((~cells.labels).sum()), n_frames=len(maps),
		**macro,
	)

def curves(cells:Participants) -> tuple[pd.DataFrame, pd.DataFrame]:
	"""ROC (fpr, tpr, threshold) and PR (recall, precision, threshold) tables."""
	fpr, tpr, roc_thr = roc_curve(cells.labels, cells.scores, drop_intermediate=False)
	precision, recall, pr_thr = precision_recall_curve(cells.labels, cells.scores)
	roc = pd.DataFrame({"fpr": fpr, "tpr": tpr, "threshold": roc_thr})
	pr = pd.DataFrame({"recall": recall, "precision": precision, "threshold": np.r_[pr_thr, np.nan]})
	return roc, pr

def save_report(report:EvalReport, out_dir:str|Path, cells:Participants|None=None,
		plot:bool=False, name:str="run") -> Path:
	"""report.json, plus roc.csv / pr.csv (and curves.png with plot) when cells are given."""
	out = Path(out_dir)
	try:
		out.mkdir(parents=True, exist_ok=True)
		path = out/"report.json"
		path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
		if cells is not None:
			roc, pr = curves(cells)
			roc.to_csv(out/"roc.csv", index=False)
			pr.to_csv(out/"pr.csv", index=False)
			if plot:
				plot_curves(roc, pr, report, name).savefig(out/"curves.png")
	except OSError as e:
		raise DataIOError(f"Failed to write report to {out}: {e}") from e
	return path

def plot_curves(roc:pd.DataFrame, pr:pd.DataFrame, report:EvalReport, name:str="run") -> Figure:
	fig = Figure(figsize=(8, 4), dpi=120)
	FigureCanvasAgg(fig)
	color = str2color(name)
	ax_roc, ax_pr = fig.subplots(1, 2)
	ax_roc.plot(roc["fpr"], roc["tpr"], color=color, label=f"{name} (AUROC {report.auroc:.3f})")
	ax_roc.plot([0, 1], [0, 1], color="gray", linestyle="--", linewidth=0.8)
	ax_roc.set_xlabel("False positive rate")
	ax_roc.set_ylabel("True positive rate")
	ax_pr.step(pr["recall"], pr["precision"], where="post", color=color, label=f"{name} (AP {report.ap:.3f})")
	ax_pr.set_xlabel("Recall")
	ax_pr.set_ylabel("Precision")
	for ax in (ax_roc, ax_pr):
		ax.set_xlim(0, 1)
		ax.set_ylim(0, 1.02)
		ax.legend(loc="lower right", fontsize="small")
	fig.tight_layout()
	return fig

## ------ Internal ------ ##
def _macro(cells:Participants) -> dict:
	aurocs, aps, f1s = [], [], []
	for i in np.unique(cells.frame):
		sel = cells.frame == i
		y = cells.labels[sel]
		if y.all() or not y.any():
			continue
		s = cells.scores[sel]
		aurocs.append(roc_auc(s, y))
		aps.append(average_precision(s, y))
		f1s.append(optimal_f1(s, y).f1)
	if not aurocs:
		return {"macro_frames": 0}
	return {"macro_auroc": float(np.mean(aurocs)), "macro_ap": float(np.mean(aps)),
		"macro_f1": float(np.mean(f1s)), "macro_frames": len(aurocs)}
