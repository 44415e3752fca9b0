"""Binary traversability metrics. Positive class = traversable."""
from __future__ import annotations
import logging
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import average_precision_score, confusion_matrix, precision_recall_curve, roc_auc_score

from travbev.core.errors import UndefinedMetricError

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class ThresholdPoint:
	tau_star : float
	f1 : float
	precision : float
	recall : float
	fpr : float
	fnr : float
	tp : int
	fp : int
	tn : int
	fn : int

def _prepare(scores, labels) -> tuple[np.ndarray, np.ndarray]:
	s = np.asarray(scores, dtype=np.float64).reshape(-1)
	y = np.asarray(labels).reshape(-1).astype(bool)
	if len(s) != len(y):
		raise UndefinedMetricError(f"{len(s)} scores but {len(y)} labels")
	if len(s) == 0:
		raise UndefinedMetricError("No samples to score")
	return s, y

## ------ Public API ------ ##
def roc_auc(scores, labels) -> float:
	"""Probability that a random positive outranks a random negative, ties counted 1/2."""
	s, y = _prepare(scores, labels)
	if y.all() or not y.any():
		raise UndefinedMetricError("AUROC needs both positive and negative samples")
	return float(roc_auc_score(y, s))

def average_precision(scores, labels) -> float:
	"""Step-wise area under the precision-recall curve, ties grouped per threshold."""
	s, y = _prepare(scores, labels)
	if not y.any():
		raise UndefinedMetricError("Average precision needs at least one positive sample")
	if y.all():
		logger.warning("Average precision on all-positive labels is trivially 1.0")
		return 1.0
	return float(average_precision_score(y, s))

def confusion_at(scores, labels, tau:float) -> tuple[int, int, int, int]:
	"""(tp, fp, tn, fn) when predicting positive for score >= tau."""
	s, y = _prepare(scores, labels)
	tn, fp, fn, tp = confusion_matrix(y, s >= tau, labels=[False, True]).ravel()
	return int(tp), int(fp), int(tn), int(fn)

def optimal_f1(scores, labels) -> ThresholdPoint:
	"""
	Scan every distinct score as a threshold (positive when score >= tau) and
	return the F1 maximizer. Equal F1 resolves toward the higher threshold.
	"""
	s, y = _prepare(scores, labels)
	if not y.any():
		raise UndefinedMetricError("F1 needs at least one positive sample")
	precision, recall, thresholds = precision_recall_curve(y, s)
	p, r = precision[:len(thresholds)], recall[:len(thresholds)]
	with np.errstate(divide="ignore", invalid="ignore"):
		f1 = np.where(p + r > 0, 2*p*r/(p + r), 0.0)
	best = np.flatnonzero(f1 >= f1.max() - 1e-12)
	tau = float(thresholds[best].max())
	tp, fp, tn, fn = confusion_at(s, y, tau)
	prec = tp/(tp + fp) if tp + fp else 0.0
	rec = tp/(tp + fn)
	f1_star = 2*prec*rec/(prec + rec) if prec + rec else 0.0
	fpr = fp/(fp + tn) if fp + tn else 0.0
	return ThresholdPoint(tau, f1_star, prec, rec, fpr, fn/(fn + tp), tp, fp, tn, fn)
