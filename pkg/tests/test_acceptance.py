"""
Desk-scale runs of the whole chain on default synthetic scenes:
synth, bev, autolabel, train, infer and eval through the CLI.
"""
from __future__ import annotations
import json
from pathlib import Path

import numpy as np
import pytest

from travbev.config import LOSS_TERMS
from travbev.pipeline.autolabel import load_label_mask
from travbev.pipeline.online import PrototypeQueue

from conftest import run_cli as run

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)
WINTER_SEED_OFFSET = 100 # winter scenes use other layouts than the training scenes

class Workspace:
	"""Sequences, checkpoints and reports built on demand and reused across tests."""

	def __init__(self, root:Path):
		self.root = root

	def sequence(self, seed:int, season:str="spring") -> Path:
		seq = self.root/f"{season}-{seed}"
		if not (seq/"labels").is_dir():
			assert run("synth", seq, "--season", season, "--seed", seed, "--desk-scale", "-q") == 0
			assert run("bev", seq, "--desk-scale", "-q") == 0
			assert run("autolabel", seq, "--desk-scale", "-q") == 0
		return seq

	def checkpoint(self, seed:int, terms:tuple[str, ...]=LOSS_TERMS) -> Path:
		ckpt = self.root/"models"/f"{'+'.join(terms)}-{seed}.ckpt"
		if not ckpt.is_file():
			extra = () if terms == LOSS_TERMS else ("--loss-terms", *terms)
			assert run("train", self.sequence(seed), "--out", ckpt, "--seed", seed, "--desk-scale", *extra, "-q") == 0
		return ckpt

	def report(self, seq:Path, ckpt:Path, tag:str, frozen:bool=False) -> dict:
		maps, out = self.root/"maps"/tag, self.root/"eval"/tag
		queue_flag = "--frozen-queue" if frozen else "--init-queue"
		assert run("infer", seq, "--checkpoint", ckpt, queue_flag, Path(f"{ckpt}.queue"), "--out", maps,
			"--desk-scale", "-q") == 0
		assert run("eval", maps, seq/"gt", "--bev-dir", seq/"bev", "--out", out, "--desk-scale", "-q") == 0
		return json.loads((out/"report.json").read_text())

@pytest.fixture(scope="module")
def workspace(tmp_path_factory) -> Workspace:
	return Workspace(tmp_path_factory.mktemp("acceptance"))

def test_scene_has_both_classes(workspace):
	seq = workspace.sequence(0)
	mask = load_label_mask(seq/"labels"/"000025.png")
	assert mask.traversable.sum() > 0
	assert mask.untraversable.sum() > 0.03*mask.labels.size

def test_learns_held_out_frames(workspace):
	seq = workspace.sequence(0)
	report = workspace.report(seq, workspace.checkpoint(0), "full-0")
	assert report["n_negative"] > 0.03*(report["n_positive"] + report["n_negative"])
	assert report["auroc"] >= 0.90
	assert report["f1"] >= 0.85
	assert report["tau_star"] > 0.0

def test_exported_queue_holds_several_prototypes(workspace):
	queue = PrototypeQueue.load(f"{workspace.checkpoint(0)}.queue")
	assert len(queue) > 1

def test_same_seed_same_report(workspace, tmp_path_factory):
	first = workspace.root/"eval"/"full-0"/"report.json"
	if not first.is_file():
		workspace.report(workspace.sequence(0), workspace.checkpoint(0), "full-0")
	again = Workspace(tmp_path_factory.mktemp("acceptance-again"))
	again.report(again.sequence(0), again.checkpoint(0), "full-0")
	assert (again.root/"eval"/"full-0"/"report.json").read_bytes() == first.read_bytes()

def test_adaptive_queue_beats_frozen_across_seasons(workspace):
	gains = []
	for seed in SEEDS:
		ckpt = workspace.checkpoint(seed)
		winter = workspace.sequence(seed + WINTER_SEED_OFFSET, "winter")
		frozen = workspace.report(winter, ckpt, f"winter-frozen-{seed}", frozen=True)
		adaptive = workspace.report(winter, ckpt, f"winter-adaptive-{seed}")
		gains.append(adaptive["auroc"] - frozen["auroc"])
	assert np.mean(gains) >= 0.01

def test_loss_combinations(workspace):
	auroc = {}
	for terms in (LOSS_TERMS, ("contrast",), ("cluster", "unlabel")):
		name = "+".join(terms)
		auroc[name] = np.mean([
			workspace.report(workspace.sequence(seed), workspace.checkpoint(seed, terms), f"{name}-{seed}")["auroc"]
			for seed in SEEDS
		])
	full, contrast, unlabeled = auroc["+".join(LOSS_TERMS)], auroc["contrast"], auroc["cluster+unlabel"]
	assert full >= contrast - 0.005
	assert unlabeled < min(full, contrast)
