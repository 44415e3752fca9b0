from __future__ import annotations
import json
from pathlib import Path

import numpy as np
import pytest

from travbev.cli import main
from travbev.config import ModelConfig
from travbev.pipeline.learning import Architecture, checkpoint, init_params
from travbev.pipeline.online import PrototypeQueue

from conftest import TINY_CONFIG, TINY_SCENE, run_cli as run

@pytest.fixture(scope="module")
def labeled_sequence(tmp_path_factory) -> tuple[Path, Path]:
	"""A synthetic sequence with BEV grids and label masks, plus its config file."""
	base = tmp_path_factory.mktemp("cli")
	config = base/"config.json"
	config.write_text(json.dumps(TINY_CONFIG), encoding="utf-8")
	scene = base/"scene.json"
	scene.write_text(json.dumps(TINY_SCENE), encoding="utf-8")
	seq = base/"seq"
	assert run("synth", seq, "--scene", scene, "--config", config, "-q") == 0
	assert run("bev", seq, "--config", config, "-q") == 0
	assert run("autolabel", seq, "--config", config, "-q") == 0
	return seq, config

def _pngs(directory:Path) -> list[str]:
	return sorted(p.name for p in directory.glob("[0-9]*.png") if p.stem.isdigit())

class TestStages:
	def test_synth_layout(self, labeled_sequence):
		seq, _ = labeled_sequence
		for name in ("poses.csv", "camera.json", "vehicle.json", "scene.json"):
			assert (seq/name).is_file()
		assert len(_pngs(seq/"gt")) == 10

	def test_bev_and_labels_cover_every_frame(self, labeled_sequence):
		seq, _ = labeled_sequence
		frames = _pngs(seq/"images")
		assert _pngs(seq/"bev") == frames
		assert _pngs(seq/"labels") == frames
		assert (seq/"bev"/"000000_occ.png").is_file()
		meta = json.loads((seq/"labels"/"000004.json").read_text())
		assert meta["source_bev"] == "bev/000004.png"

	def test_eval_ground_truth_against_itself(self, labeled_sequence, tmp_path, capsys):
		seq, config = labeled_sequence
		assert run("eval", seq/"gt", seq/"gt", "--config", config, "--holdout", 0, "--out", tmp_path, "-q") == 0
		report = json.loads((tmp_path/"report.json").read_text())
		assert report["auroc"] == 1.0 and report["f1"] == 1.0
		assert report["n_frames"] == 10
		assert "AUROC" in capsys.readouterr().out

	def test_seed_flag_reaches_the_scene(self, tmp_path, tiny_scene_file, tiny_config_file):
		assert run("synth", tmp_path/"a", "--scene", tiny_scene_file, "--config", tiny_config_file,
			"--seed", 5, "-q") == 0
		meta = json.loads((tmp_path/"a"/"scene.json").read_text())
		assert meta["scene"]["seed"] == 5 and meta["drive"]["seed"] == 5

	def test_train_without_epochs_keeps_initialization(self, labeled_sequence, tmp_path):
		seq, config = labeled_sequence
		ckpt = tmp_path/"model.ckpt"
		assert run("train", seq, "--out", ckpt, "--config", config, "--epochs", 0, "-q") == 0
		model = ModelConfig(embedding_dim=4, widths=(4, 8))
		expected = init_params(Architecture.from_config(model, 48, 48), model.seed)
		np.testing.assert_array_equal(checkpoint.load(ckpt).flat(), expected.flat())
		assert (tmp_path/"model.ckpt.metrics.csv").is_file()
		assert len(PrototypeQueue.load(tmp_path/"model.ckpt.queue")) == 0

	def test_infer_with_frozen_queue(self, labeled_sequence, tmp_path):
		seq, config = labeled_sequence
		ckpt = tmp_path/"model.ckpt"
		checkpoint.save(init_params(Architecture(widths=(4, 8), embedding_dim=4, input_height=48, input_width=48)), ckpt)
		queue = PrototypeQueue(dim=4)
		queue.absorb([1.0, 0.0, 0.0, 0.0])
		queue.save(tmp_path/"q.bin")
		out = tmp_path/"maps"
		assert run("infer", seq, "--checkpoint", ckpt, "--frozen-queue", tmp_path/"q.bin", "--out", out,
			"--config", config, "-q") == 0
		assert _pngs(out) == _pngs(seq/"bev")
		final = PrototypeQueue.load(out/"final.queue")
		assert len(final) == 1 and final.version == queue.version

class TestExitCodes:
	def test_missing_directory(self, tmp_path):
		assert run("bev", tmp_path/"missing", "-q") == 3

	def test_unknown_config_section(self, tmp_path):
		(tmp_path/"bad.json").write_text(json.dumps({"viewer": {}}))
		(tmp_path/"seq").mkdir()
		assert run("bev", tmp_path/"seq", "--config", tmp_path/"bad.json", "-q") == 4

	def test_corrupt_checkpoint(self, labeled_sequence, tmp_path):
		seq, config = labeled_sequence
		(tmp_path/"model.ckpt").write_bytes(b"not a checkpoint at all")
		assert run("infer", seq, "--checkpoint", tmp_path/"model.ckpt", "--out", tmp_path/"maps",
			"--config", config, "-q") == 6

	def test_queue_dimension_mismatch(self, labeled_sequence, tmp_path):
		seq, config = labeled_sequence
		checkpoint.save(init_params(Architecture(widths=(4, 8), embedding_dim=4, input_height=48, input_width=48)),
			tmp_path/"model.ckpt")
		queue = PrototypeQueue()
		queue.absorb([1.0, 0.0])
		queue.save(tmp_path/"q.bin")
		assert run("infer", seq, "--checkpoint", tmp_path/"model.ckpt", "--init-queue", tmp_path/"q.bin",
			"--out", tmp_path/"maps", "--config", config, "-q") == 2

	def test_help(self, capsys):
		with pytest.raises(SystemExit) as exc:
			main(["--help"])
		assert exc.value.code == 0
		assert "autolabel" in capsys.readouterr().out

@pytest.mark.slow
def test_full_chain(labeled_sequence, tmp_path, capsys):
	seq, config = labeled_sequence
	ckpt = tmp_path/"model.ckpt"
	assert run("train", seq, "--out", ckpt, "--config", config, "-q") == 0
	assert run("infer", seq, "--checkpoint", ckpt, "--init-queue", tmp_path/"model.ckpt.queue",
		"--out", tmp_path/"maps", "--config", config, "-q") == 0
	assert run("eval", tmp_path/"maps", seq/"gt", "--bev-dir", seq/"bev", "--config", config,
		"--out", tmp_path/"eval", "--plot", "-q") == 0
	report = json.loads((tmp_path/"eval"/"report.json").read_text())
	assert 0.0 <= report["auroc"] <= 1.0
	assert report["n_frames"] == 4
	assert (tmp_path/"eval"/"curves.png").is_file()
	assert run("bench", seq, "--checkpoint", ckpt, "--frames", 3, "--config", config, "-q") == 0
	assert "update+map" in capsys.readouterr().out
