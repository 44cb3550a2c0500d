import json
from pathlib import Path

import pytest

from psrn.cli import main
from psrn.numcore import load_checkpoint, save_checkpoint
from psrn.runconfig import RunConfig

TINY = {
    "synth": {"num_classes": 3, "train_per_class": 5, "test_per_class": 3, "fmap_shape": [2, 2, 8]},
    "model": {"part_width": 4, "hidden": 6, "attention_width": 4, "g_widths": [8, 8, 8, 8],
              "f_widths": [8, 8], "object_dim": 8},
    "iterations": [5, 4, 4],
    "batch_size": 2,
    "ablation_seeds": [0],
}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


def tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_synth_is_deterministic(tmp_path, config):
    assert run("synth", "--config", config, "--out", tmp_path / "a") == 0
    assert run("synth", "--config", config, "--out", tmp_path / "b") == 0
    assert tree_bytes(tmp_path / "a" / "data") == tree_bytes(tmp_path / "b" / "data")
    manifest = json.loads((tmp_path / "a" / "data" / "manifest.json").read_text())
    assert {e["split"] for e in manifest["entries"]} == {"train", "test"}


def test_synth_counts(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synth": {"num_classes": 4, "train_per_class": 50, "test_per_class": 0}}))
    assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 0
    manifest = json.loads((tmp_path / "o" / "data" / "manifest.json").read_text())
    assert len(manifest["entries"]) == 200


def test_train_requires_prior_stage(tmp_path, config, capsys):
    out = tmp_path / "run"
    run("synth", "--config", config, "--out", out)
    assert run("train", "--stage", "2", "--config", config, "--out", out) != 0
    assert "stage 1" in capsys.readouterr().err
    assert run("train", "--stage", "3", "--config", config, "--out", out) != 0


def test_train_all_then_eval_and_inspect(tmp_path, config):
    out = tmp_path / "run"
    run("synth", "--config", config, "--out", out)
    assert run("train", "--stage", "all", "--config", config, "--out", out) == 0
    assert all((out / f"stage{k}.ckpt").exists() for k in (1, 2, 3))
    first_trace = (out / "trace.csv").read_bytes()
    stages = [line.split(",")[1] for line in first_trace.decode().splitlines()[1:]]
    assert stages == ["1"] * 5 + ["2"] * 4 + ["3"] * 4

    assert run("train", "--stage", "all", "--config", config, "--out", out) == 0
    assert (out / "trace.csv").read_bytes() == first_trace

    assert run("eval", "--split", "test", "--config", config, "--out", out) == 0
    report = json.loads((out / "eval_test.json").read_text())
    assert sum(map(sum, report["confusion"])) == 9

    assert run("inspect", "--config", config, "--out", out) == 0
    lines = (out / "attention.csv").read_text().splitlines()
    assert lines[0] == "video_id,t,person_index,alpha"
    assert len(lines) == 1 + 9 * 10 * 2

    merged = RunConfig.load(out / "config.json")
    assert merged.iterations == (5, 4, 4)


def test_stagewise_equals_all(tmp_path, config):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run("synth", "--config", config, "--out", out)
    run("train", "--stage", "all", "--config", config, "--out", a)
    for k in ("1", "2", "3"):
        assert run("train", "--stage", k, "--config", config, "--out", b) == 0
    assert (a / "stage3.ckpt").read_bytes() == (b / "stage3.ckpt").read_bytes()
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_checkpoint_mismatch_lists_tensors(tmp_path, config, capsys):
    out = tmp_path / "run"
    run("synth", "--config", config, "--out", out)
    run("train", "--stage", "1", "--config", config, "--out", out)
    state = load_checkpoint(out / "stage1.ckpt")
    del state["rel.out.b"]
    save_checkpoint(out / "broken.ckpt", state)
    assert run("eval", "--config", config, "--out", out, "--checkpoint", out / "broken.ckpt") == 2
    assert "rel.out.b" in capsys.readouterr().err


def test_gradcheck_passes(tmp_path, capsys):
    assert run("gradcheck", "--out", tmp_path) == 0
    assert "verdict: PASS" in capsys.readouterr().out
    data = json.loads((tmp_path / "gradcheck.json").read_text())
    assert data["passed"] and max(data["modules"].values()) < 1e-4


def test_ablate_writes_grid(tmp_path, config):
    out = tmp_path / "run"
    run("synth", "--config", config, "--out", out)
    assert run("ablate", "--config", config, "--out", out) == 0
    assert len((out / "ablation.txt").read_text().splitlines()) == 5
    assert len(json.loads((out / "ablation.json").read_text())) == 3


def test_seed_flag_sets_every_seed(tmp_path):
    config = _write(tmp_path, {"synth": {"train_per_class": 1, "test_per_class": 1}})
    run("synth", "--seed", 7, "--out", tmp_path, "--config", config)
    cfg = RunConfig.load(tmp_path / "config.json")
    assert (cfg.data_seed, cfg.init_seed, cfg.sampling_seed, cfg.eval_seed) == (7, 7, 7, 7)


def _write(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path
