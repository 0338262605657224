import json
import os

import pandas as pd
import pytest
import torch

from checkpoint import check_resume, load_checkpoint
from cli import main
from config import ConfigError, parse_config
from conftest import TINY_CONFIG
from inference import cmd_diagnose, cmd_eval, evaluate_checkpoint
from metrics import read_metrics
from train import increment_path, train


def tiny(tmp_path, **meta):
    config = parse_config(TINY_CONFIG, path="tiny.ini")
    config.run.output_dir = str(tmp_path)
    for key, value in meta.items():
        setattr(config.meta, key, value)
    return config.validate()


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("runs")
    _, save_dir = train(tiny(tmp_path))
    return save_dir


def test_zero_budget_writes_initial_checkpoint(tmp_path):
    learner, save_dir = train(tiny(tmp_path, total_env_steps=0))
    assert learner.iteration == 0
    for name in ("config.json", "tasks_train.json", "tasks_test.json", "metrics.csv", "iter00000.pth", "last.pth"):
        assert os.path.exists(os.path.join(save_dir, name))
    assert len(read_metrics(os.path.join(save_dir, "metrics.csv"))) == 0


def test_run_layout(trained_run):
    metrics = read_metrics(os.path.join(trained_run, "metrics.csv"))
    # 3개 task x 10 step, 그 다음 2개 task x 10 step 으로 예산 50에 도달
    assert list(metrics["iter"]) == [2]
    assert list(metrics["env_steps"]) == [50]
    assert {"kl_0", "kl_1", "var_0", "var_1", "critic_loss"} <= set(metrics.columns)
    assert os.path.exists(os.path.join(trained_run, "eval", "iter00002.csv"))
    assert os.path.exists(os.path.join(trained_run, "iter00002.pth"))
    with open(os.path.join(trained_run, "config.json"), encoding="utf-8") as f:
        assert json.load(f)["run"]["environment"] == "constant"


def test_resume_matches_uninterrupted_run(tmp_path):
    _, straight_dir = train(tiny(tmp_path / "straight"))

    train(tiny(tmp_path / "resumed", total_env_steps=30))
    learner, resumed_dir = train(tiny(tmp_path / "resumed"), resume=True)
    assert learner.iteration == 2

    a = load_checkpoint(os.path.join(straight_dir, "last.pth"))["learner"]
    b = load_checkpoint(os.path.join(resumed_dir, "last.pth"))["learner"]
    for name, tensor in a["agent"].items():
        assert torch.equal(tensor, b["agent"][name]), name
    assert a["rng"] == b["rng"]
    pd.testing.assert_frame_equal(
        read_metrics(os.path.join(straight_dir, "metrics.csv")),
        read_metrics(os.path.join(resumed_dir, "metrics.csv")),
    )


def test_resume_refuses_changed_config(trained_run, tmp_path):
    state = load_checkpoint(os.path.join(trained_run, "last.pth"))
    config = tiny(tmp_path)
    config.sac.lr = 1e-2
    with pytest.raises(ConfigError, match="refusing to resume"):
        check_resume(state, config)


def test_increment_path(tmp_path):
    base = tmp_path / "exp"
    assert increment_path(base) == str(base)
    base.mkdir()
    assert increment_path(base) == f"{base}2"


def test_eval_and_diagnose_commands(trained_run, tmp_path):
    checkpoint = os.path.join(trained_run, "last.pth")
    results, summary = evaluate_checkpoint(checkpoint)
    assert summary["n"] == 2
    assert summary["mean"] == pytest.approx(10.0)

    assert cmd_eval(checkpoint, out=str(tmp_path)) == 0
    assert len(pd.read_csv(tmp_path / "eval_report.csv")) == 2

    assert cmd_diagnose(trained_run, out=str(tmp_path)) == 0
    scatter = pd.read_csv(tmp_path / "latent_scatter.csv")
    assert len(scatter) == 3
    assert os.path.exists(tmp_path / "rbf_activation_dim0.csv")
    assert os.path.exists(tmp_path / "rbf_activation_dim1.csv")
    assert "collapsed dims" in (tmp_path / "collapse_report.txt").read_text(encoding="utf-8")


def test_cli_train_and_config_error(tmp_path, capsys):
    config_path = tmp_path / "tiny.ini"
    config_path.write_text(TINY_CONFIG, encoding="utf-8")
    argv = ["train", "--config", str(config_path), "--out", str(tmp_path / "runs"), "--seed", "5"]
    assert main(argv) == 0
    with open(tmp_path / "runs" / "tiny" / "config.json", encoding="utf-8") as f:
        assert json.load(f)["run"]["seed"] == 5

    config_path.write_text(TINY_CONFIG.replace("seed = 3", "seed = 3\nspeed = 2"), encoding="utf-8")
    assert main(["train", "--config", str(config_path)]) == 2
    assert "unknown key 'speed'" in capsys.readouterr().err


def test_cli_train_runs_every_configured_seed(tmp_path):
    config_path = tmp_path / "tiny.ini"
    text = TINY_CONFIG.replace("total_env_steps = 50", "total_env_steps = 0\nseeds = 2")
    config_path.write_text(text, encoding="utf-8")
    assert main(["train", "--config", str(config_path), "--out", str(tmp_path / "runs")]) == 0
    for seed in (3, 4):
        with open(tmp_path / "runs" / f"tiny_seed{seed}" / "config.json", encoding="utf-8") as f:
            assert json.load(f)["run"]["seed"] == seed
    assert not (tmp_path / "runs" / "tiny").exists()


def test_cli_train_rejects_context_larger_than_first_collection(tmp_path, capsys):
    config_path = tmp_path / "tiny.ini"
    config_path.write_text(TINY_CONFIG.replace("context_size = 8", "context_size = 64"), encoding="utf-8")
    assert main(["train", "--config", str(config_path), "--out", str(tmp_path / "runs")]) == 2
    assert "context_size 64" in capsys.readouterr().err
    assert not (tmp_path / "runs").exists()
