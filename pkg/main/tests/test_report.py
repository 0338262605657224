import json
import os

import pandas as pd
import pytest

from config import RunConfig
from diagnostics import CollapseRecord
from metrics import MetricsWriter, build_row
from report import aggregate_curves, cmd_report, final_performance, format_table, load_run


def fake_run(root, algorithm, seed, returns):
    run_dir = os.path.join(root, f"{algorithm}_{seed}")
    os.makedirs(run_dir)
    config = RunConfig()
    config.run.algorithm = algorithm
    config.run.seed = seed
    with open(os.path.join(run_dir, "config.json"), "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f)
    writer = MetricsWriter(os.path.join(run_dir, "metrics.csv"), latent_dim=3)
    for i, value in enumerate(returns, start=1):
        record = {"iter": i, "env_steps": 100 * i, "critic_loss": 1.0, "actor_loss": 0.0,
                  "encoder_loss": 1.0, "kl_loss": 0.1}
        collapse = CollapseRecord(i, 100 * i, [0.5, 0.001, 0.2], [0.3, 0.99, 0.5])
        writer.append(build_row(record, pd.DataFrame({"adapted_return": [value]}), collapse))
    return run_dir


@pytest.fixture
def runs(tmp_path):
    return [
        fake_run(tmp_path, "rbf_pearl", 0, [1.0, 4.0]),
        fake_run(tmp_path, "rbf_pearl", 1, [3.0, 6.0]),
        fake_run(tmp_path, "pearl_parity", 0, [2.0, 2.0]),
    ]


def test_curves_average_over_seeds(runs):
    frame = pd.concat([load_run(d) for d in runs], ignore_index=True)
    curves = aggregate_curves(frame)
    last = curves[(curves["algorithm"] == "rbf_pearl") & (curves["iter"] == 2)].iloc[0]
    assert last["mean"] == 5.0
    assert last["std"] == 1.0
    assert last["n_seeds"] == 2


def test_final_table(runs):
    frame = pd.concat([load_run(d) for d in runs], ignore_index=True)
    text = format_table(final_performance(frame))
    lines = text.splitlines()
    assert lines[0] == "Algorithm | racer"
    assert "PEARL | 2.0 ± 0.0" in lines
    assert "RBF-PEARL | 5.0 ± 1.0" in lines


def test_cmd_report_writes_artifacts(runs, tmp_path):
    pd.DataFrame({"task_id": [0, 1], "label": [0, 2], "z_0": [0.1, -0.3], "z_1": [1.0, 2.0]}).to_csv(
        os.path.join(runs[0], "latent_scatter.csv"), index=False
    )
    out = tmp_path / "report"
    cmd_report(runs, str(out))
    for name in ("learning_curves.csv", "learning_curves.svg", "kl_variance.svg", "final_returns.csv", "results.txt"):
        assert (out / name).exists()
    assert (out / "rbf_pearl_0_latent.svg").exists()
