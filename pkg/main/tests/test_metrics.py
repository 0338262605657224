import math

import pandas as pd
import pytest

from diagnostics import CollapseRecord
from metrics import SCHEMA_HEADER, MetricsWriter, build_row, metric_columns, read_metrics, summarize_returns


def test_summarize_returns():
    summary = summarize_returns([1.0, 2.0, 3.0, 4.0])
    assert summary["mean"] == 2.5
    assert summary["std"] == pytest.approx(math.sqrt(1.25))
    assert summary["stderr"] == pytest.approx(math.sqrt(5 / 3) / 2)
    assert summarize_returns([7.0])["stderr"] == 0.0
    with pytest.raises(ValueError):
        summarize_returns([])


def row(i, latent_dim=2):
    results = pd.DataFrame({"adapted_return": [1.0, 3.0]})
    collapse = CollapseRecord(i, 10 * i, [0.5] * latent_dim, [0.9] * latent_dim)
    record = {"iter": i, "env_steps": 10 * i, "critic_loss": 1.0, "actor_loss": -1.0,
              "encoder_loss": 1.1, "kl_loss": 0.5}
    return build_row(record, results, collapse)


def test_metrics_file_layout(tmp_path):
    path = tmp_path / "metrics.csv"
    writer = MetricsWriter(path, latent_dim=2)
    writer.append(row(1))
    writer.append(row(2))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == SCHEMA_HEADER
    assert lines[1].split(",") == metric_columns(2)
    frame = read_metrics(path)
    assert list(frame["iter"]) == [1, 2]
    assert frame["mean_test_return"].iloc[0] == 2.0
    assert frame["std_test_return"].iloc[0] == 1.0


def test_resume_truncates_later_rows(tmp_path):
    path = tmp_path / "metrics.csv"
    writer = MetricsWriter(path, latent_dim=1)
    for i in (1, 2, 3):
        writer.append(row(i, latent_dim=1))
    MetricsWriter(path, latent_dim=1, resume_iter=2).append(row(3, latent_dim=1))
    assert list(read_metrics(path)["iter"]) == [1, 2, 3]


def test_missing_column_rejected(tmp_path):
    writer = MetricsWriter(tmp_path / "metrics.csv", latent_dim=1)
    with pytest.raises(KeyError):
        writer.append({"iter": 1})
