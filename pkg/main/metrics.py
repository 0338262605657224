# iteration별 평가 결과를 metrics.csv에 기록하고 다시 읽는다.
import math
import os

import numpy as np
import pandas as pd

SCHEMA_HEADER = "# metrics-schema v1"
LOSS_COLUMNS = ["critic_loss", "actor_loss", "encoder_loss", "kl_loss"]


def metric_columns(latent_dim):
    return (
        ["iter", "env_steps", "mean_test_return", "std_test_return"]
        + [f"kl_{i}" for i in range(latent_dim)]
        + [f"var_{i}" for i in range(latent_dim)]
        + LOSS_COLUMNS
    )


def summarize_returns(values):
    """
    Returns:
        dict: mean, std (ddof=0), stderr (n=1이면 0), n
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n == 0:
        raise ValueError("cannot summarize an empty set of returns")
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return {"mean": float(np.mean(values)), "std": float(np.std(values)), "stderr": stderr, "n": n}


def read_metrics(path):
    return pd.read_csv(path, comment="#")


class MetricsWriter:
    """
    metrics.csv 작성기

    첫 줄은 schema 주석, 이후 header와 iteration별 행. resume_iter가 주어지면
    그 iteration보다 뒤의 행을 지우고 이어서 쓴다.
    """

    def __init__(self, path, latent_dim, resume_iter=None):
        self.path = path
        self.columns = metric_columns(latent_dim)
        if resume_iter is not None and os.path.exists(path):
            frame = read_metrics(path)
            frame = frame[frame["iter"] <= resume_iter]
            self._write(frame)
        else:
            self._write(pd.DataFrame(columns=self.columns))

    def _write(self, frame):
        with open(self.path, "w", encoding="utf-8", newline="") as f:
            f.write(SCHEMA_HEADER + "\n")
            frame.to_csv(f, index=False, columns=self.columns)

    def append(self, row):
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise KeyError(f"metrics row is missing {missing}")
        with open(self.path, "a", encoding="utf-8", newline="") as f:
            pd.DataFrame([row], columns=self.columns).to_csv(f, header=False, index=False)


def build_row(record, test_results, collapse):
    """학습 기록, test task 결과, collapse 기록을 metrics 한 행으로 합친다."""
    summary = summarize_returns(test_results["adapted_return"])
    row = {
        "iter": record["iter"],
        "env_steps": record["env_steps"],
        "mean_test_return": summary["mean"],
        "std_test_return": summary["std"],
    }
    for i, value in enumerate(collapse.per_dim_kl):
        row[f"kl_{i}"] = float(value)
    for i, value in enumerate(collapse.per_dim_posterior_var):
        row[f"var_{i}"] = float(value)
    for key in LOSS_COLUMNS:
        row[key] = record.get(key, float("nan"))
    return row
