import glob
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from metrics import read_metrics

ALGORITHM_LABELS = {
    "pearl_parity": "PEARL",
    "vanilla_pearl": "Vanilla-PEARL",
    "rbf_pearl": "RBF-PEARL",
    "rbf_pearl_fixed": "RBF-PEARL-fp",
}


def load_run(run_dir):
    """run 디렉토리의 config.json과 metrics.csv를 읽는다."""
    with open(os.path.join(run_dir, "config.json"), "r", encoding="utf-8") as f:
        config = json.load(f)
    frame = read_metrics(os.path.join(run_dir, "metrics.csv"))
    frame["algorithm"] = config["run"]["algorithm"]
    frame["environment"] = config["run"]["environment"]
    frame["seed"] = config["run"]["seed"]
    frame["run_dir"] = run_dir
    return frame


def aggregate_curves(frame):
    """
    algorithm, iteration별로 seed 사이 mean / std (ddof=0)를 구한다.

    Returns:
        pd.DataFrame: algorithm, iter, env_steps, mean, std, n_seeds
    """
    grouped = frame.groupby(["algorithm", "iter"])
    curves = grouped.agg(
        env_steps=("env_steps", "mean"),
        mean=("mean_test_return", "mean"),
        std=("mean_test_return", lambda x: float(np.std(x, ddof=0))),
        n_seeds=("seed", "nunique"),
    )
    return curves.reset_index()


def final_performance(frame):
    """run별 마지막 평가의 test return을 algorithm x environment로 모은 표"""
    last = frame.sort_values("iter").groupby("run_dir").tail(1)
    table = last.groupby(["algorithm", "environment"])["mean_test_return"].agg(
        mean="mean", std=lambda x: float(np.std(x, ddof=0)), n_seeds="count"
    )
    return table.reset_index()


def format_table(final):
    """algorithm마다 한 행, environment마다 'mean ± std' 한 열인 text 표"""
    envs = sorted(final["environment"].unique())
    header = ["Algorithm", *envs]
    lines = [" | ".join(header), " | ".join("---" for _ in header)]
    for algorithm in sorted(final["algorithm"].unique()):
        cells = [ALGORITHM_LABELS.get(algorithm, algorithm)]
        for env in envs:
            row = final[(final["algorithm"] == algorithm) & (final["environment"] == env)]
            cells.append("-" if row.empty else f"{row['mean'].iloc[0]:.1f} ± {row['std'].iloc[0]:.1f}")
        lines.append(" | ".join(cells))
    return "\n".join(lines) + "\n"


def plot_learning_curves(curves, path):
    figure = plt.figure(figsize=(7, 4.5))
    for algorithm, group in curves.groupby("algorithm"):
        x = group["env_steps"].to_numpy()
        mean = group["mean"].to_numpy()
        std = group["std"].to_numpy()
        plt.plot(x, mean, label=ALGORITHM_LABELS.get(algorithm, algorithm))
        plt.fill_between(x, mean - std, mean + std, alpha=0.25)
    plt.xlabel("environment steps")
    plt.ylabel("average test-task return")
    plt.legend()
    figure.savefig(path, format="svg")
    plt.close(figure)


def plot_kl_variance(frame, path):
    """차원별 KL(실선)과 posterior 분산(점선), seed 평균"""
    kl_cols = [c for c in frame.columns if c.startswith("kl_")]
    var_cols = [c for c in frame.columns if c.startswith("var_")]
    algorithms = sorted(frame["algorithm"].unique())
    figure, axes = plt.subplots(1, len(algorithms), figsize=(5 * len(algorithms), 4), squeeze=False)
    for ax, algorithm in zip(axes[0], algorithms):
        mean = frame[frame["algorithm"] == algorithm].groupby("iter").mean(numeric_only=True)
        for i, (kl, var) in enumerate(zip(kl_cols, var_cols)):
            line = ax.plot(mean["env_steps"], mean[kl], label=f"z_{i + 1}")[0]
            ax.plot(mean["env_steps"], mean[var], linestyle="--", color=line.get_color())
        ax.set_title(ALGORITHM_LABELS.get(algorithm, algorithm))
        ax.set_xlabel("environment steps")
        ax.legend()
    figure.savefig(path, format="svg")
    plt.close(figure)


def plot_latent_scatter(table, path):
    figure = plt.figure(figsize=(5, 5))
    x = table["z_0"]
    y = table["z_1"] if "z_1" in table.columns else np.zeros(len(table))
    plt.scatter(x, y, c=table["label"], cmap="viridis", s=12)
    plt.xlabel("z_1")
    plt.ylabel("z_2")
    figure.savefig(path, format="svg")
    plt.close(figure)


def plot_trajectory(frame, path):
    figure = plt.figure(figsize=(7.5, 5))
    human_cols = sorted({c[: -2] for c in frame.columns if c.startswith("human")})
    for name in human_cols:
        plt.plot(frame[f"{name}_x"], frame[f"{name}_y"], color="gray", alpha=0.6)
    plt.plot(frame["robot_x"], frame["robot_y"], color="tab:red", label="robot")
    plt.scatter(frame["goal_x"].iloc[:1], frame["goal_y"].iloc[:1], marker="*", s=120, label="goal")
    plt.xlim(0, 15)
    plt.ylim(0, 10)
    plt.legend()
    figure.savefig(path, format="svg")
    plt.close(figure)


def cmd_report(run_dirs, out_dir):
    """
    여러 run의 metrics를 모아 learning curve / KL / latent / trajectory SVG와
    algorithm별 최종 성능 표를 만든다.

    Returns:
        str: 표 text
    """
    os.makedirs(out_dir, exist_ok=True)
    frame = pd.concat([load_run(d) for d in run_dirs], ignore_index=True)

    curves = aggregate_curves(frame)
    curves.to_csv(os.path.join(out_dir, "learning_curves.csv"), index=False)
    plot_learning_curves(curves, os.path.join(out_dir, "learning_curves.svg"))
    plot_kl_variance(frame, os.path.join(out_dir, "kl_variance.svg"))

    final = final_performance(frame)
    final.to_csv(os.path.join(out_dir, "final_returns.csv"), index=False)
    text = format_table(final)
    with open(os.path.join(out_dir, "results.txt"), "w", encoding="utf-8") as f:
        f.write(text)

    for run_dir in run_dirs:
        name = os.path.basename(os.path.normpath(run_dir))
        scatter = os.path.join(run_dir, "latent_scatter.csv")
        if os.path.exists(scatter):
            plot_latent_scatter(pd.read_csv(scatter), os.path.join(out_dir, f"{name}_latent.svg"))
        for path in sorted(glob.glob(os.path.join(run_dir, "trajectory_*.csv"))):
            stem = os.path.splitext(os.path.basename(path))[0]
            plot_trajectory(pd.read_csv(path), os.path.join(out_dir, f"{name}_{stem}.svg"))
    print(text)
    return text
