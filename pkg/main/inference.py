import os
import sys

import numpy as np

from checkpoint import load_checkpoint
from config import ConfigError, config_from_dict
from diagnostics import (
    PROBE_SEED,
    collapse_onsets,
    detect_collapsed_dims,
    export_latent_scatter,
    export_rbf_activation_map,
    parameter_digest,
)
from env import env_dims
from metrics import read_metrics, summarize_returns
from pearl import MetaLearner, adapt_to_weights
from rbf import RBFLayer
from socialnav import COMPONENT_NAMES
from tasks import load_task_manifest, make_task_set
from train import build_tasks

# socialnav 행동 비교용 가중치 (R_g, R_c, R_s, R_a, R_v)
SOCIALNAV_BEHAVIOURS = {
    "goal": (1.0, 0.0, 0.0, 0.0, 0.0),
    "velocity": (0.5, 0.0, 0.0, 0.0, 0.5),
    "social": (0.4, 0.0, 0.3, 0.3, 0.0),
}


def restore_learner(checkpoint_path):
    """
    저장된 체크포인트에서 MetaLearner를 복원한다.

    Returns:
        learner (MetaLearner)
        config (RunConfig)
        run_dir (str): 체크포인트가 있는 디렉토리
    """
    state = load_checkpoint(checkpoint_path)
    config = config_from_dict(state["config"])
    run_dir = os.path.dirname(os.path.abspath(checkpoint_path))
    manifest = os.path.join(run_dir, "tasks_train.json")
    train_tasks = load_task_manifest(manifest) if os.path.exists(manifest) else build_tasks(config)[0]
    learner = MetaLearner(config, train_tasks)
    learner.load_state_dict(state["learner"])
    return learner, config, run_dir


def evaluate_checkpoint(checkpoint_path, n_test_tasks=None, seed=None, threads=1):
    """
    체크포인트의 agent로 test task마다 meta_test를 실행한다.

    Returns:
        results (pd.DataFrame): task별 exploration / adapted return
        summary (dict): adapted return의 mean, std, stderr, n
    """
    learner, config, _ = restore_learner(checkpoint_path)
    if seed is not None:
        config.run.seed = seed
    if n_test_tasks is None:
        tasks = build_tasks(config)[1]
    else:
        _, _, n_components = env_dims(config.run.environment)
        tasks = make_task_set(config.task_family, n_test_tasks, "test", n_components,
                              config.env.constant_reward)
    results = learner.evaluate_test_tasks(tasks, threads=threads)
    return results, summarize_returns(results["adapted_return"])


def cmd_eval(checkpoint_path, n_test_tasks=None, seed=None, out=None, threads=1):
    try:
        results, summary = evaluate_checkpoint(checkpoint_path, n_test_tasks, seed, threads)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = out or os.path.dirname(os.path.abspath(checkpoint_path))
    os.makedirs(out, exist_ok=True)
    results.to_csv(os.path.join(out, "eval_report.csv"), index=False)
    print(
        f"[Eval] {summary['n']} test tasks || adapted return {summary['mean']:.3f} ± "
        f"{summary['stderr']:.3f} (stderr) || exploration return "
        f"{results['exploration_return'].mean():.3f}"
    )
    return 0


def collapse_report(metrics, eps=0.01, window=10):
    collapsed = detect_collapsed_dims(metrics, eps, window)
    onsets = collapse_onsets(metrics, eps, window)
    lines = [f"eps {eps} || window {window} records"]
    lines.append("collapsed dims : " + (", ".join(f"z_{i + 1}" for i in sorted(collapsed)) or "none"))
    for dim, record in sorted(onsets.items()):
        lines.append(f"z_{dim + 1} first flagged at iter {int(metrics['iter'].iloc[record])}")
    return "\n".join(lines) + "\n"


def cmd_diagnose(run_dir, out=None, eps=0.01, window=10):
    """
    latent scatter, RBF activation map, collapse report, (socialnav) 행동별 trajectory를 만든다.

    진단은 학습 상태를 바꾸지 않는다. (parameter digest로 확인)
    """
    learner, config, run_dir = restore_learner(os.path.join(run_dir, "last.pth"))
    out = out or run_dir
    os.makedirs(out, exist_ok=True)
    digest = parameter_digest(learner.agent)

    if all(len(buffer) > 0 for buffer in learner.buffers):
        rng = np.random.default_rng(PROBE_SEED)
        table, summary = export_latent_scatter(
            learner.agent.encoder, learner.tasks, learner.buffers, rng,
            context_size=config.meta.adaptation_steps,
        )
        table.to_csv(os.path.join(out, "latent_scatter.csv"), index=False)
        with open(os.path.join(out, "latent_summary.txt"), "w", encoding="utf-8") as f:
            f.write(summary + "\n")
        print(summary)

    uplift = learner.agent.actor.uplift
    if isinstance(uplift, RBFLayer):
        lo, hi = config.network.rbf_interval
        grid = np.linspace(lo - 1.0, hi + 1.0, 201)
        for dim in range(uplift.in_features):
            export_rbf_activation_map(uplift, dim, grid).to_csv(
                os.path.join(out, f"rbf_activation_dim{dim}.csv"), index=False
            )

    metrics_path = os.path.join(run_dir, "metrics.csv")
    if os.path.exists(metrics_path):
        report = collapse_report(read_metrics(metrics_path), eps, window)
        with open(os.path.join(out, "collapse_report.txt"), "w", encoding="utf-8") as f:
            f.write(report)
        print(report)

    if config.run.environment == "socialnav":
        for name, weights in SOCIALNAV_BEHAVIOURS.items():
            result, trajectory = adapt_to_weights(
                learner.agent, "socialnav", config.env, weights, config.meta.adaptation_steps,
                seed=config.run.seed,
            )
            trajectory.to_csv(os.path.join(out, f"trajectory_{name}.csv"), index=False)
            active = [c for c, w in zip(COMPONENT_NAMES, weights) if w > 0]
            print(f"[{name}] {'+'.join(active)} || adapted return {result.adapted_return:.3f}")

    assert parameter_digest(learner.agent) == digest, "diagnostics modified the agent parameters"
    return 0
