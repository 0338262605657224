import copy
import glob
import json
import os
import random
import re
import sys
from pathlib import Path

import numpy as np
import torch
import wandb
from torch.utils.tensorboard import SummaryWriter

from config import ConfigError, apply_overrides, load_config
from checkpoint import check_resume, load_checkpoint, save_checkpoint
from diagnostics import record_collapse_metrics, select_probe_tasks
from env import env_dims
from metrics import MetricsWriter, build_row, summarize_returns
from pearl import PROBE_STREAM, MetaLearner, stream_rng
from tasks import make_task_set, save_task_manifest


def seed_everything(seed):
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True)
    np.random.seed(seed)
    random.seed(seed)


def increment_path(path, exist_ok=False):
    """Automatically increment path, i.e. runs/exp --> runs/exp0, runs/exp1 etc.

    Args:
        path (str or pathlib.Path): f"{output_dir}/{name}".
        exist_ok (bool): whether increment path (increment if False).
    """
    path = Path(path)
    if (path.exists() and exist_ok) or (not path.exists()):
        return str(path)
    else:
        dirs = glob.glob(f"{path}*")
        matches = [re.search(rf"%s(\d+)" % path.stem, d) for d in dirs]
        i = [int(m.groups()[0]) for m in matches if m]
        n = max(i) + 1 if i else 2
        return f"{path}{n}"


def build_tasks(config):
    """설정의 environment에 맞는 학습 / 테스트 task 집합"""
    _, _, n_components = env_dims(config.run.environment)
    kwargs = dict(n_components=n_components, constant=config.env.constant_reward)
    train_tasks = make_task_set(config.task_family, config.meta.n_train_tasks, "train", **kwargs)
    test_tasks = make_task_set(config.task_family, config.meta.n_test_tasks, "test", **kwargs)
    return train_tasks, test_tasks


def evaluate(learner, test_tasks, probe, config, threads=1):
    """test task 평가와 probe task collapse 기록"""
    it = learner.iteration
    results = learner.evaluate_test_tasks(test_tasks, it, threads)
    rng = stream_rng(config.run.seed, PROBE_STREAM, it, 0)
    collapse = record_collapse_metrics(
        learner.agent.encoder,
        [learner.buffers[i] for i in probe],
        config.meta.context_size,
        rng,
        iteration=it,
        env_steps=learner.env_steps,
    )
    return results, collapse


def log_scalars(logger, row, step):
    if logger is None:
        return
    for key, value in row.items():
        if key in ("iter", "env_steps"):
            continue
        if "test_return" in key:
            group = "Test"
        elif key.startswith(("kl_", "var_")) and key[-1].isdigit():
            group = "Collapse"
        else:
            group = "Train"
        logger.add_scalar(f"{group}/{key}", value, step)


def train(config, resume=False, threads=None):
    """
    seed 하나의 meta-training을 env step 예산까지 실행한다.

    eval_interval마다 test task를 평가해 metrics.csv에 한 행을 쓰고 체크포인트를 저장한다.
    resume이면 {output_dir}/{name}/last.pth에서 이어서 학습한다.

    Returns:
        (MetaLearner, str): 학습된 learner와 run 디렉토리
    """
    seed_everything(config.run.seed)
    threads = threads or config.run.threads
    run_path = os.path.join(config.run.output_dir, config.run.name)
    save_dir = run_path if resume else increment_path(run_path)
    os.makedirs(os.path.join(save_dir, "eval"), exist_ok=True)

    train_tasks, test_tasks = build_tasks(config)
    learner = MetaLearner(config, train_tasks)
    probe = select_probe_tasks(len(train_tasks), config.meta.probe_tasks)

    last = os.path.join(save_dir, "last.pth")
    metrics_path = os.path.join(save_dir, "metrics.csv")
    if resume and os.path.exists(last):
        state = load_checkpoint(last)
        check_resume(state, config)
        learner.load_state_dict(state["learner"])
        metrics = MetricsWriter(metrics_path, config.latent_dim, resume_iter=learner.iteration)
        print(f"Resuming from iteration {learner.iteration} ({learner.env_steps} env steps)")
    else:
        with open(os.path.join(save_dir, "config.json"), "w", encoding="utf-8") as f:
            json.dump(config.to_dict(), f, ensure_ascii=False, indent=4)
        save_task_manifest(train_tasks, os.path.join(save_dir, "tasks_train.json"))
        save_task_manifest(test_tasks, os.path.join(save_dir, "tasks_test.json"))
        metrics = MetricsWriter(metrics_path, config.latent_dim)
        save_checkpoint(save_dir, learner, config, "iter00000.pth")

    # -- logging
    logger = SummaryWriter(log_dir=save_dir) if config.logging.tensorboard else None
    if config.logging.wandb:
        wandb.init(project=config.logging.wandb_project, name=config.run.name,
                   config=config.to_dict(), resume="allow")

    total = config.meta.total_env_steps
    while learner.env_steps < total:
        record = learner.train_iteration(threads)
        it = record["iter"]
        if it % config.logging.log_interval == 0:
            print(
                f"Iter[{it}]({learner.env_steps}/{total}) || "
                f"critic loss {record['critic_loss']:4.4} || actor loss {record['actor_loss']:4.4} || "
                f"encoder loss {record['encoder_loss']:4.4} || kl {record['kl_loss']:4.4}"
            )
            losses = {k: v for k, v in record.items() if k.endswith("_loss")}
            log_scalars(logger, losses, learner.env_steps)

        if it % config.meta.eval_interval == 0:
            results, collapse = evaluate(learner, test_tasks, probe, config, threads)
            results.to_csv(os.path.join(save_dir, "eval", f"iter{it:05d}.csv"), index=False)
            row = build_row(record, results, collapse)
            metrics.append(row)
            summary = summarize_returns(results["adapted_return"])
            print(
                f"[Test] return : {summary['mean']:4.4} ± {summary['stderr']:4.2} || "
                f"exploration return : {results['exploration_return'].mean():4.4}"
            )
            log_scalars(logger, row, learner.env_steps)
            if config.logging.wandb:
                wandb.log(row, step=learner.env_steps)
            save_checkpoint(save_dir, learner, config, f"iter{it:05d}.pth")

    save_checkpoint(save_dir, learner, config)
    if logger is not None:
        logger.close()
    if config.logging.wandb:
        wandb.finish()
    return learner, save_dir


def cmd_train(config_path, seed=None, out=None, name=None, resume=False, threads=None):
    """
    설정 파일로 meta-training을 실행한다.

    --seed가 없으면 [run] seed부터 [meta] seeds개의 seed를 차례로 학습하고,
    run 디렉토리 이름에 _seed{n}을 붙인다.

    Returns:
        int: exit code (설정 오류면 2)
    """
    try:
        config = apply_overrides(load_config(config_path), seed, out, name, threads)
        if seed is not None or config.meta.seeds == 1:
            train(config, resume=resume)
            return 0
        for offset in range(config.meta.seeds):
            run_seed = config.run.seed + offset
            seed_config = apply_overrides(
                copy.deepcopy(config), seed=run_seed, name=f"{config.run.name}_seed{run_seed}"
            )
            print(f"[Seed {offset + 1}/{config.meta.seeds}] seed {run_seed}")
            train(seed_config, resume=resume)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0
