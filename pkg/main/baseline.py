import os
import sys

import numpy as np
import pandas as pd
import torch

from config import ConfigError, apply_overrides, load_config
from dataset import TaskBuffer
from env import create_env, env_dims
from metrics import summarize_returns
from model import DTYPE
from sac import SacLearner, seed_generator
from sampler import rollout
from tasks import make_task_set


def _evaluate(learner, env, rng):
    episode = rollout(
        env, learner.nets.actor, learner.z, env.episode_length, int(rng.integers(2**31)),
        deterministic=True,
    )
    return episode.total_return


def _online_sac(learner, env, buffer, n_steps, updates_per_step, rng, obs=None):
    """
    현재 policy로 한 step씩 수집하면서 step마다 updates_per_step번 업데이트한다.

    Returns:
        obs: 다음 step의 observation (episode가 끝났으면 None)
    """
    for _ in range(n_steps):
        if obs is None:
            obs, _ = env.reset(seed=int(rng.integers(2**31)))
        traj = _step(env, learner, obs)
        buffer.add(obs, traj["action"], traj["reward"], traj["next_obs"])
        obs = None if traj["done"] else traj["next_obs"]
        for _ in range(updates_per_step):
            learner.update(buffer)
    return obs


def _step(env, learner, obs):
    noise = torch.randn(env.action_dim, generator=learner.generator, dtype=DTYPE)
    action = learner.nets.actor.act(torch.as_tensor(obs, dtype=DTYPE), learner.z, noise).numpy()
    next_obs, reward, terminated, truncated, _ = env.step(action)
    return {"action": action, "reward": reward, "next_obs": next_obs,
            "done": terminated or truncated}


def run_sac200_baseline(task, config, seed):
    """
    task 하나에 새 SAC agent를 만들고 관측 n_observations(200)개만으로 학습한다.

    관측 하나를 모을 때마다 gradient_steps_per_obs번 업데이트하고 (총 25 x 200번),
    마지막에 deterministic episode 하나로 평가한다.

    Returns:
        float: 평가 episode return
    """
    rng = np.random.default_rng([seed, task.seed])
    env = create_env(config.run.environment, task, config.env)
    obs_dim, action_dim, _ = env_dims(config.run.environment)
    learner = SacLearner(config, obs_dim, action_dim, rng, seed_generator(rng))
    n_obs = config.baseline.n_observations
    buffer = TaskBuffer(task.task_id, obs_dim, action_dim, capacity=n_obs, recent_window=n_obs)

    _online_sac(learner, env, buffer, n_obs, config.baseline.gradient_steps_per_obs, rng)
    assert len(buffer) == n_obs
    return _evaluate(learner, env, rng)


def run_sac_budget_baseline(task, config, seed, checkpoints=None):
    """
    step마다 한 번 업데이트하는 일반 SAC를 학습하면서, 각 env-step checkpoint에서 평가한다.

    Returns:
        List[Tuple[int, float]]: (env_steps, return)
    """
    checkpoints = sorted(config.baseline.budget_checkpoints if checkpoints is None else checkpoints)
    rng = np.random.default_rng([seed, task.seed])
    env = create_env(config.run.environment, task, config.env)
    obs_dim, action_dim, _ = env_dims(config.run.environment)
    learner = SacLearner(config, obs_dim, action_dim, rng, seed_generator(rng))
    buffer = TaskBuffer(
        task.task_id, obs_dim, action_dim, config.meta.buffer_capacity, config.meta.recent_window
    )
    eval_env = create_env(config.run.environment, task, config.env)
    eval_rng = np.random.default_rng([seed, task.seed, 1])

    results = []
    steps = 0
    obs = None
    for budget in checkpoints:
        obs = _online_sac(learner, env, buffer, budget - steps, 1, rng, obs)
        steps = budget
        results.append((steps, _evaluate(learner, eval_env, eval_rng)))
    return results


def random_policy_return(env, n_episodes, rng):
    """uniform random action으로 n_episodes개 episode를 실행한 평균 return"""
    returns = []
    for _ in range(n_episodes):
        episode = rollout(
            env,
            lambda obs: rng.uniform(-1.0, 1.0, size=env.action_dim),
            None,
            env.episode_length,
            int(rng.integers(2**31)),
        )
        returns.append(episode.total_return)
    return float(np.mean(returns))


def _baseline_tasks(config, n_test_tasks):
    n = config.meta.n_test_tasks if n_test_tasks is None else n_test_tasks
    _, _, n_components = env_dims(config.run.environment)
    return make_task_set(config.task_family, n, "test", n_components, config.env.constant_reward)


def cmd_baseline_sac200(config_path, seed=None, out=None, n_test_tasks=None):
    """
    test task마다 SAC-200 baseline을 실행하고 cmd_eval과 같은 형식으로 보고한다.

    Returns:
        int: exit code
    """
    try:
        config = apply_overrides(load_config(config_path), seed, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    rows = []
    for task in _baseline_tasks(config, n_test_tasks):
        ret = run_sac200_baseline(task, config, config.run.seed)
        rows.append({"task_id": task.task_id, "seed": task.seed, "adapted_return": ret})
        print(f"[SAC-{config.baseline.n_observations}] task {task.task_id} || return {ret:.3f}")
    results = pd.DataFrame(rows)
    summary = summarize_returns(results["adapted_return"])
    os.makedirs(config.run.output_dir, exist_ok=True)
    results.to_csv(os.path.join(config.run.output_dir, "baseline_sac200.csv"), index=False)
    print(
        f"[Baseline] {summary['n']} test tasks || return {summary['mean']:.3f} ± "
        f"{summary['stderr']:.3f} (stderr)"
    )
    return 0


def cmd_baseline_budget(config_path, seed=None, out=None, n_test_tasks=None):
    """test task마다 env step 예산별 일반 SAC return을 기록한다."""
    try:
        config = apply_overrides(load_config(config_path), seed, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    rows = []
    for task in _baseline_tasks(config, n_test_tasks):
        env = create_env(config.run.environment, task, config.env)
        random_return = random_policy_return(env, 10, np.random.default_rng([config.run.seed, task.seed, 2]))
        for steps, ret in run_sac_budget_baseline(task, config, config.run.seed):
            rows.append(
                {"task_id": task.task_id, "env_steps": steps, "return": ret, "random_return": random_return}
            )
            print(f"[SAC] task {task.task_id} || {steps} env steps || return {ret:.3f}")
    results = pd.DataFrame(rows)
    os.makedirs(config.run.output_dir, exist_ok=True)
    results.to_csv(os.path.join(config.run.output_dir, "baseline_budget.csv"), index=False)
    print(results.groupby("env_steps")[["return", "random_return"]].mean().to_string())
    return 0
