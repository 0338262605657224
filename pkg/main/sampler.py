import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np
import torch

from dataset import make_context
from env import EnvStepError
from model import DTYPE


@dataclass
class Trajectory:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    components: List[np.ndarray] = field(default_factory=list)
    aborted: bool = False

    def __len__(self):
        return len(self.rewards)

    @property
    def total_return(self):
        return float(np.sum(self.rewards))

    def context(self):
        """[N, 2*obs_dim + action_dim + 1] encoder 입력"""
        return make_context(
            torch.as_tensor(self.obs, dtype=DTYPE),
            torch.as_tensor(self.actions, dtype=DTYPE),
            torch.as_tensor(self.rewards, dtype=DTYPE),
            torch.as_tensor(self.next_obs, dtype=DTYPE),
        )


def concat_trajectories(trajectories, obs_dim, action_dim):
    if not trajectories:
        return Trajectory(
            np.zeros((0, obs_dim)), np.zeros((0, action_dim)), np.zeros(0), np.zeros((0, obs_dim))
        )
    return Trajectory(
        obs=np.concatenate([t.obs for t in trajectories]),
        actions=np.concatenate([t.actions for t in trajectories]),
        rewards=np.concatenate([t.rewards for t in trajectories]),
        next_obs=np.concatenate([t.next_obs for t in trajectories]),
        components=[c for t in trajectories for c in t.components],
        aborted=any(t.aborted for t in trajectories),
    )


def rollout(env, policy, z, max_steps, seed, generator=None, deterministic=False):
    """
    고정된 z로 policy를 실행해서 최대 max_steps step (또는 episode 끝까지)의 trajectory를 모은다.

    Args:
        env (TaskEnv): environment
        policy (TanhGaussianPolicy | Callable): act(obs, z, noise) 또는 obs -> action 함수
        z (torch.Tensor): [d] task representation
        max_steps (int): 최대 step 수
        seed (int): env.reset seed
        generator (torch.Generator): 탐험 noise용 (deterministic이면 필요 없음)
        deterministic (bool): True면 tanh(mean) action

    Returns:
        Trajectory: environment 오류가 나면 그 직전까지의 transition (aborted=True)
    """
    if not deterministic and generator is None and hasattr(policy, "act"):
        raise ValueError("stochastic rollouts need a torch.Generator")
    obs_list, act_list, rew_list, next_list, comp_list = [], [], [], [], []
    aborted = False
    obs, _ = env.reset(seed=seed)
    for _ in range(max_steps):
        if hasattr(policy, "act"):
            obs_t = torch.as_tensor(obs, dtype=DTYPE)
            noise = None
            if not deterministic:
                noise = torch.randn(env.action_dim, generator=generator, dtype=DTYPE)
            action = policy.act(obs_t, z, noise).numpy()
        else:
            action = np.asarray(policy(obs), dtype=np.float64)
        try:
            next_obs, reward, terminated, truncated, info = env.step(action)
        except EnvStepError as e:
            warnings.warn(f"trajectory aborted after {len(rew_list)} steps: {e}")
            aborted = True
            break
        obs_list.append(obs)
        act_list.append(action)
        rew_list.append(reward)
        next_list.append(next_obs)
        comp_list.append(info["components"])
        obs = next_obs
        if terminated or truncated:
            break

    obs_dim, action_dim = env.obs_dim, env.action_dim
    return Trajectory(
        obs=np.array(obs_list).reshape(-1, obs_dim),
        actions=np.array(act_list).reshape(-1, action_dim),
        rewards=np.array(rew_list, dtype=np.float64),
        next_obs=np.array(next_list).reshape(-1, obs_dim),
        components=comp_list,
        aborted=aborted,
    )


def collect_steps(env, policy, z, n_steps, rng, generator=None, deterministic=False,
                  max_attempts=None):
    """
    정확히 n_steps step을 모을 때까지 episode를 반복한다. (episode 경계에서 reset)

    environment 오류로 trajectory가 계속 중단되면 max_attempts번 시도 후 멈춘다.
    """
    trajectories = []
    collected = 0
    attempts = 0
    max_attempts = max_attempts or 2 * n_steps + 10
    while collected < n_steps and attempts < max_attempts:
        seed = int(rng.integers(2**31))
        traj = rollout(env, policy, z, n_steps - collected, seed, generator, deterministic)
        trajectories.append(traj)
        collected += len(traj)
        attempts += 1
    return concat_trajectories(trajectories, env.obs_dim, env.action_dim)
