import warnings
from importlib import import_module

import gymnasium as gym
import numpy as np
from gymnasium import spaces


class EnvStepError(RuntimeError):
    """environment 상태에 NaN/inf가 생겨 trajectory를 계속할 수 없을 때 발생하는 예외"""


class TaskEnv(gym.Env):
    """
    reward component를 내놓고, task가 그것을 scalar reward로 합치는 environment의 공통 부분

    하위 클래스는 _reset_state, _observe, _advance를 구현한다.
    step()의 info["components"]에 component 벡터가 담긴다.
    """

    metadata = {"render_modes": []}
    obs_dim = 0
    action_dim = 1
    n_components = 1

    def __init__(self, task, episode_length=200):
        self.task = task
        self.episode_length = episode_length
        self.observation_space = spaces.Box(-np.inf, np.inf, (self.obs_dim,), dtype=np.float64)
        self.action_space = spaces.Box(-1.0, 1.0, (self.action_dim,), dtype=np.float64)
        self.t = 0

    def clip_action(self, action):
        action = np.asarray(action, dtype=np.float64).reshape(self.action_dim)
        if np.any(np.abs(action) > 1.0):
            warnings.warn(f"action {action} outside [-1, 1] was clamped", stacklevel=3)
            action = np.clip(action, -1.0, 1.0)
        return action

    def reset(self, *, seed=None, options=None):
        super().reset(seed=seed)
        self.t = 0
        self._reset_state()
        return self._observe(), {}

    def step(self, action):
        action = self.clip_action(action)
        components = np.asarray(self._advance(action), dtype=np.float64)
        self.t += 1
        obs = self._observe()
        if not np.all(np.isfinite(obs)) or not np.all(np.isfinite(components)):
            raise EnvStepError(f"{type(self).__name__} produced a non-finite state at step {self.t}")
        reward = self.task.evaluate(components)
        truncated = self.t >= self.episode_length
        return obs, reward, False, truncated, {"components": components}

    def _reset_state(self):
        raise NotImplementedError

    def _observe(self):
        raise NotImplementedError

    def _advance(self, action):
        raise NotImplementedError


class ConstantRewardEnv(TaskEnv):
    """매 step 같은 reward를 주는 검증용 environment"""

    obs_dim = 2
    action_dim = 1
    n_components = 1

    def __init__(self, task, episode_length=200, reward=None):
        super().__init__(task, episode_length)
        self.reward = task.constant if reward is None else reward

    @classmethod
    def from_config(cls, task, env_config):
        return cls(task, env_config.episode_length, env_config.constant_reward)

    def _reset_state(self):
        pass

    def _observe(self):
        return np.array([self.t / self.episode_length, 0.0])

    def _advance(self, action):
        return [self.reward]


# environment 이름 → (모듈, 클래스)
_env_entrypoints = {
    "gaze_linear": ("gaze", "GazeEnv"),
    "gaze_nonlinear": ("gaze", "GazeEnv"),
    "socialnav": ("socialnav", "SocialNavEnv"),
    "racer": ("racer", "RacerEnv"),
    "constant": ("env", "ConstantRewardEnv"),
}


def env_entrypoint(env_name):
    module_name, class_name = _env_entrypoints[env_name]
    return getattr(import_module(module_name), class_name)


def is_env(env_name):
    return env_name in _env_entrypoints


def create_env(env_name, task, env_config):
    """
    config의 environment 이름으로 environment를 만든다.

    Args:
        env_name (str): gaze_linear / gaze_nonlinear / socialnav / racer / constant
        task (TaskSpec): 이 environment가 사용할 task
        env_config (EnvConfig): [env] 섹션
    """
    if not is_env(env_name):
        raise RuntimeError("Unknown environment (%s)" % env_name)
    return env_entrypoint(env_name).from_config(task, env_config)


def env_dims(env_name):
    """(obs_dim, action_dim, n_components)"""
    cls = env_entrypoint(env_name)
    return cls.obs_dim, cls.action_dim, cls.n_components
