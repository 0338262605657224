from collections import deque
from dataclasses import dataclass

import numpy as np
import torch

from model import DTYPE

# 버퍼 배열을 처음 만들 때의 크기 (capacity까지 두 배씩 늘린다)
_INITIAL_ALLOCATION = 1024


@dataclass
class TransitionBatch:
    """
    한 task에서 샘플링한 transition 묶음

    Attributes:
        obs (torch.Tensor): [B, obs_dim]
        actions (torch.Tensor): [B, action_dim]
        rewards (torch.Tensor): [B]
        next_obs (torch.Tensor): [B, obs_dim]
        task_ids (np.ndarray): [B], 모든 원소가 같은 task id
    """

    obs: torch.Tensor
    actions: torch.Tensor
    rewards: torch.Tensor
    next_obs: torch.Tensor
    task_ids: np.ndarray

    def __len__(self):
        return self.rewards.shape[-1]

    def assert_task(self, task_id):
        assert (self.task_ids == task_id).all(), (
            f"batch for task {task_id} contains transitions of tasks "
            f"{sorted(set(self.task_ids.ravel().tolist()))}"
        )

    def context(self):
        """encoder 입력용 [..., 2*obs_dim + action_dim + 1] 텐서"""
        return make_context(self.obs, self.actions, self.rewards, self.next_obs)


def make_context(obs, actions, rewards, next_obs):
    """(s, a, r, s') 순서로 이어 붙인 context 텐서를 만든다."""
    return torch.cat([obs, actions, rewards.unsqueeze(-1), next_obs], dim=-1)


def stack_batches(batches):
    """task별 batch [B, ...]들을 [T, B, ...]로 쌓는다."""
    return TransitionBatch(
        obs=torch.stack([b.obs for b in batches]),
        actions=torch.stack([b.actions for b in batches]),
        rewards=torch.stack([b.rewards for b in batches]),
        next_obs=torch.stack([b.next_obs for b in batches]),
        task_ids=np.stack([b.task_ids for b in batches]),
    )


class TaskBuffer:
    """
    task 하나의 replay buffer B^τ

    전체 transition은 FIFO ring buffer에 쌓고, 가장 최근 수집 iteration에서 모은
    transition의 위치는 recent window에 따로 기록한다.
    """

    def __init__(self, task_id, obs_dim, action_dim, capacity=100_000, recent_window=100_000):
        if capacity < 1 or recent_window < 1:
            raise ValueError("buffer capacity and recent window must be >= 1")
        self.task_id = task_id
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.capacity = capacity
        self.recent_window = recent_window
        self._allocate(min(capacity, _INITIAL_ALLOCATION))
        self._ptr = 0
        self._size = 0
        # window가 capacity보다 길면 recent 위치가 ring에서 덮어써질 수 있다
        self.recent = deque(maxlen=min(recent_window, capacity))

    def _allocate(self, n):
        self.obs = np.zeros((n, self.obs_dim))
        self.actions = np.zeros((n, self.action_dim))
        self.rewards = np.zeros(n)
        self.next_obs = np.zeros((n, self.obs_dim))

    def _grow(self):
        n = min(self.capacity, 2 * len(self.rewards))
        old = (self.obs, self.actions, self.rewards, self.next_obs)
        self._allocate(n)
        for new, prev in zip((self.obs, self.actions, self.rewards, self.next_obs), old):
            new[: len(prev)] = prev

    def __len__(self):
        return self._size

    @property
    def recent_size(self):
        return len(self.recent)

    def begin_collection(self):
        """새 수집 iteration을 시작하면서 recent window를 비운다."""
        self.recent.clear()

    def add(self, obs, action, reward, next_obs):
        if self._ptr >= len(self.rewards) and len(self.rewards) < self.capacity:
            self._grow()
        i = self._ptr
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.recent.append(i)
        self._ptr = (self._ptr + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def add_trajectory(self, trajectory):
        for i in range(len(trajectory)):
            self.add(
                trajectory.obs[i],
                trajectory.actions[i],
                trajectory.rewards[i],
                trajectory.next_obs[i],
            )

    def _gather(self, idx):
        return TransitionBatch(
            obs=torch.as_tensor(self.obs[idx], dtype=DTYPE),
            actions=torch.as_tensor(self.actions[idx], dtype=DTYPE),
            rewards=torch.as_tensor(self.rewards[idx], dtype=DTYPE),
            next_obs=torch.as_tensor(self.next_obs[idx], dtype=DTYPE),
            task_ids=np.full(len(idx), self.task_id),
        )

    def sample(self, batch_size, rng):
        """전체 buffer에서 uniform하게 (복원추출로) batch_size개를 뽑는다."""
        if self._size == 0:
            raise ValueError(f"cannot sample from the empty buffer of task {self.task_id}")
        idx = rng.integers(0, self._size, size=batch_size)
        return self._gather(idx)

    def sample_recent(self, batch_size, rng):
        """recent window에서 context를 뽑는다. window가 batch보다 작으면 복원추출."""
        if not self.recent:
            raise ValueError(f"task {self.task_id} has no recently collected transitions")
        window = np.fromiter(self.recent, dtype=np.int64)
        idx = rng.choice(window, size=batch_size, replace=len(window) < batch_size)
        return self._gather(idx)

    def state_dict(self):
        n = self._size
        return {
            "task_id": self.task_id,
            "ptr": self._ptr,
            "size": n,
            "obs": self.obs[:n].copy(),
            "actions": self.actions[:n].copy(),
            "rewards": self.rewards[:n].copy(),
            "next_obs": self.next_obs[:n].copy(),
            "recent": list(self.recent),
        }

    def load_state_dict(self, state):
        n = state["size"]
        self._allocate(max(min(self.capacity, _INITIAL_ALLOCATION), n))
        self.obs[:n] = state["obs"]
        self.actions[:n] = state["actions"]
        self.rewards[:n] = state["rewards"]
        self.next_obs[:n] = state["next_obs"]
        self._ptr = state["ptr"]
        self._size = n
        self.recent.clear()
        self.recent.extend(state["recent"])
