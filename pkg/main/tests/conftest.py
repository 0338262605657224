import os
import sys

import numpy as np
import pytest
import torch

# main/ 의 스크립트들은 서로를 top-level 모듈로 import 한다
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import parse_config  # noqa: E402
from dataset import TransitionBatch  # noqa: E402
from model import DTYPE  # noqa: E402

TINY_CONFIG = """
[run]
environment = constant
algorithm = rbf_pearl
seed = 3
name = tiny

[meta]
n_train_tasks = 3
n_test_tasks = 2
adaptation_steps = 10
trajectories_per_task = 1
context_size = 8
updates_per_iter = 2
tasks_per_update = 2
collect_tasks_per_iter = 2
total_env_steps = 50
eval_interval = 2
buffer_capacity = 500
recent_window = 50
probe_tasks = 2

[network]
hidden_sizes = 8, 8
encoder_hidden_sizes = 8, 8

[sac]
batch_size = 8

[env]
episode_length = 10

[logging]
tensorboard = false
"""


@pytest.fixture
def tiny_config():
    return parse_config(TINY_CONFIG, path="tiny.ini")


@pytest.fixture
def make_tiny_config():
    def _make(**sections):
        """sections: {"run": {"environment": "racer"}, ...} 로 TINY_CONFIG를 덮어쓴다."""
        config = parse_config(TINY_CONFIG, path="tiny.ini")
        for section, values in sections.items():
            for key, value in values.items():
                setattr(getattr(config, section), key, value)
        return config.validate()

    return _make


def random_batch(n, obs_dim, action_dim, generator, task_id=0):
    return TransitionBatch(
        obs=torch.randn(n, obs_dim, generator=generator, dtype=DTYPE),
        actions=torch.rand(n, action_dim, generator=generator, dtype=DTYPE) * 2 - 1,
        rewards=torch.randn(n, generator=generator, dtype=DTYPE),
        next_obs=torch.randn(n, obs_dim, generator=generator, dtype=DTYPE),
        task_ids=np.full(n, task_id),
    )


@pytest.fixture
def generator():
    g = torch.Generator()
    g.manual_seed(0)
    return g
