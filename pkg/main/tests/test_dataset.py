import numpy as np
import pytest
import torch

from dataset import TaskBuffer, make_context, stack_batches


def fill(buffer, n, start=0):
    for i in range(start, start + n):
        buffer.add(np.full(buffer.obs_dim, i), np.full(buffer.action_dim, 0.5), float(i), np.full(buffer.obs_dim, i + 1))


def test_ring_buffer_overwrites_oldest():
    buffer = TaskBuffer(0, 2, 1, capacity=5)
    fill(buffer, 7)
    assert len(buffer) == 5
    assert sorted(buffer.rewards[:5].tolist()) == [2.0, 3.0, 4.0, 5.0, 6.0]


def test_buffer_grows_past_initial_allocation():
    buffer = TaskBuffer(0, 1, 1, capacity=3000)
    fill(buffer, 2500)
    assert len(buffer) == 2500
    assert buffer.rewards[2499] == 2499.0


def test_samples_come_from_one_task():
    buffer = TaskBuffer(4, 2, 1)
    fill(buffer, 10)
    batch = buffer.sample(32, np.random.default_rng(0))
    assert len(batch) == 32
    batch.assert_task(4)
    with pytest.raises(AssertionError):
        batch.assert_task(5)


def test_recent_window_tracks_last_collection():
    buffer = TaskBuffer(0, 2, 1, recent_window=4)
    fill(buffer, 10)
    assert buffer.recent_size == 4
    batch = buffer.sample_recent(100, np.random.default_rng(0))
    assert set(batch.rewards.tolist()) <= {6.0, 7.0, 8.0, 9.0}
    buffer.begin_collection()
    assert buffer.recent_size == 0
    with pytest.raises(ValueError):
        buffer.sample_recent(4, np.random.default_rng(0))
    fill(buffer, 2, start=100)
    assert set(buffer.sample_recent(8, np.random.default_rng(1)).rewards.tolist()) <= {100.0, 101.0}


def test_recent_sample_without_replacement_when_window_is_large():
    buffer = TaskBuffer(0, 1, 1, recent_window=50)
    fill(buffer, 50)
    batch = buffer.sample_recent(50, np.random.default_rng(0))
    assert sorted(batch.rewards.tolist()) == [float(i) for i in range(50)]


def test_empty_buffer_cannot_sample():
    with pytest.raises(ValueError):
        TaskBuffer(0, 2, 1).sample(4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        TaskBuffer(0, 2, 1, capacity=0)


def test_sampling_is_reproducible():
    buffer = TaskBuffer(0, 3, 2)
    fill(buffer, 30)
    a = buffer.sample(16, np.random.default_rng(7))
    b = buffer.sample(16, np.random.default_rng(7))
    assert torch.equal(a.obs, b.obs) and torch.equal(a.rewards, b.rewards)


def test_state_dict_restores_contents():
    buffer = TaskBuffer(2, 3, 2, capacity=20, recent_window=5)
    fill(buffer, 25)
    restored = TaskBuffer(2, 3, 2, capacity=20, recent_window=5)
    restored.load_state_dict(buffer.state_dict())
    assert len(restored) == 20
    assert list(restored.recent) == list(buffer.recent)
    assert np.array_equal(restored.obs[:20], buffer.obs[:20])
    fill(buffer, 1, start=99)
    fill(restored, 1, start=99)
    assert np.array_equal(restored.rewards[:20], buffer.rewards[:20])


def test_context_layout_and_stacking():
    buffer = TaskBuffer(0, 2, 1)
    fill(buffer, 5)
    batch = buffer.sample(4, np.random.default_rng(0))
    context = batch.context()
    assert context.shape == (4, 2 * 2 + 1 + 1)
    assert torch.equal(context[:, 3], batch.rewards)
    assert torch.equal(context, make_context(batch.obs, batch.actions, batch.rewards, batch.next_obs))
    stacked = stack_batches([batch, batch])
    assert stacked.obs.shape == (2, 4, 2)
    assert len(stacked) == 4
