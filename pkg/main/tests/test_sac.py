import numpy as np
import pytest
import torch

from config import RunConfig
from conftest import random_batch
from dataset import TaskBuffer
from loss import actor_loss
from model import DTYPE
from optimizer import adam_step, backward, create_optimizer
from rbf import RBFLayer
from sac import SacLearner, SacNetworks, seed_generator, soft_update_target


def test_each_network_owns_its_uplift():
    nets = SacNetworks(3, 2, 2, algorithm="rbf_pearl", rbf_neurons=3, hidden_sizes=(8,))
    uplifts = [nets.actor.uplift, *[c.uplift for c in nets.critics], *[c.uplift for c in nets.target_critics]]
    assert all(isinstance(u, RBFLayer) for u in uplifts)
    assert len({id(u) for u in uplifts}) == 5
    assert all(not p.requires_grad for p in nets.target_critics.parameters())


def test_single_critic_mode_and_alpha_validation():
    nets = SacNetworks(3, 2, 2, twin_critics=False, hidden_sizes=(8,))
    assert len(nets.critics) == 1
    with pytest.raises(ValueError):
        SacNetworks(3, 2, 2, alpha=0.0, hidden_sizes=(8,))


def test_soft_update_recurrence():
    nets = SacNetworks(1, 1, 1, algorithm="vanilla_pearl", hidden_sizes=(1,), twin_critics=False)
    with torch.no_grad():
        for p in nets.critics.parameters():
            p.fill_(1.0)
        for p in nets.target_critics.parameters():
            p.fill_(0.0)
    soft_update_target(nets, 0.5)
    assert all(bool((p == 0.5).all()) for p in nets.target_critics.parameters())
    soft_update_target(nets, 0.5)
    assert all(bool((p == 0.75).all()) for p in nets.target_critics.parameters())


def test_soft_update_tau_one_copies_and_fixed_point():
    torch.manual_seed(0)
    nets = SacNetworks(3, 2, 2, algorithm="rbf_pearl", rbf_neurons=3, hidden_sizes=(8,))
    with torch.no_grad():
        for p in nets.critics.parameters():
            p.add_(1.0)
    soft_update_target(nets, 1.0)
    online = dict(nets.critics.named_parameters())
    for name, p in nets.target_critics.named_parameters():
        assert torch.equal(p, online[name])
    before = [p.clone() for p in nets.target_critics.parameters()]
    soft_update_target(nets, 0.005)
    soft_update_target(nets, 0.005)
    assert all(torch.equal(a, b) for a, b in zip(before, nets.target_critics.parameters()))
    with pytest.raises(ValueError):
        soft_update_target(nets, 0.0)


def test_one_actor_update_decreases_loss_sign_test():
    # bandit 형태: 하나의 state, 고정된 critic
    decreases = 0
    for trial in range(100):
        torch.manual_seed(trial)
        g = torch.Generator().manual_seed(trial)
        nets = SacNetworks(2, 1, 0, algorithm="vanilla_pearl", hidden_sizes=(16, 16))
        batch = random_batch(32, 2, 1, g)
        batch.obs = batch.obs[:1].expand(32, 2)
        z = torch.zeros(0, dtype=DTYPE)
        noise = torch.randn(32, 1, generator=g, dtype=DTYPE)
        optimizer = create_optimizer(nets.actor.parameters(), lr=1e-3)

        before, _ = actor_loss(nets, batch, z, noise)
        optimizer.zero_grad()
        backward(before)
        adam_step(optimizer, nets.actor.named_parameters(), trial)
        with torch.no_grad():
            after, _ = actor_loss(nets, batch, z, noise)
        decreases += int(after.item() < before.item())
    assert decreases >= 63


def test_sac_learner_update_on_single_task():
    config = RunConfig()
    config.network.hidden_sizes = (8, 8)
    config.sac.batch_size = 16
    rng = np.random.default_rng(0)
    learner = SacLearner(config, 3, 2, rng, seed_generator(rng))
    buffer = TaskBuffer(5, 3, 2, capacity=100)
    for i in range(20):
        buffer.add(rng.normal(size=3), rng.uniform(-1, 1, size=2), float(i), rng.normal(size=3))
    record = learner.update(buffer)
    assert set(record) == {"critic_loss", "actor_loss"}
    assert all(np.isfinite(v) for v in record.values())
    assert learner.updates == 1
    assert learner.nets.latent_dim == 0


def test_seed_generator_is_reproducible():
    a = seed_generator(np.random.default_rng(4))
    b = seed_generator(np.random.default_rng(4))
    assert torch.equal(torch.randn(3, generator=a), torch.randn(3, generator=b))
