import copy

import numpy as np
import torch
import torch.nn as nn

from loss import actor_loss, critic_loss
from model import DTYPE, QNetwork, TanhGaussianPolicy
from optimizer import adam_step, backward, create_optimizer
from rbf import create_uplift


class SacNetworks(nn.Module):
    """
    task representation을 조건으로 받는 SAC 네트워크 묶음

    actor, critic, target critic은 각자 자신의 latent uplift를 가진다.
    (pearl_parity: Linear + ReLU, rbf_pearl*: RBF layer, vanilla_pearl: 없음)
    """

    def __init__(self, obs_dim, action_dim, latent_dim, algorithm="rbf_pearl", rbf_neurons=9,
                 hidden_sizes=(300, 300, 300), activation="relu", rbf_interval=(-5.0, 5.0),
                 twin_critics=True, alpha=0.2, log_std_min=-20.0, log_std_max=2.0):
        super().__init__()
        if alpha <= 0:
            raise ValueError(f"entropy coefficient must be positive, got {alpha}")
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.latent_dim = latent_dim
        self.algorithm = algorithm
        self.alpha = alpha

        uplift, width = create_uplift(algorithm, latent_dim, rbf_neurons, rbf_interval)
        self.actor = TanhGaussianPolicy(
            obs_dim, action_dim, uplift, width, hidden_sizes, activation, log_std_min, log_std_max
        )
        n_critics = 2 if twin_critics else 1
        critics = []
        for _ in range(n_critics):
            uplift, width = create_uplift(algorithm, latent_dim, rbf_neurons, rbf_interval)
            critics.append(QNetwork(obs_dim, action_dim, uplift, width, hidden_sizes, activation))
        self.critics = nn.ModuleList(critics)
        self.target_critics = copy.deepcopy(self.critics)
        self.target_critics.requires_grad_(False)

    @classmethod
    def from_config(cls, config, obs_dim, action_dim, latent_dim=None):
        latent_dim = config.latent_dim if latent_dim is None else latent_dim
        return cls(
            obs_dim,
            action_dim,
            latent_dim,
            algorithm=config.run.algorithm,
            rbf_neurons=config.rbf_neurons,
            hidden_sizes=config.network.hidden_sizes,
            activation=config.network.activation,
            rbf_interval=config.network.rbf_interval,
            twin_critics=config.sac.twin_critics,
            alpha=config.sac.alpha,
            log_std_min=config.sac.log_std_min,
            log_std_max=config.sac.log_std_max,
        )

    def q_min(self, obs, action, z, target=False):
        critics = self.target_critics if target else self.critics
        qs = [critic(obs, action, z) for critic in critics]
        q = qs[0]
        for other in qs[1:]:
            q = torch.minimum(q, other)
        return q


@torch.no_grad()
def soft_update_target(nets, tau):
    """target ← (1 - τ)·target + τ·online (parameter와 buffer 모두)"""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    online = dict(nets.critics.named_parameters())
    online.update(nets.critics.named_buffers())
    for name, target in list(nets.target_critics.named_parameters()) + list(
        nets.target_critics.named_buffers()
    ):
        target.lerp_(online[name], tau)


class SacLearner:
    """
    task 하나에 대한 일반 SAC (SAC-200 baseline, step-budget baseline에서 사용)

    latent_dim = 0으로 만든 SacNetworks를 쓰므로 z는 크기 0인 텐서다.
    네트워크 초기화는 전역 torch RNG가 아니라 rng에서 뽑은 seed로 한다.
    """

    def __init__(self, config, obs_dim, action_dim, rng, generator):
        self.config = config
        with torch.random.fork_rng():
            torch.manual_seed(int(rng.integers(2**31)))
            self.nets = SacNetworks.from_config(config, obs_dim, action_dim, latent_dim=0)
        self.actor_optimizer = create_optimizer(self.nets.actor.parameters(), lr=config.sac.lr)
        self.critic_optimizer = create_optimizer(self.nets.critics.parameters(), lr=config.sac.lr)
        self.rng = rng
        self.generator = generator
        self.updates = 0
        self.z = torch.zeros(0, dtype=DTYPE)

    def _noise(self, shape):
        return torch.randn(shape, generator=self.generator, dtype=DTYPE)

    def update(self, buffer):
        """buffer에서 batch 하나를 뽑아 critic, actor, target을 한 번씩 갱신한다."""
        sac = self.config.sac
        batch = buffer.sample(sac.batch_size, self.rng)
        batch.assert_task(buffer.task_id)
        noise_shape = (len(batch), self.nets.action_dim)

        self.critic_optimizer.zero_grad()
        q_loss = critic_loss(self.nets, batch, self.z, sac.gamma, self._noise(noise_shape))
        backward(q_loss)
        adam_step(self.critic_optimizer, self.nets.critics.named_parameters(), self.updates)

        self.actor_optimizer.zero_grad()
        pi_loss, _ = actor_loss(self.nets, batch, self.z, self._noise(noise_shape))
        backward(pi_loss)
        adam_step(self.actor_optimizer, self.nets.actor.named_parameters(), self.updates)

        soft_update_target(self.nets, sac.tau)
        self.updates += 1
        return {"critic_loss": q_loss.item(), "actor_loss": pi_loss.item()}


def seed_generator(rng):
    """numpy Generator에서 torch.Generator를 파생한다."""
    generator = torch.Generator()
    generator.manual_seed(int(rng.integers(np.iinfo(np.int64).max)))
    return generator
