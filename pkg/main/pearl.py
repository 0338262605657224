from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
import torch
import torch.nn as nn

from dataset import TaskBuffer, stack_batches
from env import create_env, env_dims
from loss import actor_loss, encoder_loss
from model import DTYPE, ContextEncoder
from optimizer import adam_step, backward, create_optimizer
from posterior import infer_posterior, posterior_mean_estimate, sample_latent
from sac import SacNetworks, seed_generator, soft_update_target
from sampler import collect_steps, rollout
from tasks import ConvexWeights, TaskSpec

# RNG stream 구분용 상수: default_rng([seed, stream, iteration, task])
COLLECT_STREAM = 0
EVAL_STREAM = 1
PROBE_STREAM = 2


class NotReadyError(RuntimeError):
    """buffer에 context를 만들 만큼 transition이 쌓이지 않았을 때 발생하는 예외"""


@dataclass
class AdaptationResult:
    exploration_return: float
    adapted_return: float
    z_hat: np.ndarray
    context_size: int


def stream_rng(seed, stream, iteration, task_id):
    return np.random.default_rng([seed, stream, iteration, task_id])


class PearlAgent(nn.Module):
    """task encoder q(z|c)와 z를 조건으로 받는 SAC 네트워크"""

    def __init__(self, encoder, nets):
        super().__init__()
        self.encoder = encoder
        self.nets = nets

    @classmethod
    def from_config(cls, config, obs_dim, action_dim):
        encoder = ContextEncoder(
            obs_dim,
            action_dim,
            config.latent_dim,
            hidden_sizes=config.network.encoder_hidden_sizes,
            activation=config.network.activation,
        )
        nets = SacNetworks.from_config(config, obs_dim, action_dim)
        return cls(encoder, nets)

    @property
    def latent_dim(self):
        return self.encoder.latent_dim

    @property
    def actor(self):
        return self.nets.actor


def meta_test(agent, env, adaptation_steps, rng, generator, record=False):
    """
    새 task에 대한 few-shot 적응

    1) prior에서 뽑은 z_e로 정확히 adaptation_steps step 탐험하며 context 수집
    2) z_hat = context factor 평균들의 평균
    3) z_hat으로 deterministic episode 하나를 실행

    record가 True이고 environment가 trajectory 기록을 지원하면 3)의 episode를 기록한다.

    Returns:
        AdaptationResult
    """
    z_e = torch.randn(agent.latent_dim, generator=generator, dtype=DTYPE)
    explore = collect_steps(env, agent.actor, z_e, adaptation_steps, rng, generator)
    assert len(explore) <= adaptation_steps
    if len(explore) == 0:
        z_hat = torch.zeros(agent.latent_dim, dtype=DTYPE)
    else:
        z_hat = posterior_mean_estimate(agent.encoder, explore.context())
    recording = record and hasattr(env, "record_trajectory")
    if recording:
        env.record_trajectory = True
    episode = rollout(
        env, agent.actor, z_hat, env.episode_length, int(rng.integers(2**31)), deterministic=True
    )
    if recording:
        env.record_trajectory = False
    return AdaptationResult(
        exploration_return=explore.total_return,
        adapted_return=episode.total_return,
        z_hat=z_hat.numpy(),
        context_size=len(explore),
    )


def adapt_to_weights(agent, env_name, env_config, weights, adaptation_steps, seed=0):
    """
    손으로 정한 convex 가중치 task에 적응하고, 적응된 episode의 trajectory를 돌려준다.

    Returns:
        result (AdaptationResult)
        trajectory (pd.DataFrame): socialnav이면 step별 기록, 그 외 빈 DataFrame
    """
    task = TaskSpec(family="convex", seed=-1, task_id=-1, weights=ConvexWeights(np.asarray(weights)))
    env = create_env(env_name, task, env_config)
    rng = np.random.default_rng(seed)
    result = meta_test(agent, env, adaptation_steps, rng, seed_generator(rng), record=True)
    if hasattr(env, "trajectory_frame"):
        return result, env.trajectory_frame()
    return result, pd.DataFrame()


class MetaLearner:
    """
    PEARL meta-training: task별 데이터 수집 + 네트워크 업데이트

    Args:
        config (RunConfig): 설정
        train_tasks (List[TaskSpec]): 학습 task
    """

    def __init__(self, config, train_tasks):
        self.config = config
        self.tasks = train_tasks
        self.env_name = config.run.environment
        self.obs_dim, self.action_dim, _ = env_dims(self.env_name)
        self.agent = PearlAgent.from_config(config, self.obs_dim, self.action_dim)

        lr = config.sac.lr
        self.actor_optimizer = create_optimizer(self.agent.nets.actor.parameters(), lr=lr)
        self.critic_optimizer = create_optimizer(self.agent.nets.critics.parameters(), lr=lr)
        self.encoder_optimizer = create_optimizer(
            self.agent.encoder.parameters(), lr=config.sac.encoder_lr
        )

        meta = config.meta
        self.buffers = [
            TaskBuffer(task.task_id, self.obs_dim, self.action_dim, meta.buffer_capacity, meta.recent_window)
            for task in train_tasks
        ]
        self.envs = [create_env(self.env_name, task, config.env) for task in train_tasks]

        self.rng = np.random.default_rng(config.run.seed)
        self.generator = torch.Generator()
        self.generator.manual_seed(config.run.seed)
        self.iteration = 0
        self.env_steps = 0
        self.updates = 0

    def _noise(self, *shape):
        return torch.randn(shape, generator=self.generator, dtype=DTYPE)

    @torch.no_grad()
    def _exploration_latent(self, buffer, rng, generator):
        d = self.agent.latent_dim
        noise = torch.randn(d, generator=generator, dtype=DTYPE)
        if len(buffer) == 0:
            return noise
        context = buffer.sample(self.config.meta.context_size, rng).context()
        posterior = infer_posterior(self.agent.encoder, context)
        return sample_latent(posterior, noise)

    def collect_for_task(self, index, rng, generator):
        """
        task 하나에 대해 trajectory K개를 수집해서 buffer에 넣는다.

        각 trajectory 전에 buffer에서 뽑은 context의 posterior로 z를 샘플링한다.
        (buffer가 비어 있으면 prior)

        Returns:
            int: 추가된 transition 수
        """
        buffer, env = self.buffers[index], self.envs[index]
        buffer.begin_collection()
        added = 0
        for _ in range(self.config.meta.trajectories_per_task):
            z = self._exploration_latent(buffer, rng, generator)
            traj = rollout(env, self.agent.actor, z, env.episode_length,
                           int(rng.integers(2**31)), generator)
            buffer.add_trajectory(traj)
            added += len(traj)
        return added

    def collect(self, indices, threads=1):
        """여러 task를 독립된 RNG stream으로 수집한다. (thread fan-out)"""

        def job(index):
            rng = stream_rng(self.config.run.seed, COLLECT_STREAM, self.iteration, index)
            return self.collect_for_task(index, rng, seed_generator(rng))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                added = list(executor.map(job, indices))
        else:
            added = [job(i) for i in indices]
        self.env_steps += sum(added)
        return sum(added)

    def _check_ready(self, indices):
        n = self.config.meta.context_size
        for i in indices:
            buffer = self.buffers[i]
            if len(buffer) < n or buffer.recent_size == 0:
                raise NotReadyError(
                    f"task {buffer.task_id} holds {len(buffer)} transitions "
                    f"({buffer.recent_size} recent), a context needs {n}"
                )

    def meta_train_step(self):
        """
        task minibatch 하나로 critic/encoder, actor, target을 한 번씩 갱신한다.

        Returns:
            dict: critic_loss, actor_loss, encoder_loss, kl_loss
        """
        meta, sac = self.config.meta, self.config.sac
        n_tasks = len(self.tasks)
        indices = self.rng.choice(
            n_tasks, size=meta.tasks_per_update, replace=n_tasks < meta.tasks_per_update
        )
        self._check_ready(indices)

        contexts = torch.stack(
            [self.buffers[i].sample_recent(meta.context_size, self.rng).context() for i in indices]
        )
        samples = []
        for i in indices:
            batch = self.buffers[i].sample(sac.batch_size, self.rng)
            batch.assert_task(self.buffers[i].task_id)
            samples.append(batch)
        batch = stack_batches(samples)

        nets = self.agent.nets
        posterior = infer_posterior(self.agent.encoder, contexts)
        z = sample_latent(posterior, self._noise(len(indices), self.agent.latent_dim))
        noise_shape = (len(indices), sac.batch_size, self.action_dim)

        self.critic_optimizer.zero_grad()
        self.encoder_optimizer.zero_grad()
        total, q_loss, kl = encoder_loss(
            nets, batch, posterior, z, sac.gamma, sac.kl_weight, self._noise(*noise_shape)
        )
        backward(total)
        adam_step(self.critic_optimizer, nets.critics.named_parameters(), self.iteration)
        adam_step(self.encoder_optimizer, self.agent.encoder.named_parameters(), self.iteration)

        self.actor_optimizer.zero_grad()
        pi_loss, _ = actor_loss(nets, batch, z.detach(), self._noise(*noise_shape))
        backward(pi_loss)
        adam_step(self.actor_optimizer, nets.actor.named_parameters(), self.iteration)

        soft_update_target(nets, sac.tau)
        self.updates += 1
        return {
            "critic_loss": q_loss.item(),
            "actor_loss": pi_loss.item(),
            "encoder_loss": total.item(),
            "kl_loss": kl.item(),
        }

    def train_iteration(self, threads=1):
        """
        수집 한 번 + updates_per_iter번의 meta_train_step

        첫 iteration에서는 모든 학습 task를 수집해서 buffer를 채운다.
        """
        meta = self.config.meta
        n_tasks = len(self.tasks)
        if self.iteration == 0:
            indices = list(range(n_tasks))
        else:
            size = min(meta.collect_tasks_per_iter, n_tasks)
            indices = sorted(self.rng.choice(n_tasks, size=size, replace=False).tolist())
        collected = self.collect(indices, threads)

        records = [self.meta_train_step() for _ in range(meta.updates_per_iter)]
        self.iteration += 1
        losses = pd.DataFrame(records).mean().to_dict()
        return {"iter": self.iteration, "env_steps": self.env_steps, "collected": collected, **losses}

    def evaluate_test_tasks(self, tasks, iteration=None, threads=1):
        """
        test task마다 meta_test를 실행한다.

        평가 RNG는 (seed, iteration, task)에서만 파생되므로 학습 RNG를 건드리지 않는다.

        Returns:
            pd.DataFrame: task_id, seed, exploration_return, adapted_return, z_<i>
        """
        iteration = self.iteration if iteration is None else iteration

        def job(task):
            rng = stream_rng(self.config.run.seed, EVAL_STREAM, iteration, task.task_id)
            env = create_env(self.env_name, task, self.config.env)
            result = meta_test(self.agent, env, self.config.meta.adaptation_steps, rng,
                               seed_generator(rng))
            row = {
                "task_id": task.task_id,
                "seed": task.seed,
                "exploration_return": result.exploration_return,
                "adapted_return": result.adapted_return,
            }
            row.update({f"z_{i}": float(v) for i, v in enumerate(result.z_hat)})
            return row

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as executor:
                rows = list(executor.map(job, tasks))
        else:
            rows = [job(task) for task in tasks]
        return pd.DataFrame(rows)

    def state_dict(self):
        return {
            "agent": self.agent.state_dict(),
            "actor_optimizer": self.actor_optimizer.state_dict(),
            "critic_optimizer": self.critic_optimizer.state_dict(),
            "encoder_optimizer": self.encoder_optimizer.state_dict(),
            "buffers": [buffer.state_dict() for buffer in self.buffers],
            "rng": self.rng.bit_generator.state,
            "generator": self.generator.get_state(),
            "iteration": self.iteration,
            "env_steps": self.env_steps,
            "updates": self.updates,
        }

    def load_state_dict(self, state):
        self.agent.load_state_dict(state["agent"])
        self.actor_optimizer.load_state_dict(state["actor_optimizer"])
        self.critic_optimizer.load_state_dict(state["critic_optimizer"])
        self.encoder_optimizer.load_state_dict(state["encoder_optimizer"])
        for buffer, buffer_state in zip(self.buffers, state["buffers"]):
            buffer.load_state_dict(buffer_state)
        self.rng.bit_generator.state = state["rng"]
        self.generator.set_state(state["generator"])
        self.iteration = state["iteration"]
        self.env_steps = state["env_steps"]
        self.updates = state["updates"]
