import hashlib
from dataclasses import dataclass

import numpy as np
import pandas as pd
import torch

from posterior import infer_posterior, kl_to_prior, posterior_mean_estimate

# 학습 task 중 probe task를 고르는 고정 seed
PROBE_SEED = 20240
DEFAULT_EPS = 0.01
DEFAULT_WINDOW = 10


@dataclass
class CollapseRecord:
    """probe task 평균 차원별 KL과 posterior 분산"""

    iteration: int
    env_steps: int
    per_dim_kl: np.ndarray
    per_dim_posterior_var: np.ndarray


def select_probe_tasks(n_tasks, n_probe):
    rng = np.random.default_rng(PROBE_SEED)
    return sorted(rng.choice(n_tasks, size=min(n_probe, n_tasks), replace=False).tolist())


@torch.no_grad()
def record_collapse_metrics(encoder, probe_buffers, context_size, rng, iteration=0, env_steps=0):
    """
    probe task마다 새 context로 posterior를 구해 차원별 KL / 분산을 평균낸다.

    Args:
        encoder (ContextEncoder): task encoder
        probe_buffers (List[TaskBuffer]): probe task의 buffer
        context_size (int): context transition 수
        rng (np.random.Generator): context 샘플링용

    Returns:
        CollapseRecord
    """
    kls, variances = [], []
    for buffer in probe_buffers:
        context = buffer.sample(context_size, rng).context()
        posterior = infer_posterior(encoder, context)
        per_dim, _ = kl_to_prior(posterior)
        kls.append(per_dim.numpy())
        variances.append(posterior.var.numpy())
    return CollapseRecord(
        iteration=iteration,
        env_steps=env_steps,
        per_dim_kl=np.mean(kls, axis=0),
        per_dim_posterior_var=np.mean(variances, axis=0),
    )


def _kl_matrix(history):
    if isinstance(history, pd.DataFrame):
        cols = sorted((c for c in history.columns if c.startswith("kl_") and c[3:].isdigit()),
                      key=lambda c: int(c[3:]))
        return history[cols].to_numpy(dtype=np.float64)
    if len(history) and isinstance(history[0], CollapseRecord):
        return np.array([r.per_dim_kl for r in history], dtype=np.float64)
    return np.asarray(history, dtype=np.float64)


def _collapse_flags(history, eps, window):
    """flags[t, i]: record t-window..t 동안 dim i의 KL이 모두 eps 미만"""
    kl = _kl_matrix(history)
    if kl.ndim != 2:
        raise ValueError("KL history must be a [records, dims] table")
    below = kl < eps
    flags = np.zeros_like(below)
    for t in range(window, len(kl)):
        flags[t] = below[t - window : t + 1].all(axis=0)
    return flags


def detect_collapsed_dims(history, eps=DEFAULT_EPS, window=DEFAULT_WINDOW):
    """
    마지막 record 기준으로 붕괴된 latent 차원 집합

    Args:
        history: CollapseRecord 목록, [records, d] 배열, 또는 kl_<i> 열이 있는 metrics DataFrame
    """
    flags = _collapse_flags(history, eps, window)
    if len(flags) == 0:
        return set()
    return {int(i) for i in np.flatnonzero(flags[-1])}


def collapse_onsets(history, eps=DEFAULT_EPS, window=DEFAULT_WINDOW):
    """dim → 처음 붕괴로 판정된 record 번호"""
    flags = _collapse_flags(history, eps, window)
    onsets = {}
    for i in range(flags.shape[1] if flags.ndim == 2 else 0):
        hits = np.flatnonzero(flags[:, i])
        if len(hits):
            onsets[i] = int(hits[0])
    return onsets


@torch.no_grad()
def export_latent_scatter(encoder, tasks, buffers, rng, context_size=200):
    """
    task마다 context_size개 transition으로 z_hat을 구한 표와 차원별 mean ± std 요약

    Returns:
        table (pd.DataFrame): task_id, label, z_0, ..., z_{d-1}
        summary (str): "z_1: 0.041 ± 3.676" 형식의 줄들
    """
    rows = []
    for task, buffer in zip(tasks, buffers):
        context = buffer.sample(context_size, rng).context()
        z = posterior_mean_estimate(encoder, context).numpy()
        row = {"task_id": task.task_id, "label": task.label}
        row.update({f"z_{i}": float(v) for i, v in enumerate(z)})
        rows.append(row)
    table = pd.DataFrame(rows)
    return table, latent_summary(table)


def latent_summary(table):
    cols = [c for c in table.columns if c.startswith("z_")]
    lines = []
    for i, col in enumerate(cols):
        lines.append(f"z_{i + 1}: {table[col].mean():.3f} ± {table[col].std(ddof=0):.3f}")
    return "\n".join(lines)


@torch.no_grad()
def export_rbf_activation_map(rbf, dim, grid):
    """
    RBF layer의 dim번째 입력 차원에 대해 grid 위의 k개 neuron 출력을 계산한다.

    Returns:
        pd.DataFrame: z, a_0, ..., a_{k-1}
    """
    if not 0 <= dim < rbf.in_features:
        raise ValueError(f"dimension {dim} outside 0..{rbf.in_features - 1}")
    grid = torch.as_tensor(np.asarray(grid), dtype=rbf.centers.dtype)
    z = torch.zeros(len(grid), rbf.in_features, dtype=grid.dtype)
    z[:, dim] = grid
    out = rbf(z).reshape(len(grid), rbf.in_features, rbf.neurons)[:, dim]
    table = pd.DataFrame(out.numpy(), columns=[f"a_{j}" for j in range(rbf.neurons)])
    table.insert(0, "z", grid.numpy())
    return table


def parameter_digest(module):
    """state_dict 전체의 sha256 (진단 전후로 학습 상태가 바뀌지 않았는지 확인용)"""
    digest = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        digest.update(name.encode("utf-8"))
        digest.update(tensor.detach().cpu().numpy().tobytes())
    return digest.hexdigest()
