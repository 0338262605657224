import math
from dataclasses import dataclass
from typing import List

import torch
import torch.nn as nn
import torch.nn.functional as F

DTYPE = torch.float64

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
VAR_FLOOR = 1e-7
# tanh(x) rounds to exactly +-1 in float64 once |x| > ~19
_ACTION_BOUND = 1.0 - 1e-12


class DimensionError(ValueError):
    """텐서 shape이 레이어 입력 크기와 맞지 않을 때 발생하는 예외"""


# 사용 가능한 activation의 진입점
_activation_entrypoints = {
    "relu": nn.ReLU,
    "sigmoid": nn.Sigmoid,
    "tanh": nn.Tanh,
    "none": nn.Identity,
}


def create_activation(name: str) -> nn.Module:
    if name not in _activation_entrypoints:
        raise RuntimeError("Unknown activation (%s)" % name)
    return _activation_entrypoints[name]()


@dataclass
class MlpSpec:
    """MLP 구조 정의

    Attributes:
        layer_widths (List[int]): 입력 크기부터 출력 크기까지의 폭, 예) [obs_dim, 300, 300, 1]
        hidden_activation (str): relu / sigmoid / tanh / none
        output_activation (str): none / tanh
    """

    layer_widths: List[int]
    hidden_activation: str = "relu"
    output_activation: str = "none"

    def __post_init__(self):
        if len(self.layer_widths) < 2:
            raise DimensionError("MlpSpec needs an input width and at least one layer")
        if any(w < 1 for w in self.layer_widths):
            raise DimensionError(f"layer widths must be >= 1, {self.layer_widths}")
        if self.output_activation not in ("none", "tanh"):
            raise RuntimeError("Unknown output activation (%s)" % self.output_activation)


class MLP(nn.Module):
    def __init__(self, spec: MlpSpec):
        """
        Args:
            spec (MlpSpec): 레이어 폭과 activation
        """
        super().__init__()
        self.spec = spec
        widths = spec.layer_widths
        self.layers = nn.ModuleList(
            [nn.Linear(i, o, dtype=DTYPE) for i, o in zip(widths[:-1], widths[1:])]
        )
        self.hidden_activation = create_activation(spec.hidden_activation)
        self.output_activation = create_activation(spec.output_activation)

    @property
    def in_features(self) -> int:
        return self.spec.layer_widths[0]

    @property
    def out_features(self) -> int:
        return self.spec.layer_widths[-1]

    def forward(self, x):
        """
        Args:
            x (torch.Tensor): [..., layer_widths[0]] 입력
        Returns:
            x (torch.Tensor): [..., layer_widths[-1]] 출력
        """
        for idx, layer in enumerate(self.layers):
            if x.shape[-1] != layer.in_features:
                raise DimensionError(
                    f"layer {idx} expects last dimension {layer.in_features}, got {x.shape[-1]}"
                )
            x = layer(x)
            if idx < len(self.layers) - 1:
                x = self.hidden_activation(x)
        return self.output_activation(x)


def tanh_gaussian_sample(mean, log_std, noise, log_std_min=LOG_STD_MIN, log_std_max=LOG_STD_MAX):
    """tanh로 squash된 Gaussian에서 reparameterization trick으로 샘플링한다.

    Args:
        mean (torch.Tensor): [..., k]
        log_std (torch.Tensor): [..., k], [log_std_min, log_std_max]로 clamp
        noise (torch.Tensor): [..., k] 표준정규 noise

    Returns:
        action (torch.Tensor): (-1, 1)^k 범위의 action
        log_prob (torch.Tensor): [...] 샘플별 log density (tanh 변수변환 보정 포함)
    """
    if mean.shape != log_std.shape or mean.shape != noise.shape:
        raise DimensionError(
            f"mean {tuple(mean.shape)}, log_std {tuple(log_std.shape)} and noise "
            f"{tuple(noise.shape)} must match"
        )
    log_std = torch.clamp(log_std, log_std_min, log_std_max)
    std = torch.exp(log_std)
    pre_tanh = mean + std * noise
    action = torch.clamp(torch.tanh(pre_tanh), -_ACTION_BOUND, _ACTION_BOUND)

    gaussian_log_prob = -0.5 * noise.pow(2) - log_std - 0.5 * math.log(2 * math.pi)
    # log(1 - tanh(x)^2) = 2 * (log 2 - x - softplus(-2x))
    log_det = 2.0 * (math.log(2.0) - pre_tanh - F.softplus(-2.0 * pre_tanh))
    log_prob = (gaussian_log_prob - log_det).sum(dim=-1)
    return action, log_prob


class TanhGaussianPolicy(nn.Module):
    """task representation z를 조건으로 받는 actor π(a|s, z̃)"""

    def __init__(self, obs_dim, action_dim, uplift, uplift_dim, hidden_sizes=(300, 300, 300),
                 activation="relu", log_std_min=LOG_STD_MIN, log_std_max=LOG_STD_MAX):
        super().__init__()
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.uplift = uplift
        self.log_std_min = log_std_min
        self.log_std_max = log_std_max
        self.body = MLP(
            MlpSpec([obs_dim + uplift_dim, *hidden_sizes, 2 * action_dim], activation)
        )

    def distribution(self, obs, z):
        out = self.body(torch.cat([obs, self.uplift(z)], dim=-1))
        mean, log_std = out.chunk(2, dim=-1)
        return mean, log_std

    def forward(self, obs, z, noise):
        """
        Returns:
            action, log_prob, mean
        """
        mean, log_std = self.distribution(obs, z)
        action, log_prob = tanh_gaussian_sample(
            mean, log_std, noise, self.log_std_min, self.log_std_max
        )
        return action, log_prob, mean

    @torch.no_grad()
    def act(self, obs, z, noise=None):
        """environment 실행용 단일 action (noise가 없으면 deterministic tanh(mean))"""
        mean, log_std = self.distribution(obs, z)
        if noise is None:
            return torch.clamp(torch.tanh(mean), -_ACTION_BOUND, _ACTION_BOUND)
        action, _ = tanh_gaussian_sample(mean, log_std, noise, self.log_std_min, self.log_std_max)
        return action


class QNetwork(nn.Module):
    """critic Q(s, a, z̃)"""

    def __init__(self, obs_dim, action_dim, uplift, uplift_dim, hidden_sizes=(300, 300, 300),
                 activation="relu"):
        super().__init__()
        self.uplift = uplift
        self.body = MLP(MlpSpec([obs_dim + action_dim + uplift_dim, *hidden_sizes, 1], activation))

    def forward(self, obs, action, z):
        x = torch.cat([obs, action, self.uplift(z)], dim=-1)
        return self.body(x).squeeze(-1)


class ContextEncoder(nn.Module):
    """transition 하나를 Gaussian factor (f^μ, f^σ)로 인코딩하는 task encoder"""

    def __init__(self, obs_dim, action_dim, latent_dim, hidden_sizes=(200, 200, 200),
                 activation="relu", var_floor=VAR_FLOOR):
        super().__init__()
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.latent_dim = latent_dim
        self.var_floor = var_floor
        self.context_dim = 2 * obs_dim + action_dim + 1
        self.body = MLP(MlpSpec([self.context_dim, *hidden_sizes, 2 * latent_dim], activation))

    def encode_transition(self, context):
        """
        Args:
            context (torch.Tensor): [..., 2*obs_dim + action_dim + 1], (s, a, r, s') 순서로 concat
        Returns:
            mean (torch.Tensor): [..., latent_dim]
            var (torch.Tensor): [..., latent_dim], softplus + floor
        """
        if context.shape[-1] != self.context_dim:
            raise DimensionError(
                f"encoder expects transitions of width {self.context_dim}, got {context.shape[-1]}"
            )
        out = self.body(context)
        mean, raw_var = out.split(self.latent_dim, dim=-1)
        var = F.softplus(raw_var) + self.var_floor
        return mean, var

    def forward(self, context):
        return self.encode_transition(context)
