import math

import torch
import torch.nn as nn

from config import ConfigError
from model import DTYPE, DimensionError

DEFAULT_INTERVAL = (-5.0, 5.0)


class NonFiniteInputError(ArithmeticError):
    """RBF layer에 NaN/inf task representation이 들어왔을 때 발생하는 예외"""


class RBFLayer(nn.Module):
    """latent 좌표마다 k개의 Gaussian neuron으로 펼치는 RBF layer

    z̃[i*k + j] = exp(-δ[i][j] * (z[i] - c[i][j])^2)

    trainable이면 centers와 log δ가 nn.Parameter이고, 아니면 buffer로 고정된다.
    """

    def __init__(self, centers, scales, trainable=False):
        """
        Args:
            centers (torch.Tensor): [d, k] 중심 c
            scales (torch.Tensor): [d, k] 양수 scale δ
            trainable (bool): gradient descent로 c, δ를 학습할지 여부
        """
        super().__init__()
        centers = torch.as_tensor(centers, dtype=DTYPE)
        scales = torch.as_tensor(scales, dtype=DTYPE)
        if centers.shape != scales.shape or centers.dim() != 2:
            raise ConfigError(
                f"centers {tuple(centers.shape)} and scales {tuple(scales.shape)} must both be [d, k]"
            )
        if not bool((scales > 0).all()):
            raise ConfigError("RBF scales must be positive")
        self.trainable = trainable
        if trainable:
            self.centers = nn.Parameter(centers.clone())
            self.log_scales = nn.Parameter(torch.log(scales))
        else:
            self.register_buffer("centers", centers.clone())
            self.register_buffer("fixed_scales", scales.clone())

    @property
    def in_features(self) -> int:
        return self.centers.shape[0]

    @property
    def neurons(self) -> int:
        return self.centers.shape[1]

    @property
    def out_features(self) -> int:
        return self.in_features * self.neurons

    @property
    def scales(self):
        if self.trainable:
            return torch.exp(self.log_scales)
        return self.fixed_scales

    def forward(self, z):
        """
        Args:
            z (torch.Tensor): [..., d]
        Returns:
            torch.Tensor: [..., d*k], 각 값은 (0, 1]
        """
        if z.shape[-1] != self.in_features:
            raise DimensionError(f"RBF layer expects {self.in_features} inputs, got {z.shape[-1]}")
        if not bool(torch.isfinite(z).all()):
            raise NonFiniteInputError("non-finite task representation fed to the RBF layer")
        diff = z.unsqueeze(-1) - self.centers
        out = torch.exp(-self.scales * diff.pow(2))
        return out.flatten(start_dim=-2)


def _evenly_spaced(d, k, interval):
    if k < 2:
        raise ConfigError(f"RBF layer needs at least 2 neurons per dimension, got {k}")
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ConfigError(f"RBF interval must satisfy lo < hi, got {interval}")
    spacing = (hi - lo) / (k - 1)
    centers = torch.linspace(lo, hi, k, dtype=DTYPE).repeat(d, 1)
    # 이웃한 두 neuron이 중간 지점에서 둘 다 0.5를 출력하도록
    scale = 4.0 * math.log(2.0) / spacing**2
    scales = torch.full((d, k), scale, dtype=DTYPE)
    return centers, scales


def rbf_init_fixed(d, k, interval=DEFAULT_INTERVAL):
    """구간 [lo, hi]에 중심을 균등 배치한 고정 RBF layer (RBF-PEARL-fp)"""
    centers, scales = _evenly_spaced(d, k, interval)
    return RBFLayer(centers, scales, trainable=False)


def rbf_init_trainable(d, k, interval=DEFAULT_INTERVAL):
    """고정 버전과 같은 값으로 초기화하고 c, log δ를 학습하는 RBF layer"""
    centers, scales = _evenly_spaced(d, k, interval)
    return RBFLayer(centers, scales, trainable=True)


def _parity_layer(d, k, interval=None):
    return nn.Sequential(nn.Linear(d, k * d, dtype=DTYPE), nn.ReLU())


def _identity(d, k=None, interval=None):
    return nn.Identity()


# algorithm variant 별 latent uplift 생성 함수와 출력 크기
_uplift_entrypoints = {
    "pearl_parity": (_parity_layer, lambda d, k: d * k),
    "vanilla_pearl": (_identity, lambda d, k: d),
    "rbf_pearl": (rbf_init_trainable, lambda d, k: d * k),
    "rbf_pearl_fixed": (rbf_init_fixed, lambda d, k: d * k),
}


def is_uplift(variant):
    return variant in _uplift_entrypoints


def create_uplift(variant, d, k, interval=DEFAULT_INTERVAL):
    """
    actor/critic 앞단에 붙는 latent uplift 모듈을 만든다.

    Args:
        variant (str): pearl_parity / vanilla_pearl / rbf_pearl / rbf_pearl_fixed
        d (int): latent 차원
        k (int): 차원당 neuron 수

    Returns:
        (nn.Module, int): uplift 모듈과 출력 크기
    """
    if not is_uplift(variant):
        raise RuntimeError("Unknown algorithm variant (%s)" % variant)
    create_fn, width_fn = _uplift_entrypoints[variant]
    if d == 0:
        return nn.Identity(), 0
    return create_fn(d, k, interval), width_fn(d, k)
