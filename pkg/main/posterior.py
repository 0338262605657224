from dataclasses import dataclass

import torch

from model import DTYPE


@dataclass
class PosteriorGaussian:
    """task representation z에 대한 대각 Gaussian q(z|c)

    Attributes:
        mean (torch.Tensor): [..., d]
        var (torch.Tensor): [..., d], 모든 원소 > 0
    """

    mean: torch.Tensor
    var: torch.Tensor

    @property
    def latent_dim(self):
        return self.mean.shape[-1]

    def detach(self):
        return PosteriorGaussian(self.mean.detach(), self.var.detach())


def prior(latent_dim, batch_shape=()):
    """표준정규 prior p(z) = N(0, I)"""
    shape = (*batch_shape, latent_dim)
    return PosteriorGaussian(torch.zeros(shape, dtype=DTYPE), torch.ones(shape, dtype=DTYPE))


def product_of_gaussians(means, variances):
    """transition별 Gaussian factor들의 곱으로 posterior를 만든다.

    Args:
        means (torch.Tensor): [..., N, d] factor 평균
        variances (torch.Tensor): [..., N, d] factor 분산 (> 0)

    Returns:
        PosteriorGaussian: [..., d], precision은 1/var의 합
    """
    if means.shape[-2] == 0:
        raise ValueError("product_of_gaussians needs at least one factor")
    if not bool((variances > 0).all()):
        raise ValueError("factor variances must be positive")
    precision = torch.reciprocal(variances).sum(dim=-2)
    var = torch.reciprocal(precision)
    mean = var * (means / variances).sum(dim=-2)
    return PosteriorGaussian(mean, var)


def sample_latent(post, noise):
    """reparameterization trick: z = mean + sqrt(var) * noise"""
    return post.mean + torch.sqrt(post.var) * noise


def kl_to_prior(post):
    """
    KL(q(z|c) || N(0, I))

    Returns:
        per_dim (torch.Tensor): [..., d]
        total (torch.Tensor): [...]
    """
    per_dim = 0.5 * (post.mean.pow(2) + post.var - 1.0 - torch.log(post.var))
    # log(var) 반올림 때문에 아주 작은 음수가 나올 수 있다
    per_dim = torch.clamp(per_dim, min=0.0)
    return per_dim, per_dim.sum(dim=-1)


def infer_posterior(encoder, context):
    """context [..., N, D]를 인코딩해서 product-of-Gaussians posterior를 구한다."""
    means, variances = encoder.encode_transition(context)
    return product_of_gaussians(means, variances)


def posterior_mean_estimate(encoder, context):
    """meta-test용 z 추정값: factor 평균 f^μ(c_n)의 산술평균

    Args:
        encoder (ContextEncoder): task encoder
        context (torch.Tensor): [N, D] transition들

    Returns:
        torch.Tensor: [d]
    """
    if context.shape[-2] == 0:
        raise ValueError("posterior_mean_estimate needs a non-empty context")
    with torch.no_grad():
        means, _ = encoder.encode_transition(context)
    return means.mean(dim=-2)
