import torch

from posterior import kl_to_prior


def _broadcast_latent(z, like):
    """task별 z [..., d]를 batch의 transition 축으로 펼친다. ([..., B, d])"""
    if z.dim() == like.dim() - 1:
        z = z.unsqueeze(-2)
    return z.expand(*like.shape[:-1], z.shape[-1])


def soft_target(nets, batch, z, gamma, next_noise):
    """
    soft Bellman target r + γ·V̇(s', ż)

    V̇(s') = min_i Q̇_i(s', a', ż) - α·log π(a'|s', ż), a'는 현재 actor에서 새로 샘플링
    target critic과 ż로는 gradient가 흐르지 않는다.
    """
    with torch.no_grad():
        z = _broadcast_latent(z.detach(), batch.next_obs)
        next_action, next_log_prob, _ = nets.actor(batch.next_obs, z, next_noise)
        next_q = nets.q_min(batch.next_obs, next_action, z, target=True)
        next_v = next_q - nets.alpha * next_log_prob
        return batch.rewards + gamma * next_v


def critic_loss(nets, batch, z, gamma, next_noise):
    """
    critic loss: mean_batch (Q(s, a, z) - (r + γ·V̇(s', ż)))^2

    twin critic이면 각 critic의 loss를 더한다. z를 detach하지 않고 넘기면
    encoder까지 gradient가 전달된다. (encoder_loss에서 사용)

    Args:
        nets (SacNetworks): actor / critics / target critics
        batch (TransitionBatch): [..., B, ...]
        z (torch.Tensor): [..., d] 또는 [..., B, d] task representation
        gamma (float): discount
        next_noise (torch.Tensor): [..., B, action_dim] a' 샘플링용 표준정규 noise

    Returns:
        torch.Tensor: scalar loss
    """
    target = soft_target(nets, batch, z, gamma, next_noise)
    z = _broadcast_latent(z, batch.obs)
    loss = 0.0
    for critic in nets.critics:
        q = critic(batch.obs, batch.actions, z)
        loss = loss + (q - target).pow(2).mean()
    return loss


def actor_loss(nets, batch, z, noise):
    """
    actor loss: mean_batch α·log π(a|s, ż) - min_i Q_i(s, a, ż), a는 reparameterization으로 샘플링

    Returns:
        loss (torch.Tensor): scalar
        log_prob (torch.Tensor): [..., B] (entropy 기록용)
    """
    z = _broadcast_latent(z.detach(), batch.obs)
    action, log_prob, _ = nets.actor(batch.obs, z, noise)
    q = nets.q_min(batch.obs, action, z)
    return (nets.alpha * log_prob - q).mean(), log_prob


def encoder_loss(nets, batch, posterior, z, gamma, kl_weight, next_noise):
    """
    encoder loss = critic loss (z에 gradient 연결) + β·KL(q(z|c) || N(0, I))

    task가 여러 개면 KL은 task 평균을 사용한다.

    Returns:
        total (torch.Tensor): scalar
        critic_part (torch.Tensor): scalar
        kl_part (torch.Tensor): scalar, β를 곱하기 전 KL
    """
    critic_part = critic_loss(nets, batch, z, gamma, next_noise)
    _, kl_total = kl_to_prior(posterior)
    kl_part = kl_total.mean()
    return critic_part + kl_weight * kl_part, critic_part, kl_part
