import math

import pytest
import torch

from model import (
    DTYPE,
    MLP,
    ContextEncoder,
    DimensionError,
    MlpSpec,
    TanhGaussianPolicy,
    create_activation,
    tanh_gaussian_sample,
)


def test_mlp_hand_weights():
    mlp = MLP(MlpSpec([2, 2, 1], "relu"))
    with torch.no_grad():
        mlp.layers[0].weight.copy_(torch.tensor([[1.0, -1.0], [0.5, 2.0]], dtype=DTYPE))
        mlp.layers[0].bias.copy_(torch.tensor([0.0, 1.0], dtype=DTYPE))
        mlp.layers[1].weight.copy_(torch.tensor([[3.0, 1.0]], dtype=DTYPE))
        mlp.layers[1].bias.copy_(torch.tensor([-1.0], dtype=DTYPE))
    out = mlp(torch.tensor([1.0, 2.0], dtype=DTYPE))
    # hidden: relu([-1, 5.5]) = [0, 5.5], out: 5.5 - 1
    assert out.item() == pytest.approx(4.5, abs=1e-12)


def test_mlp_rejects_wrong_width():
    mlp = MLP(MlpSpec([3, 4, 1]))
    with pytest.raises(DimensionError, match="layer 0"):
        mlp(torch.zeros(5, 2, dtype=DTYPE))


def test_mlp_spec_validation():
    with pytest.raises(DimensionError):
        MlpSpec([3])
    with pytest.raises(DimensionError):
        MlpSpec([3, 0, 1])
    with pytest.raises(RuntimeError):
        create_activation("gelu")


def test_mlp_gradcheck():
    torch.manual_seed(0)
    mlp = MLP(MlpSpec([3, 5, 2], "tanh"))
    x = torch.randn(4, 3, dtype=DTYPE, requires_grad=True)
    assert torch.autograd.gradcheck(lambda v: mlp(v).sum(), (x,), eps=1e-5, rtol=1e-4)


def test_tanh_gaussian_zero_noise_is_tanh_mean():
    mean = torch.tensor([0.3, -1.2], dtype=DTYPE)
    log_std = torch.tensor([0.0, -1.0], dtype=DTYPE)
    action, _ = tanh_gaussian_sample(mean, log_std, torch.zeros(2, dtype=DTYPE))
    assert torch.allclose(action, torch.tanh(mean))


def test_tanh_gaussian_log_prob_matches_change_of_variables():
    g = torch.Generator().manual_seed(1)
    mean = torch.randn(10, 1, generator=g, dtype=DTYPE)
    log_std = torch.randn(10, 1, generator=g, dtype=DTYPE) * 0.3
    noise = torch.randn(10, 1, generator=g, dtype=DTYPE)
    action, log_prob = tanh_gaussian_sample(mean, log_std, noise)
    normal = torch.distributions.Normal(mean, log_std.exp())
    pre = mean + log_std.exp() * noise
    expected = (normal.log_prob(pre) - torch.log(1 - torch.tanh(pre) ** 2)).sum(-1)
    assert torch.allclose(log_prob, expected, atol=1e-9)


def test_tanh_gaussian_density_integrates_to_one():
    mean = torch.tensor([0.4], dtype=DTYPE)
    log_std = torch.tensor([math.log(0.7)], dtype=DTYPE)
    # a = tanh(mean + std*eps) 를 a 격자로 바꿔서 밀도를 적분
    grid = torch.linspace(-1 + 1e-6, 1 - 1e-6, 200001, dtype=DTYPE)
    pre = torch.atanh(grid)
    noise = ((pre - mean) / log_std.exp()).unsqueeze(-1)
    _, log_prob = tanh_gaussian_sample(
        mean.expand(len(grid), 1), log_std.expand(len(grid), 1), noise
    )
    total = torch.trapezoid(log_prob.exp(), grid).item()
    assert total == pytest.approx(1.0, abs=1e-3)


def test_tanh_gaussian_actions_stay_in_open_interval():
    mean = torch.tensor([50.0, -50.0], dtype=DTYPE)
    log_std = torch.zeros(2, dtype=DTYPE)
    action, log_prob = tanh_gaussian_sample(mean, log_std, torch.zeros(2, dtype=DTYPE))
    assert bool((action.abs() < 1).all())
    assert torch.isfinite(log_prob).all()


def test_tanh_gaussian_shape_mismatch():
    with pytest.raises(DimensionError):
        tanh_gaussian_sample(
            torch.zeros(2, dtype=DTYPE), torch.zeros(3, dtype=DTYPE), torch.zeros(2, dtype=DTYPE)
        )


def test_policy_act_is_deterministic_without_noise():
    torch.manual_seed(0)
    policy = TanhGaussianPolicy(4, 2, torch.nn.Identity(), 3, hidden_sizes=(8,))
    obs = torch.randn(4, dtype=DTYPE)
    z = torch.randn(3, dtype=DTYPE)
    assert torch.equal(policy.act(obs, z), policy.act(obs, z))
    assert policy.act(obs, z).shape == (2,)


def test_encoder_variance_positive_and_shapes():
    torch.manual_seed(0)
    encoder = ContextEncoder(3, 2, 4, hidden_sizes=(8,))
    context = torch.randn(6, 2 * 3 + 2 + 1, dtype=DTYPE) * 100
    mean, var = encoder.encode_transition(context)
    assert mean.shape == (6, 4)
    assert bool((var > 0).all())
    with pytest.raises(DimensionError):
        encoder.encode_transition(torch.zeros(6, 5, dtype=DTYPE))


def test_tanh_gaussian_gradcheck_random_instances():
    g = torch.Generator().manual_seed(3)
    for _ in range(20):
        mean = torch.randn(4, 2, generator=g, dtype=DTYPE).requires_grad_()
        log_std = (torch.rand(4, 2, generator=g, dtype=DTYPE) * 2 - 1.5).requires_grad_()
        noise = torch.randn(4, 2, generator=g, dtype=DTYPE)
        assert torch.autograd.gradcheck(
            lambda m, s: tanh_gaussian_sample(m, s, noise), (mean, log_std), eps=1e-5, rtol=1e-4
        )
