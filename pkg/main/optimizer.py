from importlib import import_module

import torch


class NonFiniteGradientError(FloatingPointError):
    """gradient에 NaN/inf가 섞여 optimizer step을 중단할 때 발생하는 예외"""


def create_optimizer(params, name="Adam", lr=3e-4, betas=(0.9, 0.999), eps=1e-8):
    """torch.optim에서 이름으로 optimizer를 만든다. (default: Adam)"""
    opt_module = getattr(import_module("torch.optim"), name)
    params = [p for p in params if p.requires_grad]
    if name == "Adam":
        return opt_module(params, lr=lr, betas=betas, eps=eps)
    return opt_module(params, lr=lr)


def get_lr(optimizer):
    for param_group in optimizer.param_groups:
        return param_group["lr"]


def backward(loss):
    """scalar loss에서 reverse-mode gradient를 계산한다.

    graph에 연결되지 않은 (detach된) tensor나 scalar가 아닌 tensor에는 사용할 수 없다.
    """
    if loss.numel() != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {tuple(loss.shape)}")
    if not loss.requires_grad or loss.grad_fn is None and not loss.is_leaf:
        raise RuntimeError("backward called on a tensor that is not part of a recorded graph")
    if loss.grad_fn is None:
        raise RuntimeError("backward called on a detached tensor")
    loss.backward()


def adam_step(optimizer, named_params, iteration):
    """
    gradient가 모두 유한한지 확인한 뒤 optimizer.step()을 수행한다.

    Args:
        optimizer (torch.optim.Optimizer): Adam 등
        named_params (Iterable[Tuple[str, nn.Parameter]]): 진단 메시지용 (이름, 파라미터)
        iteration (int): 현재 학습 iteration

    Raises:
        NonFiniteGradientError: 파라미터 이름과 iteration을 포함
    """
    for name, param in named_params:
        if param.grad is not None and not bool(torch.isfinite(param.grad).all()):
            raise NonFiniteGradientError(
                f"non-finite gradient in parameter '{name}' at iteration {iteration}"
            )
    optimizer.step()
