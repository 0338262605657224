import os

import torch

from config import ConfigError


def save_checkpoint(save_dir, learner, config, extra_name=None):
    """
    학습 상태 전체를 last.pth (그리고 extra_name이 있으면 그 파일)에 저장한다.

    네트워크/optimizer state_dict, replay buffer, RNG 상태, iteration과 env step,
    설정과 설정 hash가 들어간다.
    """
    state = {
        "learner": learner.state_dict(),
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "iteration": learner.iteration,
        "env_steps": learner.env_steps,
    }
    torch.save(state, os.path.join(save_dir, "last.pth"))
    if extra_name is not None:
        torch.save(state, os.path.join(save_dir, extra_name))
    return state


def load_checkpoint(path):
    # numpy 배열과 RNG 상태 dict가 들어 있어 weights_only로는 읽을 수 없다
    return torch.load(path, map_location="cpu", weights_only=False)


def check_resume(state, config):
    """체크포인트와 현재 설정의 hash가 다르면 재시작을 거부한다."""
    if state["config_hash"] != config.config_hash():
        raise ConfigError(
            "checkpoint was written with a different configuration "
            f"(hash {state['config_hash'][:12]} != {config.config_hash()[:12]}), refusing to resume"
        )
