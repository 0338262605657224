import math

import numpy as np

from env import TaskEnv
from tasks import racer_reward_component

MARKERS = np.array([[0.2, 0.2], [0.8, 0.3], [0.5, 0.8]])
GRID_SIZE = 10
N_ORIENTATION_RBF = 20
ENCODING_DIM = GRID_SIZE * GRID_SIZE + N_ORIENTATION_RBF

_GRID_SPACING = 1.0 / GRID_SIZE
_GRID_CENTERS = np.array(
    [[(i + 0.5) * _GRID_SPACING, (j + 0.5) * _GRID_SPACING] for i in range(GRID_SIZE) for j in range(GRID_SIZE)]
)
_GRID_SIGMA = _GRID_SPACING / 2
_ORIENTATION_SPACING = 2 * math.pi / N_ORIENTATION_RBF
_ORIENTATION_CENTERS = np.arange(N_ORIENTATION_RBF) * _ORIENTATION_SPACING
_ORIENTATION_SIGMA = _ORIENTATION_SPACING / 2


def wrap_unit(p):
    """좌표를 [0, 1)로 감는다."""
    p = np.mod(p, 1.0)
    # mod 결과가 반올림으로 1.0이 되는 경우
    return np.where(p >= 1.0, 0.0, p)


def torus_delta(a, b):
    """축별 torus 거리 (각 축 ≤ 0.5)"""
    d = np.abs(np.asarray(a) - np.asarray(b))
    return np.minimum(d, 1.0 - d)


def torus_distance(a, b):
    return np.linalg.norm(torus_delta(a, b), axis=-1)


def angular_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % (2 * math.pi)
    return np.minimum(d, 2 * math.pi - d)


def encode_state(position, orientation):
    """
    위치 10x10 grid RBF 100개 + 방향 RBF 20개 = 120

    Args:
        position (np.ndarray): [2] ∈ [0, 1)^2
        orientation (float): [0, 2π)
    """
    d_pos = torus_distance(_GRID_CENTERS, position)
    pos_code = np.exp(-(d_pos**2) / (2 * _GRID_SIGMA**2))
    d_ori = angular_distance(_ORIENTATION_CENTERS, orientation)
    ori_code = np.exp(-(d_ori**2) / (2 * _ORIENTATION_SIGMA**2))
    return np.concatenate([pos_code, ori_code])


class RacerEnv(TaskEnv):
    """
    unit torus 위를 일정 속도로 달리는 car-like agent

    action ∈ [-1, 1]: 좌/우 회전량 (최대 turn_rate rad)
    components: marker별 r_k(d_k), reward는 세 component의 평균
    """

    obs_dim = ENCODING_DIM
    action_dim = 1
    n_components = len(MARKERS)

    def __init__(self, task, episode_length=200, speed=0.02, turn_rate=0.3):
        super().__init__(task, episode_length)
        self.speed = speed
        self.turn_rate = turn_rate

    @classmethod
    def from_config(cls, task, env_config):
        return cls(
            task,
            episode_length=env_config.episode_length,
            speed=env_config.racer_speed,
            turn_rate=env_config.racer_turn_rate,
        )

    def _reset_state(self):
        self.position = wrap_unit(self.np_random.uniform(0.0, 1.0, size=2))
        self.orientation = float(self.np_random.uniform(0.0, 2 * math.pi))

    def _observe(self):
        return encode_state(self.position, self.orientation)

    def marker_distances(self):
        return torus_distance(MARKERS, self.position)

    def components(self):
        return [
            racer_reward_component(d, self.task.racer, k)
            for k, d in enumerate(self.marker_distances())
        ]

    def _advance(self, action):
        self.orientation = float((self.orientation + action[0] * self.turn_rate) % (2 * math.pi))
        step = self.speed * np.array([math.cos(self.orientation), math.sin(self.orientation)])
        self.position = wrap_unit(self.position + step)
        return self.components()
