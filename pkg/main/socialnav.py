import math
from dataclasses import dataclass, fields

import numpy as np
import pandas as pd

from env import TaskEnv

ROOM_SIZE = np.array([15.0, 10.0])
ROOM_DIAGONAL = float(np.hypot(*ROOM_SIZE))
ROBOT_START = np.array([14.0, 5.0])
N_HUMANS = 5
# 정규화된 action (angular, linear)을 실제 속도로 바꾸는 배율
MAX_ANGULAR_VEL = 15.0
MAX_LINEAR_VEL = 2.0

COMPONENT_NAMES = ("R_g", "R_c", "R_s", "R_a", "R_v")


@dataclass
class SocialForceParams:
    """Helbing 방식 social force model 상수 (거리 m, 시간 s)"""

    desired_speed: float = 1.3
    relaxation_time: float = 0.5
    agent_strength: float = 2.0
    agent_range: float = 0.3
    wall_strength: float = 2.0
    wall_range: float = 0.3
    agent_radius: float = 0.3
    waypoint_radius: float = 0.5
    min_separation: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value <= 0:
                raise ValueError(f"social force parameter {f.name} must be positive, got {value}")


def reward_goal(d_rg, diagonal=ROOM_DIAGONAL):
    return 1.0 - d_rg / diagonal


def reward_collision(distances, d_c=0.4):
    return -1.0 if np.min(distances) < d_c else 0.0


def reward_social(distances, d_s=1.2):
    return float(np.min(np.asarray(distances) / d_s - 1.0))


def visibility_term(theta, theta_th=math.pi / 3):
    if theta < theta_th:
        return 1.0 - theta / theta_th
    return -(theta - theta_th) / (math.pi - theta_th)


def direction_term(theta, theta_th=math.pi / 3):
    if theta < theta_th:
        return 1.0 - theta / (math.pi / 2)
    return 1.0


def reward_approach(thetas, theta_th=math.pi / 3):
    """사람별 visibility x direction 곱의 최솟값"""
    return min(visibility_term(t, theta_th) * direction_term(t, theta_th) for t in thetas)


def reward_velocity(speed, thetas, theta_th=math.pi / 3):
    """사람 앞(θ < θ_th)에서 빨리 움직이면 -e^v (1 - θ/θ_th)"""
    return min(
        -math.exp(speed) * (1.0 - t / theta_th) if t < theta_th else 0.0 for t in thetas
    )


def bearing_angles(robot_pos, human_pos, human_vel, human_orientation, min_speed=0.05):
    """
    사람 i의 진행 방향과 사람→로봇 벡터 사이의 각 θ_ir ∈ [0, π]

    속도가 min_speed 이하면 저장된 몸 방향(orientation)을 쓴다.
    """
    to_robot = robot_pos[None, :] - human_pos
    speed = np.linalg.norm(human_vel, axis=-1)
    heading = np.where(
        speed > min_speed, np.arctan2(human_vel[:, 1], human_vel[:, 0]), human_orientation
    )
    bearing = np.arctan2(to_robot[:, 1], to_robot[:, 0])
    diff = np.abs((bearing - heading + np.pi) % (2 * np.pi) - np.pi)
    return diff


def social_force_step(pos, vel, waypoints, others, params, dt):
    """
    사람들의 위치/속도를 social force로 한 step 진행한다.

    Args:
        pos, vel, waypoints (np.ndarray): [H, 2]
        others (np.ndarray): [O, 2] 사람들이 피하는 다른 agent (로봇)
        params (SocialForceParams): 상수
        dt (float): step 길이 (초)

    Returns:
        pos, vel (np.ndarray): [H, 2]
    """
    to_goal = waypoints - pos
    dist = np.linalg.norm(to_goal, axis=-1, keepdims=True)
    direction = to_goal / np.maximum(dist, 1e-9)
    force = (params.desired_speed * direction - vel) / params.relaxation_time

    agents = np.concatenate([pos, others], axis=0)
    diff = pos[:, None, :] - agents[None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    own = np.arange(len(pos))
    d[own, own] = np.inf
    n = diff / np.maximum(d, 1e-9)[..., None]
    magnitude = params.agent_strength * np.exp(
        (2 * params.agent_radius - d) / params.agent_range
    )
    force = force + np.sum(magnitude[..., None] * n, axis=1)

    # 벽 4개: x=0, x=W, y=0, y=H
    for axis in range(2):
        low = pos[:, axis]
        high = ROOM_SIZE[axis] - pos[:, axis]
        push = params.wall_strength * (
            np.exp((params.agent_radius - low) / params.wall_range)
            - np.exp((params.agent_radius - high) / params.wall_range)
        )
        force[:, axis] += push

    vel = vel + dt * force
    speed = np.linalg.norm(vel, axis=-1, keepdims=True)
    max_speed = 1.3 * params.desired_speed
    vel = np.where(speed > max_speed, vel * max_speed / np.maximum(speed, 1e-9), vel)
    pos = np.clip(pos + dt * vel, 0.0, ROOM_SIZE)
    return pos, vel


class SocialNavEnv(TaskEnv):
    """
    15x10 m 방에서 사람 5명 사이를 지나 목표로 가는 unicycle 로봇

    action (정규화): (angular, linear) ∈ [-1, 1]^2 → (±15 rad/s, ±2 m/s)
    observation (31): robot (x, y, heading, v, goal x, goal y)
                      + 사람별 (상대 x, 상대 y, vx, vy, orientation)
    components: (R_g, R_c, R_s, R_a, R_v)
    """

    obs_dim = 6 + 5 * N_HUMANS
    action_dim = 2
    n_components = 5

    def __init__(self, task, episode_length=200, dt=0.1, collision_distance=0.4,
                 social_distance=1.2, theta_threshold=math.pi / 3, reassign_goal=True,
                 goal_radius=0.3, force_params=None):
        super().__init__(task, episode_length)
        self.dt = dt
        self.collision_distance = collision_distance
        self.social_distance = social_distance
        self.theta_threshold = theta_threshold
        self.reassign_goal = reassign_goal
        self.goal_radius = goal_radius
        self.force_params = force_params or SocialForceParams()
        self.record_trajectory = False
        self.trajectory = []

    @classmethod
    def from_config(cls, task, env_config):
        return cls(
            task,
            episode_length=env_config.episode_length,
            dt=env_config.nav_dt,
            collision_distance=env_config.nav_collision_distance,
            social_distance=env_config.nav_social_distance,
            theta_threshold=env_config.nav_theta_threshold,
            reassign_goal=env_config.nav_reassign_goal,
        )

    def _sample_goal(self):
        return np.array([self.np_random.uniform(0.0, 2.0), self.np_random.uniform(0.0, 10.0)])

    def _sample_waypoint(self):
        return self.np_random.uniform(0.0, 1.0, size=2) * ROOM_SIZE

    def _place_humans(self):
        placed = [self.robot_pos]
        humans = []
        while len(humans) < N_HUMANS:
            candidate = self.np_random.uniform(0.0, 1.0, size=2) * ROOM_SIZE
            if all(np.linalg.norm(candidate - p) >= self.force_params.min_separation for p in placed):
                placed.append(candidate)
                humans.append(candidate)
        return np.array(humans)

    def _reset_state(self):
        self.robot_pos = ROBOT_START.copy()
        self.robot_heading = math.pi
        self.robot_v = 0.0
        self.robot_w = 0.0
        self.goal = self._sample_goal()
        self.human_pos = self._place_humans()
        self.human_vel = np.zeros((N_HUMANS, 2))
        self.human_orientation = self.np_random.uniform(-math.pi, math.pi, size=N_HUMANS)
        self.waypoints = np.array([self._sample_waypoint() for _ in range(N_HUMANS)])
        self.trajectory = []

    def _observe(self):
        robot = [*self.robot_pos, self.robot_heading, self.robot_v, *self.goal]
        rel = self.human_pos - self.robot_pos
        humans = np.concatenate([rel, self.human_vel, self.human_orientation[:, None]], axis=1)
        return np.concatenate([robot, humans.ravel()])

    def components(self):
        """현재 상태에서 다섯 reward component를 다시 계산한다."""
        distances = np.linalg.norm(self.human_pos - self.robot_pos, axis=-1)
        thetas = bearing_angles(
            self.robot_pos, self.human_pos, self.human_vel, self.human_orientation
        )
        return [
            reward_goal(float(np.linalg.norm(self.robot_pos - self.goal))),
            reward_collision(distances, self.collision_distance),
            reward_social(distances, self.social_distance),
            reward_approach(thetas, self.theta_threshold),
            reward_velocity(abs(self.robot_v), thetas, self.theta_threshold),
        ]

    def _advance(self, action):
        self.robot_w = float(action[0]) * MAX_ANGULAR_VEL
        self.robot_v = float(action[1]) * MAX_LINEAR_VEL
        heading = self.robot_heading + self.robot_w * self.dt
        self.robot_heading = (heading + math.pi) % (2 * math.pi) - math.pi
        step = self.robot_v * self.dt * np.array(
            [math.cos(self.robot_heading), math.sin(self.robot_heading)]
        )
        self.robot_pos = np.clip(self.robot_pos + step, 0.0, ROOM_SIZE)

        self.human_pos, self.human_vel = social_force_step(
            self.human_pos, self.human_vel, self.waypoints, self.robot_pos[None, :],
            self.force_params, self.dt,
        )
        moving = np.linalg.norm(self.human_vel, axis=-1) > 0.05
        self.human_orientation = np.where(
            moving, np.arctan2(self.human_vel[:, 1], self.human_vel[:, 0]), self.human_orientation
        )
        arrived = np.linalg.norm(self.waypoints - self.human_pos, axis=-1) < self.force_params.waypoint_radius
        for i in np.flatnonzero(arrived):
            self.waypoints[i] = self._sample_waypoint()

        components = self.components()
        if self.record_trajectory:
            self._record(components)
        if self.reassign_goal and np.linalg.norm(self.robot_pos - self.goal) < self.goal_radius:
            self.goal = self._sample_goal()
        return components

    def _record(self, components):
        row = {
            # TaskEnv.step은 _advance 다음에 t를 올린다
            "t": self.t + 1,
            "robot_x": self.robot_pos[0],
            "robot_y": self.robot_pos[1],
            "robot_heading": self.robot_heading,
            "goal_x": self.goal[0],
            "goal_y": self.goal[1],
        }
        for i, (x, y) in enumerate(self.human_pos):
            row[f"human{i}_x"] = x
            row[f"human{i}_y"] = y
        weights = self.task.weights.w if self.task.weights is not None else np.ones(5)
        for name, value, w in zip(COMPONENT_NAMES, components, weights):
            # 가중치가 0인 component는 비활성
            row[name] = value if w > 0 else np.nan
        self.trajectory.append(row)

    def trajectory_frame(self):
        return pd.DataFrame(self.trajectory)


def export_trajectory(env, path):
    """기록된 한 episode의 step별 trajectory를 CSV로 저장한다."""
    frame = env.trajectory_frame()
    frame.to_csv(path, index=False)
    return frame
