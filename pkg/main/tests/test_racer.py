import math

import numpy as np
import pytest

from racer import MARKERS, RacerEnv, encode_state, torus_distance, wrap_unit
from tasks import RacerGaussian, RacerTask, TaskSpec, make_task


def single_gaussian_task():
    racer = RacerTask([[RacerGaussian(0.2, 0.005)] for _ in range(3)])
    return TaskSpec(family="racer", seed=0, racer=racer)


def test_encoding_size_and_range():
    code = encode_state(np.array([0.3, 0.7]), 1.0)
    assert code.shape == (120,)
    assert code.min() >= 0.0 and code.max() <= 1.0


def test_encoding_wraps_around_torus():
    a = encode_state(np.array([0.999, 0.5]), 0.0)
    b = encode_state(np.array([0.001, 0.5]), 2 * math.pi - 1e-9)
    assert np.allclose(a, b, atol=0.05)


def test_torus_wrap_and_distance():
    assert wrap_unit(np.array([1.001]))[0] == pytest.approx(0.001)
    assert wrap_unit(np.array([-0.25]))[0] == pytest.approx(0.75)
    assert torus_distance(np.array([0.05, 0.5]), np.array([0.95, 0.5])) == pytest.approx(0.1)


def test_reset_is_deterministic():
    a = RacerEnv(single_gaussian_task())
    b = RacerEnv(single_gaussian_task())
    obs_a, _ = a.reset(seed=9)
    obs_b, _ = b.reset(seed=9)
    assert np.array_equal(obs_a, obs_b)


def test_zero_action_drives_straight():
    env = RacerEnv(single_gaussian_task())
    env.reset(seed=0)
    env.position = np.array([0.5, 0.5])
    env.orientation = 0.0
    env.step(np.zeros(1))
    assert env.orientation == 0.0
    assert np.allclose(env.position, [0.52, 0.5])


def test_exits_right_edge_and_reappears_left():
    env = RacerEnv(single_gaussian_task(), speed=0.002)
    env.reset(seed=0)
    env.position = np.array([0.999, 0.3])
    env.orientation = 0.0
    env.step(np.zeros(1))
    assert env.position[0] == pytest.approx(0.001)
    assert env.position[1] == pytest.approx(0.3)


def test_reward_is_mean_of_components():
    task = make_task("racer", seed=4)
    env = RacerEnv(task)
    env.reset(seed=0)
    _, reward, _, _, info = env.step(np.array([0.3]))
    assert reward == pytest.approx(np.mean(info["components"]), abs=1e-12)
    assert len(info["components"]) == len(MARKERS)


def test_reward_peaks_at_marker_distance():
    env = RacerEnv(single_gaussian_task())
    env.reset(seed=0)
    env.position = np.array([0.2, 0.4])
    assert env.marker_distances()[0] == pytest.approx(0.2)
    assert env.components()[0] == pytest.approx(1.0)
