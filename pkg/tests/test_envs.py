"""
Tests for the moving-to-target and pendulum environments.
"""

import numpy as np
import pytest

from usr_rl.core.config import EnvConfig
from usr_rl.core.errors import ContractError
from usr_rl.envs import (
    GreedyTargetPolicy,
    MovingToTargetEnv,
    MovingToTargetModel,
    PendulumEnv,
    make_env,
    mtt_optimal_value,
    mtt_step,
    pendulum_energy,
    pendulum_step,
)
from usr_rl.envs.pendulum import angular_acceleration
from usr_rl.evaluation.rollout import run_episode
from usr_rl.nets.values import NegativeDistanceValue
from usr_rl.robust.uncertainty import adv_direction


# ============================================================================
# Moving-to-target
# ============================================================================


def test_mtt_step_nominal_friction():
    next_state, reward, done = mtt_step(np.array([4.0, 3.0]), np.array([-0.8, -0.6]), [1.0, 1.0], 0.0, None)
    np.testing.assert_allclose(next_state, [3.2, 2.4])
    assert reward == pytest.approx(-1.0)
    assert not done


def test_mtt_step_zero_friction_pays_time_cost_only():
    next_state, reward, _ = mtt_step(np.array([4.0, 3.0]), np.array([-0.8, -0.6]), [0.0, 0.0], 0.0, None)
    np.testing.assert_allclose(next_state, [4.0, 3.0])
    assert reward == pytest.approx(-2.0)


def test_mtt_step_normalizes_heading():
    next_state, _, _ = mtt_step(np.array([4.0, 3.0]), np.array([-8.0, -6.0]), [1.0, 1.0], 0.0, None)
    np.testing.assert_allclose(next_state, [3.2, 2.4])


def test_mtt_zero_action_is_rejected():
    with pytest.raises(ContractError, match="zero norm"):
        mtt_step(np.array([4.0, 3.0]), np.zeros(2), [1.0, 1.0], 0.0, None)


def test_mtt_noisy_step_needs_rng():
    with pytest.raises(ContractError):
        mtt_step(np.array([4.0, 3.0]), np.array([1.0, 0.0]), [1.0, 1.0], 0.1, None)


def test_mtt_terminates_inside_goal_radius():
    _, _, done = mtt_step(np.array([1.1, 0.0]), np.array([-1.0, 0.0]), [1.0, 1.0], 0.0, None)
    assert done


def test_mtt_optimal_value_is_negative_distance():
    assert mtt_optimal_value(np.array([4.0, 3.0])) == pytest.approx(-5.0)


def test_greedy_policy_attains_optimal_value(mtt_env, rng):
    episode_return = run_episode(mtt_env, GreedyTargetPolicy(), rng)
    assert episode_return >= -(5.0 + 1.0) * 1.01
    assert episode_return == pytest.approx(-5.0)


def test_mtt_horizon_truncates_without_terminating(rng):
    env = MovingToTargetEnv(noise_scale=0.0, horizon=3)
    env.reset(rng, state=np.array([4.0, 3.0]))
    results = [env.step(np.array([1.0, 0.0])) for _ in range(3)]
    assert [r.truncated for r in results] == [False, False, True]
    assert not any(r.terminated for r in results)
    with pytest.raises(ContractError, match="reset"):
        env.step(np.array([1.0, 0.0]))


def test_mtt_initial_states_lie_on_start_circle(mtt_env, rng):
    for _ in range(10):
        assert np.linalg.norm(mtt_env.reset(rng)) == pytest.approx(5.0)


# ============================================================================
# Parameters
# ============================================================================


def test_set_params_resets_unnamed_to_nominal(mtt_env):
    mtt_env.set_params({"w1": 0.5, "w2": 1.5})
    mtt_env.set_params({"w1": 0.5})
    assert mtt_env.params == {"w1": 0.5, "w2": 1.0}


def test_set_params_accepts_range_boundaries(mtt_env):
    mtt_env.set_params({"w1": 0.0, "w2": 2.0})
    np.testing.assert_array_equal(mtt_env.param_vector(), [0.0, 2.0])


def test_set_params_rejects_out_of_range_value(mtt_env):
    with pytest.raises(ContractError, match=r"\[0.0, 2.0\]"):
        mtt_env.set_params({"w1": 2.5})


def test_set_params_rejects_unknown_name(mtt_env):
    with pytest.raises(ContractError, match="w1"):
        mtt_env.set_params({"mass": 1.0})


def test_clone_does_not_share_params(mtt_env):
    twin = mtt_env.clone()
    twin.set_params({"w2": 0.25})
    assert mtt_env.params["w2"] == 1.0


def test_friction_changes_displacement(mtt_env, rng):
    mtt_env.set_params({"w1": 0.5})
    mtt_env.reset(rng, state=np.array([4.0, 3.0]))
    result = mtt_env.step(np.array([-0.8, -0.6]))
    np.testing.assert_allclose(result.observation, [3.6, 2.4])


# ============================================================================
# Moving-to-target as a parametric model
# ============================================================================


def test_mtt_model_mean_and_jacobian():
    model = MovingToTargetModel(np.array([4.0, 3.0]), np.array([-0.8, -0.6]), [1.0, 1.0], 0.1)
    np.testing.assert_allclose(model.mean, [3.2, 2.4])
    np.testing.assert_allclose(model.point_jacobian(np.zeros(2)), np.diag([-0.8, -0.6]))


def test_mtt_model_value_gradient_over_friction(rng):
    model = MovingToTargetModel(np.array([4.0, 3.0]), np.array([-0.8, -0.6]), [1.0, 1.0], 1e-9)
    result = adv_direction(NegativeDistanceValue(np.zeros(2)), model, rng)
    np.testing.assert_allclose(result.raw, [0.64, 0.36], atol=1e-6)
    assert np.linalg.norm(result.direction) == pytest.approx(1.0)


# ============================================================================
# Pendulum
# ============================================================================


def _state(theta: float, theta_dot: float) -> np.ndarray:
    return np.array([np.cos(theta), np.sin(theta), theta_dot])


def test_pendulum_upright_rest_is_a_fixed_point():
    state = _state(0.0, 0.0)
    next_state, reward, done = pendulum_step(state, np.array([0.0]), [1.0, 1.0, 0.1])
    np.testing.assert_array_equal(next_state, state)
    assert reward == 0.0
    assert not done


def test_pendulum_hanging_undamped_has_no_acceleration():
    assert angular_acceleration(np.sin(np.pi), 0.0, 0.0, [1.0, 1.0, 0.0]) == pytest.approx(0.0, abs=1e-12)


def test_pendulum_upright_is_unstable():
    next_state, _, _ = pendulum_step(_state(0.01, 0.0), np.array([0.0]), [1.0, 1.0, 0.0])
    assert next_state[2] > 0.0


def test_pendulum_energy_decreases_with_damping():
    params = [1.0, 1.0, 1.0]
    state = _state(np.pi - 0.3, 0.0)
    energies = [pendulum_energy(state, params)]
    for _ in range(100):
        state, _, _ = pendulum_step(state, np.array([0.0]), params)
        energies.append(pendulum_energy(state, params))
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]


def test_pendulum_reward_scores_pre_step_state():
    state = _state(0.5, 1.0)
    _, reward, _ = pendulum_step(state, np.array([1.0]), [1.0, 1.0, 0.1])
    assert reward == pytest.approx(-(0.25 + 0.1 + 0.001))


def test_pendulum_torque_outside_limit_is_rejected():
    with pytest.raises(ContractError, match="torque"):
        pendulum_step(_state(0.0, 0.0), np.array([1.5]), [1.0, 1.0, 0.1])


def test_pendulum_env_clips_policy_torque(pendulum_env, rng):
    pendulum_env.reset(rng, state=_state(0.0, 0.0))
    result = pendulum_env.step(np.array([3.0]))
    assert result.observation[2] == pytest.approx(0.05 * 1.0)


def test_pendulum_never_terminates_before_horizon(rng):
    env = PendulumEnv(horizon=5)
    env.reset(rng)
    results = [env.step(np.array([0.0])) for _ in range(5)]
    assert not any(r.terminated for r in results)
    assert results[-1].truncated


def test_make_env_builds_both_tasks():
    assert make_env(EnvConfig(name="pendulum")).spec.param_names == ["length", "mass", "damping"]
    env = make_env(EnvConfig(name="moving_to_target", noise_scale=0.0, horizon=7))
    assert env.spec.horizon == 7
    assert env.noise_scale == 0.0
