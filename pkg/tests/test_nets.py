"""
Tests for MLPs, the squashed-Gaussian policy, value functions and Adam.
"""

import numpy as np
import pytest

from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.nets import diffcore
from usr_rl.nets.diffcore import Tape
from usr_rl.nets.mlp import MlpParams, bind, init_mlp, layer_sizes, mlp_forward, soft_update
from usr_rl.nets.optimizer import Adam, clip_by_global_norm, global_norm
from usr_rl.nets.policy import (
    critic_forward,
    deterministic_action,
    init_actor,
    init_critic,
    policy_sample,
    sample_on_tape,
    twin_min,
)
from usr_rl.nets.values import (
    ConstantValue,
    MlpValue,
    NegativeDistanceValue,
    QuadraticValue,
    SoftValue,
    input_gradient,
    value_and_input_gradient,
)


@pytest.fixture
def actor(rng):
    return init_actor(3, 2, 16, 2, rng)


@pytest.fixture
def critic(rng):
    return init_critic(3, 2, 16, 2, rng)


# ============================================================================
# MLP
# ============================================================================


def test_layer_sizes():
    assert layer_sizes(3, 8, 2, 1) == [3, 8, 8, 1]


def test_init_mlp_shapes_and_fan_in_bounds(rng):
    params = init_mlp([4, 10, 2], rng)
    assert [w.shape for w in params.weights] == [(4, 10), (10, 2)]
    assert [b.shape for b in params.biases] == [(1, 10), (1, 2)]
    assert np.all(np.abs(params.weights[0]) <= 0.5)
    assert params.activations == ("relu", "identity")


def test_params_are_read_only(rng):
    params = init_mlp([2, 3, 1], rng)
    with pytest.raises(ValueError):
        params.weights[0][0, 0] = 1.0


def test_forward_single_and_batch_agree(rng):
    params = init_mlp([3, 8, 2], rng, "tanh")
    batch = rng.standard_normal((4, 3))
    np.testing.assert_allclose(mlp_forward(params, batch[1]), mlp_forward(params, batch)[1])


def test_forward_rejects_wrong_width(rng):
    with pytest.raises(ShapeError):
        mlp_forward(init_mlp([3, 2], rng), np.ones(4))


def test_tape_forward_matches_numpy(rng):
    params = init_mlp([3, 8, 8, 2], rng)
    inputs = rng.standard_normal((5, 3))
    tape = Tape()
    out = bind(tape, params).apply(tape.leaf(inputs))
    np.testing.assert_allclose(out.value, mlp_forward(params, inputs))


def test_parameter_gradients_match_finite_differences(rng):
    params = init_mlp([2, 4, 1], rng, "tanh")
    inputs = rng.standard_normal((3, 2))
    tape = Tape()
    bound = bind(tape, params)
    grads = bound.gradients(tape.backward(diffcore.sum_(bound.apply(tape.leaf(inputs)))))
    eps = 1e-6
    w = np.array(params.weights[0])
    w[1, 2] += eps
    upper = mlp_forward(params.with_arrays([w] + params.arrays()[1:]), inputs).sum()
    w[1, 2] -= 2 * eps
    lower = mlp_forward(params.with_arrays([w] + params.arrays()[1:]), inputs).sum()
    assert grads.weights[0][1, 2] == pytest.approx((upper - lower) / (2 * eps), rel=1e-6)


def test_records_round_trip(rng):
    params = init_mlp([2, 4, 1], rng)
    restored = MlpParams.from_records("net", params.records("net"), params.activations)
    for a, b in zip(params.arrays(), restored.arrays()):
        np.testing.assert_array_equal(a, b)


def test_from_records_reports_missing_key(rng):
    params = init_mlp([2, 4, 1], rng)
    records = params.records("net")
    del records["net.bias.1"]
    with pytest.raises(ContractError, match="net.bias.1"):
        MlpParams.from_records("net", records, params.activations)


def test_soft_update_blends(rng):
    target = init_mlp([2, 3, 1], rng)
    source = init_mlp([2, 3, 1], rng)
    blended = soft_update(target, source, 0.25)
    np.testing.assert_allclose(blended.weights[0], 0.75 * target.weights[0] + 0.25 * source.weights[0])
    np.testing.assert_array_equal(soft_update(target, source, 1.0).biases[1], source.biases[1])


def test_soft_update_rejects_bad_rho(rng):
    params = init_mlp([2, 1], rng)
    with pytest.raises(ContractError):
        soft_update(params, params, 1.5)


# ============================================================================
# Policy
# ============================================================================


def test_policy_sample_is_bounded(actor, rng):
    sample = policy_sample(actor, rng.standard_normal((50, 3)), rng)
    assert sample.action.shape == (50, 2)
    assert np.all(np.abs(sample.action) < 1.0)
    assert np.all((sample.log_std >= -5.0) & (sample.log_std <= 2.0))


def test_policy_sample_single_state(actor, rng):
    sample = policy_sample(actor, np.zeros(3), rng)
    assert sample.action.shape == (2,)
    assert isinstance(sample.log_prob, float)


def _fixed_actor(mean: float, log_std: float) -> MlpParams:
    """1-D actor whose output ignores the state."""
    actor = init_actor(1, 1, 4, 1, np.random.default_rng(0))
    arrays = [np.zeros_like(a) for a in actor.arrays()]
    raw_log_std = np.arctanh((log_std + 5.0) / 3.5 - 1.0)
    arrays[-1] = np.array([mean, raw_log_std])
    return actor.with_arrays(arrays)


def test_policy_log_prob_matches_sampled_histogram():
    actor = _fixed_actor(0.3, np.log(0.5))
    n = 1_000_000
    draws = policy_sample(actor, np.zeros((n, 1)), np.random.default_rng(42))
    assert draws.log_std[0, 0] == pytest.approx(np.log(0.5))

    edges = np.linspace(-0.6, 0.9, 31)
    counts, _ = np.histogram(draws.action[:, 0], bins=edges)
    width = edges[1] - edges[0]
    empirical = counts / (n * width)

    centers = 0.5 * (edges[:-1] + edges[1:])
    eps = (np.arctanh(centers) - 0.3) / 0.5
    at_centers = policy_sample(actor, np.zeros((centers.size, 1)), rng=None, eps=eps[:, None])
    np.testing.assert_allclose(at_centers.action[:, 0], centers, atol=1e-12)
    density = np.exp(at_centers.log_prob)

    assert np.max(np.abs(empirical - density) / density) < 0.05


def test_tape_sample_matches_numpy_sample(actor, rng):
    states = rng.standard_normal((4, 3))
    eps = rng.standard_normal((4, 2))
    direct = policy_sample(actor, states, rng=None, eps=eps)
    tape = Tape()
    action, log_prob, _, _ = sample_on_tape(bind(tape, actor), tape.leaf(states), eps)
    np.testing.assert_allclose(action.value, direct.action)
    np.testing.assert_allclose(log_prob.value, direct.log_prob)


def test_deterministic_action_is_tanh_of_mean(actor):
    state = np.array([0.5, -0.5, 1.0])
    mean = mlp_forward(actor, state)[:2]
    np.testing.assert_allclose(deterministic_action(actor, state), np.tanh(mean))


def test_critic_forward_shapes(critic, rng):
    assert isinstance(critic_forward(critic, np.zeros(3), np.zeros(2)), float)
    assert critic_forward(critic, np.zeros((5, 3)), np.zeros((5, 2))).shape == (5,)
    with pytest.raises(ShapeError):
        critic_forward(critic, np.zeros((5, 3)), np.zeros((4, 2)))


def test_twin_min():
    assert twin_min(1.0, -2.0) == -2.0
    np.testing.assert_array_equal(twin_min(np.array([1.0, 3.0]), np.array([2.0, 0.0])), [1.0, 0.0])


# ============================================================================
# Value functions
# ============================================================================


def test_negative_distance_gradient_points_away_from_target():
    values, grads = value_and_input_gradient(NegativeDistanceValue(np.zeros(2)), np.array([[3.0, 4.0]]))
    assert values[0] == pytest.approx(-5.0)
    np.testing.assert_allclose(grads[0], [-0.6, -0.8])


def test_quadratic_value_gradient():
    grad = input_gradient(QuadraticValue(curvature=2.0, center=1.0, offset=3.0), np.array([2.0, 0.0]))
    np.testing.assert_allclose(grad, [-4.0, 4.0])


def test_constant_value_has_zero_gradient():
    values, grads = value_and_input_gradient(ConstantValue(7.0), np.ones((3, 2)))
    np.testing.assert_allclose(values, 7.0)
    np.testing.assert_array_equal(grads, np.zeros((3, 2)))


def test_mlp_value_tape_and_direct_agree(rng):
    value_fn = MlpValue(init_mlp([2, 8, 1], rng, "tanh"))
    points = rng.standard_normal((6, 2))
    values, _ = value_and_input_gradient(value_fn, points)
    np.testing.assert_allclose(values, value_fn.evaluate(points))


def test_mlp_value_needs_one_output(rng):
    with pytest.raises(ContractError):
        MlpValue(init_mlp([2, 2], rng))


def test_soft_value_tape_and_direct_agree(actor, critic, rng):
    value_fn = SoftValue(actor, critic, init_critic(3, 2, 16, 2, rng), 0.1, (-5.0, 2.0), noise_seed=7)
    points = rng.standard_normal((5, 3))
    values, grads = value_and_input_gradient(value_fn, points)
    np.testing.assert_allclose(values, value_fn.evaluate(points))
    assert grads.shape == (5, 3)


# ============================================================================
# Optimizer
# ============================================================================


def test_adam_first_step_moves_by_learning_rate():
    adam = Adam([(2,)], lr=0.1)
    (updated,) = adam.step([np.array([1.0, -1.0])], [np.array([0.5, -3.0])])
    np.testing.assert_allclose(updated, [0.9, -0.9], atol=1e-6)
    assert adam.steps_taken == 1


def test_adam_minimizes_quadratic():
    adam = Adam([(1,)], lr=0.05)
    x = np.array([3.0])
    for _ in range(500):
        (x,) = adam.step([x], [2.0 * x])
    assert abs(x[0]) < 0.1


def test_adam_rejects_wrong_array_count():
    with pytest.raises(ContractError):
        Adam([(1,)], lr=0.1).step([np.zeros(1), np.zeros(1)], [np.zeros(1)])


def test_clip_by_global_norm():
    grads = [np.array([3.0]), np.array([4.0])]
    clipped, norm = clip_by_global_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    assert global_norm(clipped) == pytest.approx(1.0)
    unchanged, _ = clip_by_global_norm(grads, 10.0)
    np.testing.assert_array_equal(unchanged[1], [4.0])
