"""
Tests for uncertainty-set penalties, the adversarial direction and robust targets.
"""

import numpy as np
import pytest

from usr_rl.core.config import UncertaintySetSpec
from usr_rl.core.errors import ContractError
from usr_rl.core.transitions import TransitionSample
from usr_rl.nets.values import ConstantValue, QuadraticValue
from usr_rl.robust.local_model import LocalGaussianModel, build_batch
from usr_rl.robust.uncertainty import (
    adv_direction,
    dual_l1,
    dual_l2,
    dual_weighted_l2,
    in_uncertainty_set,
    normalize_direction,
    penalty,
    robust_target,
    robust_target_quadrature_1d,
    robust_targets,
    support_oracle,
)


# ============================================================================
# Duals
# ============================================================================


def test_dual_values():
    l = np.array([3.0, -4.0])
    assert dual_l2(l, 0.5) == pytest.approx(2.5)
    assert dual_l1(l, 0.5) == pytest.approx(2.0)
    assert dual_weighted_l2(l, np.array([1.0, 0.0]), 0.5) == pytest.approx(1.5)


def test_duals_reduce_last_axis():
    l = np.ones((3, 4, 2))
    assert dual_l2(l, 1.0).shape == (3, 4)
    assert dual_l1(l, 1.0).shape == (3, 4)


def test_negative_radius_is_rejected():
    with pytest.raises(ContractError, match="alpha_u"):
        dual_l2(np.ones(2), -0.1)


def test_penalty_dispatch():
    l = np.array([3.0, -4.0])
    assert penalty("l2_usr", l, 1.0) == pytest.approx(5.0)
    assert penalty("l1_usr", l, 1.0) == pytest.approx(4.0)
    assert penalty("adv_usr", l, 1.0, np.array([0.6, 0.8])) == pytest.approx(np.hypot(1.8, 3.2))
    assert penalty("none", l, 1.0) == 0.0
    with pytest.raises(ContractError):
        penalty("adv_usr", l, 1.0)


@pytest.mark.parametrize("kind, d", [("l2", None), ("l1", None), ("ellipsoid", np.array([0.3, 0.9]))])
def test_support_oracle_agrees_with_closed_form(kind, d, rng):
    l = np.array([0.7, -1.3])
    closed = {"l2": dual_l2, "l1": dual_l1}.get(kind)
    expected = dual_weighted_l2(l, d, 0.4) if kind == "ellipsoid" else closed(l, 0.4)
    oracle = support_oracle(kind, l, 0.4, rng, d)
    assert oracle <= expected + 1e-12
    assert oracle == pytest.approx(expected, rel=1e-3)


# ============================================================================
# Set geometry
# ============================================================================


def test_membership_on_and_outside_the_boundary():
    w_bar = np.array([1.0, 1.0])
    assert in_uncertainty_set("l2", w_bar + 0.5 * np.array([0.6, 0.8]), w_bar, 0.5)
    assert not in_uncertainty_set("l2", w_bar + np.array([0.5, 0.1]), w_bar, 0.5)
    assert in_uncertainty_set("l1", w_bar + np.array([0.25, -0.25]), w_bar, 0.5)
    assert not in_uncertainty_set("l1", w_bar + np.array([0.3, -0.3]), w_bar, 0.5)


def test_ellipsoid_collapses_zero_axis():
    w_bar = np.zeros(2)
    d = np.array([1.0, 0.0])
    assert in_uncertainty_set("ellipsoid", np.array([0.5, 0.0]), w_bar, 0.5, d)
    assert not in_uncertainty_set("ellipsoid", np.array([0.0, 0.1]), w_bar, 0.5, d)


def test_zero_radius_set_is_the_nominal_point():
    assert in_uncertainty_set("l2", np.ones(2), np.ones(2), 0.0)
    assert not in_uncertainty_set("l2", np.array([1.0, 1.1]), np.ones(2), 0.0)


# ============================================================================
# Adversarial direction
# ============================================================================


def test_normalize_direction_modes():
    g = np.array([3.0, -4.0])
    np.testing.assert_allclose(normalize_direction(g), [0.6, -0.8])
    d = normalize_direction(g, "sqrt_abs")
    np.testing.assert_allclose(d, np.sqrt([3.0 / 7.0, 4.0 / 7.0]))
    assert np.linalg.norm(d) == pytest.approx(1.0)


def test_degenerate_gradient_maps_to_uniform_direction():
    np.testing.assert_allclose(normalize_direction(np.zeros((2, 4))), np.full((2, 4), 0.5))


def test_adv_direction_follows_value_gradient(rng):
    model = LocalGaussianModel([1.0, 0.0], [1e-9, 1e-9])
    result = adv_direction(QuadraticValue(curvature=1.0), model, rng)
    np.testing.assert_allclose(result.raw, [-2.0, 0.0], atol=1e-6)
    np.testing.assert_allclose(result.direction, [-1.0, 0.0], atol=1e-6)


def test_adv_direction_is_batched(rng):
    model = build_batch(rng.standard_normal((5, 3)), 0.1, "mean_scale")
    result = adv_direction(QuadraticValue(curvature=1.0), model, rng)
    assert result.raw.shape == (5, 6)
    np.testing.assert_allclose(np.linalg.norm(result.direction, axis=1), 1.0)


# ============================================================================
# Robust targets
# ============================================================================


def _targets(kind, alpha_u, seed=0, value_fn=None, **kwargs):
    rng = np.random.default_rng(seed)
    model = build_batch(np.array([[0.5, -0.5], [1.0, 2.0], [0.0, 0.3]]), 0.2)
    return robust_targets(
        np.array([1.0, 0.0, -1.0]),
        np.array([0.0, 0.0, 0.0]),
        model,
        value_fn or QuadraticValue(curvature=1.0, offset=2.0),
        UncertaintySetSpec(kind=kind, alpha_u=alpha_u),
        sample_size=8,
        gamma=0.9,
        rng=rng,
        **kwargs,
    )


def test_no_set_gives_plain_bootstrap():
    result = _targets("none", 0.5)
    np.testing.assert_array_equal(result.penalties, np.zeros(3))
    np.testing.assert_allclose(result.targets, [1.0, 0.0, -1.0] + 0.9 * result.values.mean(axis=1))


def test_zero_radius_matches_no_set():
    np.testing.assert_allclose(_targets("l2_usr", 0.0).targets, _targets("none", 0.0).targets)


@pytest.mark.parametrize("kind", ["l2_usr", "l1_usr", "adv_usr"])
def test_targets_decrease_with_radius(kind):
    small = _targets(kind, 0.01).targets
    large = _targets(kind, 0.1).targets
    nominal = _targets("none", 0.0).targets
    assert np.all(large <= small + 1e-12)
    assert np.all(small <= nominal + 1e-12)


def test_l1_penalty_is_at_most_l2_penalty():
    assert np.all(_targets("l1_usr", 0.1).penalties <= _targets("l2_usr", 0.1).penalties + 1e-12)


def test_adv_penalty_is_at_most_l2_penalty():
    assert np.all(_targets("adv_usr", 0.1).penalties <= _targets("l2_usr", 0.1).penalties + 1e-12)


def test_adv_average_directions_runs_batched():
    result = _targets("adv_usr", 0.1, average_directions=True, normalization="sqrt_abs")
    assert result.targets.shape == (3,)
    assert np.all(result.penalties >= 0.0)


def test_terminal_transitions_do_not_bootstrap(rng):
    result = robust_targets(
        np.array([1.5, 2.0]), np.array([1.0, 0.0]), build_batch(np.zeros((2, 1)), 0.5),
        ConstantValue(4.0), UncertaintySetSpec(kind="l2_usr", alpha_u=0.1), 4, 0.5, rng,
    )
    assert result.targets[0] == 1.5
    assert result.targets[1] < 2.0 + 0.5 * 4.0


def test_penalty_override_is_used():
    flipped = _targets("l2_usr", 0.1, duals={"l2_usr": lambda l, alpha_u: -dual_l2(l, alpha_u)})
    assert np.all(flipped.targets >= _targets("none", 0.0).targets)


def test_target_contract_errors(rng):
    model = LocalGaussianModel([0.0], [0.1])
    spec = UncertaintySetSpec(kind="l2_usr", alpha_u=0.1)
    sample = TransitionSample(np.zeros(1), np.zeros(1), 0.0, np.zeros(1))
    with pytest.raises(ContractError, match="sample size"):
        robust_target(sample, model, ConstantValue(1.0), spec, 0, 0.9, rng)
    with pytest.raises(ContractError, match="gamma"):
        robust_target(sample, model, ConstantValue(1.0), spec, 1, 1.0, rng)


@pytest.mark.parametrize("kind", ["none", "l2_usr", "l1_usr"])
def test_monte_carlo_target_converges_to_quadrature(kind, rng):
    model = LocalGaussianModel([0.5], [0.1])
    value_fn = QuadraticValue(curvature=1.0)
    spec = UncertaintySetSpec(kind=kind, alpha_u=0.1)
    sample = TransitionSample(np.zeros(1), np.zeros(1), 1.0, np.array([0.5]))
    mc = robust_target(sample, model, value_fn, spec, 20_000, 0.9, rng)
    exact = robust_target_quadrature_1d(1.0, model, value_fn, spec, 0.9)
    assert mc == pytest.approx(exact, abs=1e-2)


def test_quadrature_target_of_constant_value_without_set():
    model = LocalGaussianModel([0.0], [0.3])
    spec = UncertaintySetSpec(kind="none")
    assert robust_target_quadrature_1d(1.0, model, ConstantValue(2.0), spec, 0.5) == pytest.approx(2.0, abs=1e-9)


def test_quadrature_target_rejects_adv_set():
    with pytest.raises(ContractError):
        robust_target_quadrature_1d(
            0.0, LocalGaussianModel([0.0], [0.3]), ConstantValue(1.0), UncertaintySetSpec(kind="adv_usr"), 0.5
        )
