"""
Tests for worst-case metrics, perturbation sweeps and report figures.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from usr_rl.core.config import SweepConfig
from usr_rl.core.errors import ContractError
from usr_rl.envs import GreedyTargetPolicy, MovingToTargetEnv
from usr_rl.evaluation.metrics import quantile, robust_auc
from usr_rl.evaluation.plot import plot_curve, plot_noisy
from usr_rl.evaluation.sweep import (
    aggregate_reports,
    curve_point,
    fixed_returns,
    noisy_sweep,
    sweep,
    sweep_values,
    worker_count,
)

W1_SWEEP = SweepConfig(param="w1", v_min=0.5, v_max=1.5, points=3, episodes=4)


# ============================================================================
# Metrics
# ============================================================================


def test_quantile_lower_nearest_rank():
    returns = [10.0, 9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]
    assert quantile(returns, 0.10) == 1.0
    assert quantile(returns, 0.15) == 2.0
    assert quantile(returns, 0.5) == 5.0
    assert quantile([3.0], 0.05) == 3.0


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1])
def test_quantile_level_must_be_inside_unit_interval(q):
    with pytest.raises(ContractError):
        quantile([1.0, 2.0], q)


def test_quantile_of_empty_list():
    with pytest.raises(ContractError, match="empty"):
        quantile([], 0.1)


def test_robust_auc_of_constant_curve():
    assert robust_auc([0.0, 0.5, 2.0], [-3.0, -3.0, -3.0]) == pytest.approx(-3.0)


def test_robust_auc_of_unit_line():
    values = np.linspace(0.0, 1.0, 11)
    assert robust_auc(values, values) == pytest.approx(0.5)


def test_robust_auc_contracts():
    with pytest.raises(ContractError, match="two points"):
        robust_auc([1.0], [1.0])
    with pytest.raises(ContractError, match="increasing"):
        robust_auc([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ContractError):
        robust_auc([0.0, 1.0], [1.0])


def test_curve_point_fields():
    point = curve_point(1.0, list(range(20)), 0.1, (0.05, 0.15))
    assert (point.q05, point.q10, point.q15) == (0.0, 1.0, 2.0)
    assert (point.band_low, point.quantile_return, point.band_high) == (0.0, 1.0, 2.0)
    assert point.n_episodes == 20


# ============================================================================
# Fixed-perturbation sweeps
# ============================================================================


def test_sweep_values_default_to_declared_range(mtt_env):
    name, values = sweep_values(mtt_env, SweepConfig(param="w2", points=5))
    assert name == "w2"
    np.testing.assert_allclose(values, [0.0, 0.5, 1.0, 1.5, 2.0])


def test_sweep_values_need_a_known_parameter(mtt_env):
    with pytest.raises(ContractError, match="required"):
        sweep_values(mtt_env, SweepConfig())
    with pytest.raises(ContractError, match="w1"):
        sweep_values(mtt_env, SweepConfig(param="mass"))


def test_sweep_config_needs_two_points():
    with pytest.raises(ValidationError):
        SweepConfig(param="w1", points=1)


def test_sweep_report_shape(mtt_env):
    report = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "abc", seed=0, workers=1)
    assert report.points == 3
    assert report.range == (0.5, 1.5)
    assert [p.param_value for p in report.curve] == [0.5, 1.0, 1.5]
    assert all(p.n_episodes == 4 for p in report.curve)
    assert report.nominal == 1.0
    assert report.band_area >= 0.0
    assert report.curve[1].quantile_return == pytest.approx(-5.0)


def test_sweep_does_not_depend_on_worker_count(mtt_env):
    serial = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "abc", seed=3, workers=1)
    threaded = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "abc", seed=3, workers=3)
    assert serial.model_dump() == threaded.model_dump()


def test_sweep_leaves_template_env_nominal(mtt_env):
    sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "abc", workers=1)
    assert mtt_env.params == {"w1": 1.0, "w2": 1.0}


def test_aggregate_pools_returns(mtt_env):
    first = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "a", seed=0, workers=1)
    second = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "b", seed=1, workers=1)
    pooled = aggregate_reports([first, second], W1_SWEEP, mtt_env)
    assert pooled.checkpoint_id == "a+b"
    assert pooled.seeds == [0, 1]
    assert all(p.n_episodes == 8 for p in pooled.curve)


def test_aggregate_rejects_different_grids(mtt_env):
    first = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "a", workers=1)
    other = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP.model_copy(update={"v_max": 2.0}), "b", workers=1)
    with pytest.raises(ContractError):
        aggregate_reports([first, other], W1_SWEEP, mtt_env)
    with pytest.raises(ContractError):
        aggregate_reports([], W1_SWEEP, mtt_env)


def test_worker_count_honours_environment(monkeypatch):
    monkeypatch.setenv("USR_RL_THREADS", "2")
    assert worker_count(10) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv("USR_RL_THREADS", "many")
    with pytest.raises(ContractError):
        worker_count(10)


# ============================================================================
# Random-walk perturbations
# ============================================================================


def test_zero_walk_reproduces_fixed_episodes():
    env = MovingToTargetEnv(noise_scale=0.05)
    report = noisy_sweep(GreedyTargetPolicy(), env, 0.0, 6, "abc", seed=2)
    assert report.returns == fixed_returns(GreedyTargetPolicy(), env, 6, seed=2)


def test_walk_noise_does_not_shift_transition_noise():
    # a walk too small to move any parameter leaves every episode unchanged
    env = MovingToTargetEnv(noise_scale=0.05)
    fixed = noisy_sweep(GreedyTargetPolicy(), env, 0.0, 6, "abc", seed=2)
    negligible = noisy_sweep(GreedyTargetPolicy(), env, 1e-300, 6, "abc", seed=2)
    assert negligible.returns == fixed.returns


def test_walk_changes_returns():
    env = MovingToTargetEnv(noise_scale=0.0)
    fixed = noisy_sweep(GreedyTargetPolicy(), env, 0.0, 6, "abc", seed=2)
    noisy = noisy_sweep(GreedyTargetPolicy(), env, 0.3, 6, "abc", seed=2)
    assert noisy.returns != fixed.returns
    assert noisy.value == quantile(noisy.returns, 0.10)


def test_noisy_sweep_contracts(mtt_env):
    with pytest.raises(ContractError):
        noisy_sweep(GreedyTargetPolicy(), mtt_env, -0.1, 3, "abc")
    with pytest.raises(ContractError):
        noisy_sweep(GreedyTargetPolicy(), mtt_env, 0.1, 0, "abc")


# ============================================================================
# Figures
# ============================================================================


def test_svg_rendering_is_reproducible(mtt_env, tmp_path):
    report = sweep(GreedyTargetPolicy(), mtt_env, W1_SWEEP, "abc", workers=1)
    first = plot_curve(report, tmp_path / "a.svg").read_bytes()
    second = plot_curve(report, tmp_path / "b.svg").read_bytes()
    assert first == second
    assert b"<svg" in first


def test_noisy_plot_writes_svg(mtt_env, tmp_path):
    reports = [noisy_sweep(GreedyTargetPolicy(), mtt_env, sigma, 2, "abc") for sigma in (0.0, 0.1)]
    path = plot_noisy(reports, ["fixed", "walk"], tmp_path / "out" / "noisy.svg")
    assert path.exists()
