"""
Tests for the parametric Gaussian transition models.
"""

import numpy as np
import pytest
from scipy import stats

from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.core.transitions import TransitionSample
from usr_rl.robust.local_model import (
    LocalGaussianModel,
    StateOffsetModel,
    build,
    build_batch,
    contraction_delta_1d,
)


def _fd_param_gradient(model, point, h=1e-6):
    base = model.param_vector()
    grad = np.zeros_like(base)
    for k in range(base.size):
        up, down = base.copy(), base.copy()
        up[k] += h
        down[k] -= h
        grad[k] = (model.with_params(up).density(point) - model.with_params(down).density(point)) / (2 * h)
    return grad


def test_density_is_product_of_normals():
    model = LocalGaussianModel([0.5, -1.0], [0.2, 0.4])
    point = np.array([0.6, -0.7])
    expected = stats.norm.pdf(0.6, 0.5, 0.2) * stats.norm.pdf(-0.7, -1.0, 0.4)
    assert model.density(point) == pytest.approx(expected)


@pytest.mark.parametrize("mode", ["mean", "mean_scale"])
def test_grad_density_matches_finite_differences(mode):
    model = LocalGaussianModel([0.5, -1.0], [0.3, 0.5], mode)
    point = np.array([0.7, -1.4])
    np.testing.assert_allclose(model.grad_density(point), _fd_param_gradient(model, point), rtol=1e-5)


def test_param_vector_layout():
    assert LocalGaussianModel([1.0, 2.0], [0.1, 0.2]).param_vector().tolist() == [1.0, 2.0]
    assert LocalGaussianModel([1.0, 2.0], [0.1, 0.2], "mean_scale").param_vector().tolist() == [1.0, 2.0, 0.1, 0.2]


def test_point_jacobian_per_mode():
    eps = np.array([0.5, -2.0])
    np.testing.assert_array_equal(LocalGaussianModel([0.0, 0.0], [1.0, 1.0]).point_jacobian(eps), np.eye(2))
    jacobian = LocalGaussianModel([0.0, 0.0], [1.0, 1.0], "mean_scale").point_jacobian(eps)
    np.testing.assert_array_equal(jacobian, np.hstack([np.eye(2), np.diag(eps)]))


def test_samples_are_reparameterized(rng):
    model = LocalGaussianModel([1.0, -1.0], [0.1, 0.2])
    drawn = model.sample(5, rng)
    np.testing.assert_allclose(drawn.points, model.mean + model.scale * drawn.eps)


def test_build_centres_on_next_state():
    sample = TransitionSample(np.zeros(2), np.ones(2), 0.0, np.array([3.0, 4.0]), False)
    model = build(sample, np.array([0.1, 0.1]))
    np.testing.assert_array_equal(model.mean, [3.0, 4.0])


def test_build_rejects_non_positive_sigma():
    sample = TransitionSample(np.zeros(2), np.ones(2), 0.0, np.ones(2), False)
    with pytest.raises(ContractError, match="strictly positive"):
        build(sample, np.array([0.1, 0.0]))


def test_build_rejects_sigma_of_wrong_width():
    with pytest.raises(ShapeError):
        build_batch(np.ones((3, 2)), np.array([0.1, 0.1, 0.1]))


def test_batched_model_shapes(rng):
    model = build_batch(rng.standard_normal((4, 2)), 0.3, "mean_scale")
    drawn = model.sample(6, rng)
    assert drawn.points.shape == (4, 6, 2)
    assert model.density(drawn.points).shape == (4, 6)
    assert model.grad_density(drawn.points).shape == (4, 6, 4)


def test_batched_model_rejects_unbatched_points():
    model = build_batch(np.zeros((4, 2)), 0.3)
    with pytest.raises(ShapeError):
        model.density(np.zeros((6, 2)))


def test_state_offset_model_extends_parameters():
    model = StateOffsetModel(LocalGaussianModel([1.0, 2.0], [0.5, 0.5]), np.array([0.1, -0.1]))
    np.testing.assert_allclose(model.mean, [1.1, 1.9])
    assert model.param_dim == 4
    np.testing.assert_array_equal(model.point_jacobian(np.zeros(2)), np.hstack([np.eye(2), np.eye(2)]))
    point = np.array([1.3, 1.5])
    np.testing.assert_allclose(model.grad_density(point), _fd_param_gradient(model, point), rtol=1e-5)


@pytest.mark.parametrize("sigma", [0.1, 0.5, 2.0])
def test_contraction_delta_mean_mode_closed_form(sigma):
    # integral of |dp/dmu| is twice the peak density
    expected = 2.0 / (sigma * np.sqrt(2.0 * np.pi))
    assert contraction_delta_1d(sigma, 1.0, "mean") == pytest.approx(expected, rel=1e-5)


def test_contraction_delta_grows_with_scale_parameter():
    assert contraction_delta_1d(0.5, 1.0, "mean_scale") > contraction_delta_1d(0.5, 1.0, "mean")
    assert contraction_delta_1d(0.5, 0.0) == 0.0


def test_contraction_delta_rejects_bad_input():
    with pytest.raises(ContractError):
        contraction_delta_1d(0.0, 1.0)
