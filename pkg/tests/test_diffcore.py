"""
Tests for the reverse-mode autodiff tape.
"""

import numpy as np
import pytest

from usr_rl.core.errors import ContractError, DomainError, EvaluationError, ShapeError
from usr_rl.nets import diffcore
from usr_rl.nets.diffcore import PRIMITIVES, Tape, finite_diff_check, numerical_gradient, value_and_grad


def test_square_gradient():
    tape = Tape()
    x = tape.leaf(3.0)
    assert tape.backward(diffcore.square(x))[x] == pytest.approx(6.0)


def test_reused_variable_accumulates_gradient():
    value, grad = value_and_grad(lambda tape, x: diffcore.sum_(x * x + x), np.array([1.0, -2.0]))
    assert value == pytest.approx(1.0 + 1.0 + 4.0 - 2.0)
    np.testing.assert_allclose(grad, [3.0, -3.0])


def test_unused_leaf_gets_zero_gradient():
    tape = Tape()
    x = tape.leaf(np.array([1.0, 2.0]))
    y = tape.leaf(np.array([3.0, 4.0]))
    grads = tape.backward(diffcore.sum_(diffcore.exp(x)))
    np.testing.assert_array_equal(grads[y], np.zeros(2))


def test_backward_can_run_twice():
    tape = Tape()
    x = tape.leaf(np.array([0.5, 1.5]))
    out = diffcore.sum_(diffcore.tanh(x))
    first = tape.backward(out)[x]
    second = tape.backward(out)[x]
    np.testing.assert_array_equal(first, second)


def test_matmul_gradients():
    rng = np.random.default_rng(0)
    a_value, b_value = rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
    tape = Tape()
    a, b = tape.leaf(a_value), tape.leaf(b_value)
    grads = tape.backward(diffcore.sum_(a @ b))
    np.testing.assert_allclose(grads[a], np.ones((3, 2)) @ b_value.T)
    np.testing.assert_allclose(grads[b], a_value.T @ np.ones((3, 2)))


def test_minimum_routes_ties_to_first_operand():
    tape = Tape()
    a, b = tape.leaf(np.array([1.0, 2.0])), tape.leaf(np.array([1.0, 0.0]))
    grads = tape.backward(diffcore.sum_(diffcore.minimum(a, b)))
    np.testing.assert_array_equal(grads[a], [1.0, 0.0])
    np.testing.assert_array_equal(grads[b], [0.0, 1.0])


def test_scalar_operand_gradient_is_summed():
    tape = Tape()
    x = tape.leaf(np.array([1.0, 2.0, 3.0]))
    c = tape.leaf(2.0)
    grads = tape.backward(diffcore.sum_(x * c))
    assert grads[c] == pytest.approx(6.0)


def test_columns_and_concat_scatter_gradients():
    tape = Tape()
    x = tape.leaf(np.arange(6.0).reshape(2, 3))
    left = diffcore.columns(x, 0, 1)
    joined = diffcore.concat(left, np.ones((2, 2)))
    grads = tape.backward(diffcore.sum_(joined))
    np.testing.assert_array_equal(grads[x], [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


def test_ndarray_on_the_left_records_on_the_tape():
    tape = Tape()
    x = tape.leaf(np.array([1.0, 2.0]))
    out = np.array([3.0, 3.0]) - x
    grads = tape.backward(diffcore.sum_(out))
    np.testing.assert_array_equal(grads[x], [-1.0, -1.0])


@pytest.mark.parametrize(
    "build, point",
    [
        (lambda tape, x: diffcore.sum_(diffcore.log(x)), [0.5, 2.0]),
        (lambda tape, x: diffcore.sum_(diffcore.sqrt(x)), [0.5, 2.0]),
        (lambda tape, x: diffcore.mean(diffcore.tanh(x) * diffcore.exp(x)), [-0.3, 0.7]),
        (lambda tape, x: diffcore.sum_(diffcore.divide(1.0, x)), [0.5, -2.0]),
        (lambda tape, x: diffcore.sum_(diffcore.absolute(x) + diffcore.relu(x)), [-0.5, 1.5]),
        (lambda tape, x: diffcore.sum_(diffcore.scale(diffcore.square(x), -0.5)), [1.0, -3.0]),
    ],
)
def test_gradients_match_central_differences(build, point):
    assert finite_diff_check(build, point) < 1e-6


def test_numerical_gradient_of_quadratic():
    grad = numerical_gradient(lambda tape, x: diffcore.sum_(diffcore.square(x)), np.array([1.0, -2.0]))
    np.testing.assert_allclose(grad, [2.0, -4.0], atol=1e-8)


def test_registry_covers_the_elementary_ops():
    assert {"add", "subtract", "multiply", "divide", "minimum", "matmul", "tanh", "exp", "log",
            "square", "sqrt", "abs", "relu", "scale", "sum", "mean", "columns", "concat"} <= set(PRIMITIVES)


# ============================================================================
# Errors
# ============================================================================


def test_log_of_non_positive_is_a_domain_error():
    tape = Tape()
    with pytest.raises(DomainError):
        diffcore.log(tape.leaf(np.array([1.0, 0.0])))


def test_division_by_zero_is_a_domain_error():
    tape = Tape()
    with pytest.raises(DomainError):
        diffcore.divide(tape.leaf(1.0), tape.leaf(0.0))


def test_mismatched_shapes_are_rejected():
    tape = Tape()
    with pytest.raises(ShapeError):
        tape.leaf(np.ones(2)) + tape.leaf(np.ones(3))


def test_matmul_inner_dimension_mismatch():
    tape = Tape()
    with pytest.raises(ShapeError):
        tape.leaf(np.ones((2, 3))) @ tape.leaf(np.ones((2, 3)))


def test_non_finite_leaf_is_rejected():
    with pytest.raises(EvaluationError):
        Tape().leaf(np.array([np.nan]))


def test_overflow_is_an_evaluation_error():
    tape = Tape()
    with pytest.raises(EvaluationError):
        diffcore.exp(tape.leaf(1000.0))


def test_backward_needs_a_scalar():
    tape = Tape()
    x = tape.leaf(np.ones(2))
    with pytest.raises(ContractError, match="scalar"):
        tape.backward(diffcore.tanh(x))


def test_operands_from_different_tapes_are_rejected():
    x = Tape().leaf(1.0)
    y = Tape().leaf(2.0)
    with pytest.raises(ContractError):
        x + y


def test_unknown_op_is_rejected():
    tape = Tape()
    with pytest.raises(ContractError, match="unknown op-kind"):
        tape.forward("softplus", tape.leaf(1.0))


def test_finite_diff_check_rejects_non_positive_epsilon():
    with pytest.raises(ContractError):
        finite_diff_check(lambda tape, x: diffcore.sum_(x), [1.0], epsilon=0.0)
