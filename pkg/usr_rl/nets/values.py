"""
State-value functions that can be differentiated with respect to their input.

A value function maps a batch of points ``(N, d)`` to values ``(N,)``. It can
be recorded on a tape (for ``input_gradient``) or evaluated directly. The
robust target and the adversarial direction only depend on this interface.
"""

from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from usr_rl.core.errors import ContractError, EvaluationError, ShapeError
from usr_rl.nets import diffcore
from usr_rl.nets.diffcore import Tape, Var
from usr_rl.nets.mlp import MlpParams, bind, mlp_forward
from usr_rl.nets.policy import LogStdBounds, critic_forward, critic_on_tape, policy_sample, sample_on_tape


class ValueFunction(ABC):
    """Batch state-value function ``V: (N, d) -> (N,)``."""

    @abstractmethod
    def on_tape(self, tape: Tape, points: Var) -> Var:
        """Record ``V(points)`` on ``tape``; result has shape ``(N,)``."""

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """``V(points)`` without keeping a tape."""
        tape = Tape()
        return np.array(self.on_tape(tape, tape.leaf(points)).value)


class ConstantValue(ValueFunction):
    def __init__(self, constant: float):
        self.constant = float(constant)

    def on_tape(self, tape: Tape, points: Var) -> Var:
        return diffcore.sum_(diffcore.scale(points, 0.0), axis=1) + self.constant

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(points).shape[0], self.constant)


class NegativeDistanceValue(ValueFunction):
    """``V(s) = -||s - target||``, the optimal value of moving-to-target."""

    def __init__(self, target: np.ndarray):
        self.target = np.asarray(target, dtype=np.float64)

    def on_tape(self, tape: Tape, points: Var) -> Var:
        offset = np.broadcast_to(self.target, points.shape).copy()
        return -diffcore.sqrt(diffcore.sum_(diffcore.square(points - offset), axis=1))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return -np.linalg.norm(np.asarray(points) - self.target, axis=1)


class QuadraticValue(ValueFunction):
    """``V(s) = offset - curvature * ||s - center||^2``."""

    def __init__(self, curvature: float, center: float = 0.0, offset: float = 0.0):
        self.curvature = float(curvature)
        self.center = float(center)
        self.offset = float(offset)

    def on_tape(self, tape: Tape, points: Var) -> Var:
        spread = diffcore.sum_(diffcore.square(points - self.center), axis=1)
        return diffcore.scale(spread, -self.curvature) + self.offset

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.offset - self.curvature * np.sum((np.asarray(points) - self.center) ** 2, axis=1)


class MlpValue(ValueFunction):
    """A scalar-output network used directly as ``V``."""

    def __init__(self, params: MlpParams):
        if params.out_dim != 1:
            raise ContractError(f"value network must have one output, got {params.out_dim}")
        self.params = params

    def on_tape(self, tape: Tape, points: Var) -> Var:
        return diffcore.sum_(bind(tape, self.params, "value").apply(points), axis=1)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return mlp_forward(self.params, points)[:, 0]


class SoftValue(ValueFunction):
    """SAC soft value ``min_i Q_i(s, a) - temperature * log pi(a | s)``.

    The action noise for ``N`` points is drawn from a generator seeded with
    ``noise_seed``, so the tape path and the direct path evaluate the same
    ``a`` at each point.
    """

    def __init__(
        self,
        actor: MlpParams,
        critic_1: MlpParams,
        critic_2: MlpParams,
        temperature: float,
        log_std_bounds: LogStdBounds,
        noise_seed: int,
    ):
        self.actor = actor
        self.critic_1 = critic_1
        self.critic_2 = critic_2
        self.temperature = float(temperature)
        self.log_std_bounds = log_std_bounds
        self.noise_seed = int(noise_seed)

    def action_noise(self, count: int) -> np.ndarray:
        rng = np.random.Generator(np.random.PCG64(self.noise_seed))
        return rng.standard_normal((count, self.actor.out_dim // 2))

    def on_tape(self, tape: Tape, points: Var) -> Var:
        actor = bind(tape, self.actor, "actor")
        noise = self.action_noise(points.shape[0])
        action, log_prob, _, _ = sample_on_tape(actor, points, noise, self.log_std_bounds)
        q1 = critic_on_tape(bind(tape, self.critic_1, "critic_1"), points, action)
        q2 = critic_on_tape(bind(tape, self.critic_2, "critic_2"), points, action)
        q_min = diffcore.sum_(diffcore.minimum(q1, q2), axis=1)
        return q_min - diffcore.scale(log_prob, self.temperature)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        noise = self.action_noise(points.shape[0])
        sample = policy_sample(self.actor, points, rng=None, log_std_bounds=self.log_std_bounds, eps=noise)
        q1 = critic_forward(self.critic_1, points, sample.action)
        q2 = critic_forward(self.critic_2, points, sample.action)
        return np.minimum(q1, q2) - self.temperature * sample.log_prob


def value_and_input_gradient(value_fn: ValueFunction, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Values and ``dV/ds`` at each point from one backward pass.

    Each output row depends only on its own input row, so the gradient of the
    summed values gives every per-point gradient at once.

    Args:
        value_fn: Value function.
        points: One point ``(d,)`` or a batch ``(N, d)``.

    Returns:
        ``(values, gradients)`` shaped like the input (scalar value for a
        single point).

    Raises:
        EvaluationError: The gradient has non-finite entries.
    """
    x = np.asarray(points, dtype=np.float64)
    single = x.ndim == 1
    batch = x.reshape(1, -1) if single else x
    tape = Tape()
    leaf = tape.leaf(batch, name="points")
    values = value_fn.on_tape(tape, leaf)
    if values.shape != (batch.shape[0],):
        raise ShapeError("value_fn", [values.shape, (batch.shape[0],)], "value function must return (N,)")
    grads = tape.backward(diffcore.sum_(values))[leaf]
    if not np.all(np.isfinite(grads)):
        raise EvaluationError("input gradient has non-finite entries")
    if single:
        return np.asarray(values.value[0]), grads[0]
    return np.array(values.value), grads


def input_gradient(value_fn: ValueFunction, points: np.ndarray) -> np.ndarray:
    """``dV/ds`` at ``points`` (one point or a batch)."""
    return value_and_input_gradient(value_fn, points)[1]
