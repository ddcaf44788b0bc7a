"""
Torque-limited pendulum with perturbable length, mass and damping.

The angle is measured from the upright position, so ``theta = 0`` is the
unstable equilibrium the controller must hold and ``theta = pi`` hangs down.
The state is ``(cos theta, sin theta, theta_dot)``.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from usr_rl.core.constants import (
    PENDULUM_DT,
    PENDULUM_GRAVITY,
    PENDULUM_HORIZON,
    PENDULUM_NOMINAL,
    PENDULUM_RANGES,
)
from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.core.models import EnvSpec, ParamSpec
from usr_rl.envs.base import PerturbableEnv

PARAM_ORDER = ("length", "mass", "damping")
TORQUE_LIMIT = 1.0


def _unpack(params: Sequence[float]) -> Tuple[float, float, float]:
    length, mass, damping = (float(p) for p in params)
    if length <= 0.0 or mass <= 0.0 or damping < 0.0:
        raise ContractError(
            f"pendulum needs length > 0, mass > 0, damping >= 0; got {length}, {mass}, {damping}"
        )
    return length, mass, damping


def angular_acceleration(sin_theta: float, theta_dot: float, torque: float, params: Sequence[float]) -> float:
    """``g/l sin(theta) - b/(m l^2) theta_dot + torque/(m l^2)``."""
    length, mass, damping = _unpack(params)
    inertia = mass * length**2
    return PENDULUM_GRAVITY / length * sin_theta - damping / inertia * theta_dot + torque / inertia


def pendulum_energy(state: np.ndarray, params: Sequence[float]) -> float:
    """Kinetic plus potential energy, ``1/2 m l^2 theta_dot^2 + m g l cos(theta)``."""
    length, mass, _ = _unpack(params)
    cos_theta, _, theta_dot = np.asarray(state, dtype=np.float64)
    return 0.5 * mass * length**2 * theta_dot**2 + mass * PENDULUM_GRAVITY * length * cos_theta


def pendulum_reward(state: np.ndarray, torque: float) -> float:
    cos_theta, sin_theta, theta_dot = state
    theta = np.arctan2(sin_theta, cos_theta)
    return -float(theta**2 + 0.1 * theta_dot**2 + 0.001 * torque**2)


def pendulum_step(
    state: np.ndarray,
    action: np.ndarray,
    params: Sequence[float],
    rng: Optional[np.random.Generator] = None,
    dt: float = PENDULUM_DT,
) -> Tuple[np.ndarray, float, bool]:
    """Semi-implicit Euler step.

    The reward scores the state the action was taken in. The pendulum never
    terminates on its own; ``rng`` is accepted for interface parity and unused.

    Raises:
        ContractError: Torque outside ``[-1, 1]`` or invalid parameters.
    """
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (3,):
        raise ShapeError("pendulum_step", [state.shape, (3,)])
    torque = float(np.asarray(action, dtype=np.float64).reshape(-1)[0])
    if abs(torque) > TORQUE_LIMIT:
        raise ContractError(f"torque must be in [-1, 1], got {torque}")
    cos_theta, sin_theta, theta_dot = state
    reward = pendulum_reward(state, torque)
    theta_dot_next = theta_dot + dt * angular_acceleration(sin_theta, theta_dot, torque, params)
    # rest states stay bit-exact
    if theta_dot == 0.0 and theta_dot_next == 0.0:
        return state.copy(), reward, False
    theta_next = np.arctan2(sin_theta, cos_theta) + dt * theta_dot_next
    return np.array([np.cos(theta_next), np.sin(theta_next), theta_dot_next]), reward, False


def pendulum_spec(horizon: int = PENDULUM_HORIZON) -> EnvSpec:
    return EnvSpec(
        name="pendulum",
        state_dim=3,
        action_dim=1,
        params=[
            ParamSpec(name=name, nominal=PENDULUM_NOMINAL[name], low=PENDULUM_RANGES[name][0],
                      high=PENDULUM_RANGES[name][1])
            for name in PARAM_ORDER
        ],
        horizon=horizon,
        initial_state="theta uniform on [-pi, pi), theta_dot uniform on [-1, 1]",
    )


class PendulumEnv(PerturbableEnv):
    """Swing-up and balance task over ``(cos theta, sin theta, theta_dot)``."""

    def __init__(self, horizon: int = PENDULUM_HORIZON):
        super().__init__(pendulum_spec(horizon))

    def sample_initial_state(self, rng: np.random.Generator) -> np.ndarray:
        theta = rng.uniform(-np.pi, np.pi)
        return np.array([np.cos(theta), np.sin(theta), rng.uniform(-1.0, 1.0)])

    def transition(self, state, action, params, rng):
        return pendulum_step(state, np.clip(action, -TORQUE_LIMIT, TORQUE_LIMIT), params, rng)
