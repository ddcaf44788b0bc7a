"""
Moving-to-target: steer a particle towards a goal point on the plane.

The action is a heading, normalized to unit length. Contact friction
``w = (w1, w2)`` scales the displacement per axis, so the nominal step moves
the particle one unit along the heading. Each step costs 2 on top of the
progress made towards the target, which makes ``V*(s) = -d(s, e)``.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from usr_rl.core.constants import (
    MTT_FRICTION_RANGE,
    MTT_GOAL_RADIUS,
    MTT_HORIZON,
    MTT_NOISE_SCALE,
    MTT_START_RADIUS,
    MTT_TARGET,
    MTT_TIME_COST,
    NORM_ZERO_THRESHOLD,
)
from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.core.models import EnvSpec, ParamSpec
from usr_rl.envs.base import PerturbableEnv
from usr_rl.robust.local_model import DiagonalGaussianModel


def normalize_action(action: np.ndarray) -> np.ndarray:
    """Scale a 2-D heading to unit length.

    Raises:
        ContractError: The action has (near) zero norm.
    """
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (2,):
        raise ShapeError("mtt_step", [action.shape, (2,)], "action must be 2-D")
    norm = np.linalg.norm(action)
    if norm < NORM_ZERO_THRESHOLD:
        raise ContractError("moving-to-target action has zero norm")
    return action / norm


def mtt_step(
    state: np.ndarray,
    action: np.ndarray,
    params: Sequence[float],
    noise_scale: float,
    rng: Optional[np.random.Generator],
    target: Sequence[float] = MTT_TARGET,
) -> Tuple[np.ndarray, float, bool]:
    """One transition ``s' ~ N(s + a * w, noise_scale^2 I)``.

    Returns:
        ``(next_state, reward, done)`` with reward ``d(s, e) - d(s', e) - 2``
        and ``done`` once the particle is within the goal radius. Horizon
        truncation is left to the environment.
    """
    if noise_scale < 0.0:
        raise ContractError(f"noise_scale must be >= 0, got {noise_scale}")
    state = np.asarray(state, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    heading = normalize_action(action)
    next_state = state + heading * np.asarray(params, dtype=np.float64)
    if noise_scale > 0.0:
        if rng is None:
            raise ContractError("a noisy step needs an rng")
        next_state = next_state + noise_scale * rng.standard_normal(2)
    distance_after = float(np.linalg.norm(next_state - target))
    reward = float(np.linalg.norm(state - target)) - distance_after - MTT_TIME_COST
    return next_state, reward, distance_after < MTT_GOAL_RADIUS


def mtt_optimal_value(state: np.ndarray, target: Sequence[float] = MTT_TARGET) -> float:
    """``V*(s) = -||s - e||``."""
    return -float(np.linalg.norm(np.asarray(state, dtype=np.float64) - np.asarray(target, dtype=np.float64)))


def mtt_spec(horizon: int = MTT_HORIZON) -> EnvSpec:
    low, high = MTT_FRICTION_RANGE
    return EnvSpec(
        name="moving_to_target",
        state_dim=2,
        action_dim=2,
        params=[
            ParamSpec(name="w1", nominal=1.0, low=low, high=high),
            ParamSpec(name="w2", nominal=1.0, low=low, high=high),
        ],
        horizon=horizon,
        initial_state=f"uniform on the circle of radius {MTT_START_RADIUS} around the target",
    )


class MovingToTargetEnv(PerturbableEnv):
    """Planar particle with per-axis friction ``w1``, ``w2``."""

    def __init__(
        self,
        noise_scale: float = MTT_NOISE_SCALE,
        horizon: int = MTT_HORIZON,
        target: Sequence[float] = MTT_TARGET,
    ):
        super().__init__(mtt_spec(horizon))
        if noise_scale < 0.0:
            raise ContractError(f"noise_scale must be >= 0, got {noise_scale}")
        self.noise_scale = float(noise_scale)
        self.target = np.asarray(target, dtype=np.float64)

    def sample_initial_state(self, rng: np.random.Generator) -> np.ndarray:
        angle = rng.uniform(0.0, 2.0 * np.pi)
        return self.target + MTT_START_RADIUS * np.array([np.cos(angle), np.sin(angle)])

    def transition(self, state, action, params, rng):
        return mtt_step(state, action, params, self.noise_scale, rng, self.target)

    def random_action(self, rng: np.random.Generator) -> np.ndarray:
        angle = rng.uniform(0.0, 2.0 * np.pi)
        return np.array([np.cos(angle), np.sin(angle)])


class GreedyTargetPolicy:
    """Scripted oracle heading straight at the target."""

    def __init__(self, target: Sequence[float] = MTT_TARGET):
        self.target = np.asarray(target, dtype=np.float64)

    def act(self, observation: np.ndarray) -> np.ndarray:
        offset = self.target - np.asarray(observation, dtype=np.float64)
        norm = np.linalg.norm(offset)
        if norm < NORM_ZERO_THRESHOLD:
            return np.array([1.0, 0.0])
        return offset / norm


class MovingToTargetModel(DiagonalGaussianModel):
    """The moving-to-target transition as a model over the friction vector.

    ``w_bar = w``, ``mean = s + a * w`` and ``scale = noise_scale``, so the
    Jacobian of a sample with respect to ``w`` is ``diag(a)``.
    """

    def __init__(self, state: np.ndarray, action: np.ndarray, w_bar: Sequence[float], noise_scale: float):
        if noise_scale <= 0.0:
            raise ContractError(f"model noise_scale must be > 0, got {noise_scale}")
        self.state = np.asarray(state, dtype=np.float64)
        self.action = normalize_action(action)
        self.w_bar = np.asarray(w_bar, dtype=np.float64)
        self.noise_scale = float(noise_scale)

    @property
    def mean(self) -> np.ndarray:
        return self.state + self.action * self.w_bar

    @property
    def scale(self) -> np.ndarray:
        return np.full(2, self.noise_scale)

    def param_vector(self) -> np.ndarray:
        return self.w_bar.copy()

    def mean_pullback(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64) * self.action

    def scale_pullback(self, v: np.ndarray) -> np.ndarray:
        return np.zeros_like(v, dtype=np.float64)

    def with_params(self, params: np.ndarray) -> "MovingToTargetModel":
        return MovingToTargetModel(self.state, self.action, params, self.noise_scale)
