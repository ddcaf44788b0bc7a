"""
Perturbable environments and the factory used by training and sweeps.
"""

from usr_rl.core.config import EnvConfig
from usr_rl.core.constants import MTT_HORIZON, PENDULUM_HORIZON
from usr_rl.core.errors import ContractError
from usr_rl.envs.base import EnvState, PerturbableEnv, StepResult
from usr_rl.envs.moving_to_target import (
    GreedyTargetPolicy,
    MovingToTargetEnv,
    MovingToTargetModel,
    mtt_optimal_value,
    mtt_step,
)
from usr_rl.envs.pendulum import PendulumEnv, pendulum_energy, pendulum_step


def make_env(config: EnvConfig) -> PerturbableEnv:
    """Build a fresh environment instance from its config section."""
    if config.name == "moving_to_target":
        return MovingToTargetEnv(
            noise_scale=config.noise_scale,
            horizon=config.horizon or MTT_HORIZON,
            target=(config.target_x, config.target_y),
        )
    if config.name == "pendulum":
        return PendulumEnv(horizon=config.horizon or PENDULUM_HORIZON)
    raise ContractError(f"unknown environment {config.name!r}")


__all__ = [
    "EnvState",
    "GreedyTargetPolicy",
    "MovingToTargetEnv",
    "MovingToTargetModel",
    "PendulumEnv",
    "PerturbableEnv",
    "StepResult",
    "make_env",
    "mtt_optimal_value",
    "mtt_step",
    "pendulum_energy",
    "pendulum_step",
]
