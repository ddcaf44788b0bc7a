"""
Shared fixtures for the usr-rl test suite.
"""

import numpy as np
import pytest

from usr_rl.core.config import RunConfig
from usr_rl.envs import MovingToTargetEnv, PendulumEnv


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def mtt_env() -> MovingToTargetEnv:
    """Noise-free moving-to-target so every step is deterministic."""
    return MovingToTargetEnv(noise_scale=0.0)


@pytest.fixture
def pendulum_env() -> PendulumEnv:
    return PendulumEnv()


@pytest.fixture
def tiny_config() -> RunConfig:
    """Small networks and a short budget for end-to-end runs."""
    return RunConfig.from_sections(
        {
            "env": {"name": "moving_to_target", "noise_scale": 0.05, "horizon": 20},
            "train": {
                "batch_size": 8,
                "buffer_capacity": 200,
                "warmup_steps": 10,
                "max_steps": 30,
                "hidden_width": 8,
                "hidden_layers": 1,
                "log_interval": 10,
                "eval_episodes": 1,
            },
            "usr": {"kind": "l2_usr", "alpha_u": 1e-4, "sample_size": 2},
            "sweep": {"points": 3, "episodes": 4},
        }
    )
