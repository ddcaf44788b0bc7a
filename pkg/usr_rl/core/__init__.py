"""
Core utilities and shared components for usr-rl.
"""

from usr_rl.core.config import (
    EnvConfig,
    RunConfig,
    SweepConfig,
    TrainConfig,
    UncertaintySetSpec,
    UsrConfig,
)
from usr_rl.core.errors import (
    ConfigError,
    ContractError,
    DomainError,
    EvaluationError,
    ShapeError,
    TrainingError,
    UsrRlError,
)
from usr_rl.core.logging_config import get_logger, setup_logging

__all__ = [
    "ConfigError",
    "ContractError",
    "DomainError",
    "EnvConfig",
    "EvaluationError",
    "RunConfig",
    "ShapeError",
    "SweepConfig",
    "TrainConfig",
    "TrainingError",
    "UncertaintySetSpec",
    "UsrConfig",
    "UsrRlError",
    "get_logger",
    "setup_logging",
]
