"""
Base class for perturbable environments.

An environment owns its spec, its current physical parameters and the current
episode. Dynamics are pure functions of ``(state, action, params, rng)``; the
class adds episode bookkeeping and the parameter-perturbation interface used
by the evaluation sweeps.
"""

import copy
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from usr_rl.core.errors import ContractError
from usr_rl.core.logging_config import get_logger
from usr_rl.core.models import EnvSpec

logger = get_logger(__name__)


class StepResult(NamedTuple):
    """Outcome of one environment step.

    ``terminated`` marks a true terminal state (bootstrapping stops);
    ``truncated`` marks the horizon cut-off (bootstrapping continues).
    """

    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


@dataclass
class EnvState:
    """Mutable episode state.

    Attributes:
        state: Internal state vector.
        step: Steps taken in the current episode.
        params: Current physical parameters.
    """

    state: np.ndarray
    step: int = 0
    params: Dict[str, float] = field(default_factory=dict)
    finished: bool = False


class PerturbableEnv(ABC):
    """Episodic environment with named, range-checked physical parameters."""

    def __init__(self, spec: EnvSpec):
        self.spec = spec
        self._params: Dict[str, float] = spec.nominal_params()
        self._episode: Optional[EnvState] = None

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------

    @property
    def params(self) -> Dict[str, float]:
        return dict(self._params)

    def param_vector(self) -> np.ndarray:
        """Current parameters in declaration order."""
        return np.array([self._params[name] for name in self.spec.param_names], dtype=np.float64)

    def set_params(self, values: Mapping[str, float]) -> "PerturbableEnv":
        """Set parameters; names not in ``values`` return to nominal.

        Args:
            values: ``name -> value``; values must lie in the declared range.

        Returns:
            This environment, for chaining.

        Raises:
            ContractError: Unknown name or out-of-range value; the message
                lists the valid names or the valid range.
        """
        updated = self.spec.nominal_params()
        for name, value in values.items():
            if name not in updated:
                raise ContractError(
                    f"unknown parameter {name!r} for {self.spec.name}; valid: {self.spec.param_names}"
                )
            param = self.spec.param(name)
            if not param.contains(float(value)):
                raise ContractError(
                    f"{name}={value} outside valid range [{param.low}, {param.high}]"
                )
            updated[name] = float(value)
        self._params = updated
        if self._episode is not None:
            self._episode.params = dict(updated)
        logger.debug(f"{self.spec.name} params set to {updated}")
        return self

    def clamp_params(self, values: Mapping[str, float]) -> Dict[str, float]:
        """Clip each value into its declared range."""
        return {
            name: float(np.clip(value, self.spec.param(name).low, self.spec.param(name).high))
            for name, value in values.items()
        }

    # ------------------------------------------------------------------
    # Episodes
    # ------------------------------------------------------------------

    @property
    def episode(self) -> EnvState:
        if self._episode is None:
            raise ContractError("environment has not been reset")
        return self._episode

    def reset(self, rng: np.random.Generator, state: Optional[np.ndarray] = None) -> np.ndarray:
        """Start an episode from ``state`` or from the initial distribution."""
        internal = self.sample_initial_state(rng) if state is None else np.array(state, dtype=np.float64)
        self._episode = EnvState(state=internal, step=0, params=dict(self._params))
        return self.observe(internal)

    def step(self, action: np.ndarray, rng: Optional[np.random.Generator] = None) -> StepResult:
        """Advance the current episode by one step."""
        episode = self.episode
        if episode.finished:
            raise ContractError("episode is over; call reset()")
        next_state, reward, terminated = self.transition(
            episode.state, np.asarray(action, dtype=np.float64), self.param_vector(), rng
        )
        episode.state = next_state
        episode.step += 1
        truncated = not terminated and episode.step >= self.spec.horizon
        episode.finished = terminated or truncated
        return StepResult(self.observe(next_state), float(reward), bool(terminated), bool(truncated))

    # ------------------------------------------------------------------
    # Dynamics
    # ------------------------------------------------------------------

    @abstractmethod
    def sample_initial_state(self, rng: np.random.Generator) -> np.ndarray:
        """Draw an internal state from the initial distribution."""

    @abstractmethod
    def transition(
        self,
        state: np.ndarray,
        action: np.ndarray,
        params: np.ndarray,
        rng: Optional[np.random.Generator],
    ) -> Tuple[np.ndarray, float, bool]:
        """Pure dynamics: ``(next_state, reward, terminated)``."""

    def clone(self) -> "PerturbableEnv":
        """Independent instance with the same configuration and parameters, not reset."""
        twin = copy.copy(self)
        twin._params = dict(self._params)
        twin._episode = None
        return twin

    def observe(self, state: np.ndarray) -> np.ndarray:
        return np.array(state, dtype=np.float64)

    def random_action(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, size=self.spec.action_dim)
