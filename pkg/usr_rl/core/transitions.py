"""
Replay tuples shared by the trainer and the robust target.
"""

from dataclasses import dataclass

import numpy as np

from usr_rl.core.errors import ContractError, ShapeError


@dataclass(frozen=True)
class TransitionSample:
    """One replay tuple ``(s, a, r, x, done)``.

    ``next_state`` is the observed next state ``x``; ``done`` is set only for
    true terminal states, never for horizon truncation.
    """

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool = False

    def __post_init__(self) -> None:
        if not np.isfinite(self.reward):
            raise ContractError(f"reward must be finite, got {self.reward}")
        if np.shape(self.state) != np.shape(self.next_state):
            raise ShapeError("TransitionSample", [np.shape(self.state), np.shape(self.next_state)])


@dataclass(frozen=True)
class TransitionBatch:
    """Column-stacked transitions; every field has ``B`` rows."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __post_init__(self) -> None:
        n = self.states.shape[0]
        for name in ("actions", "rewards", "next_states", "dones"):
            if getattr(self, name).shape[0] != n:
                raise ShapeError("TransitionBatch", [self.states.shape, getattr(self, name).shape], name)
        if n == 0:
            raise ContractError("batch is empty")

    def __len__(self) -> int:
        return self.states.shape[0]

    @classmethod
    def from_samples(cls, samples: "list[TransitionSample]") -> "TransitionBatch":
        return cls(
            states=np.stack([s.state for s in samples]).astype(np.float64),
            actions=np.stack([s.action for s in samples]).astype(np.float64),
            rewards=np.array([s.reward for s in samples], dtype=np.float64),
            next_states=np.stack([s.next_state for s in samples]).astype(np.float64),
            dones=np.array([float(s.done) for s in samples], dtype=np.float64),
        )
