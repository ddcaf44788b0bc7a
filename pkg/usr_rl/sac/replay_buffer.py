"""
Fixed-capacity FIFO replay buffer.
"""

import numpy as np

from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.core.transitions import TransitionBatch, TransitionSample


class ReplayBuffer:
    """Ring storage of transitions with uniform sampling.

    Args:
        capacity: Maximum number of stored transitions; the oldest entry is
            overwritten once full.
        state_dim: State width.
        action_dim: Action width.
    """

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ContractError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.dones = np.zeros(capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, sample: TransitionSample) -> None:
        state = np.asarray(sample.state, dtype=np.float64)
        action = np.asarray(sample.action, dtype=np.float64)
        if state.shape != self.states.shape[1:] or action.shape != self.actions.shape[1:]:
            raise ShapeError("ReplayBuffer.push", [state.shape, action.shape, self.states.shape[1:]])
        i = self.cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = sample.reward
        self.next_states[i] = sample.next_state
        self.dones[i] = float(sample.done)
        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform indices, with replacement, over the filled region."""
        if batch_size < 1:
            raise ContractError(f"batch_size must be >= 1, got {batch_size}")
        if self.size < batch_size:
            raise ContractError(f"buffer holds {self.size} transitions, need {batch_size}")
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        idx = self.sample_indices(batch_size, rng)
        return TransitionBatch(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_states=self.next_states[idx],
            dones=self.dones[idx],
        )

    def __getitem__(self, index: int) -> TransitionSample:
        """Stored transition ``index`` counted from the oldest one still held."""
        if not 0 <= index < self.size:
            raise IndexError(index)
        start = self.cursor if self.size == self.capacity else 0
        i = (start + index) % self.capacity
        return TransitionSample(
            state=self.states[i].copy(),
            action=self.actions[i].copy(),
            reward=float(self.rewards[i]),
            next_state=self.next_states[i].copy(),
            done=bool(self.dones[i]),
        )
