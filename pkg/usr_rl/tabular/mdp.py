"""
Finite MDPs and policies for the tabular oracle lab.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from usr_rl.core.errors import ContractError, ShapeError

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class FiniteMdp:
    """Finite MDP with nominal transitions.

    Attributes:
        rewards: ``r(s, a)``, shape ``(nS, nA)``.
        transitions: ``P_bar(s' | s, a)``, shape ``(nS, nA, nS)``.
        gamma: Discount in ``[0, 1)``.
    """

    rewards: np.ndarray
    transitions: np.ndarray
    gamma: float

    def __post_init__(self) -> None:
        n_states, n_actions = self.rewards.shape
        if self.transitions.shape != (n_states, n_actions, n_states):
            raise ShapeError("FiniteMdp", [self.rewards.shape, self.transitions.shape])
        if np.any(self.transitions < 0.0):
            raise ContractError("transition probabilities must be non-negative")
        if np.max(np.abs(self.transitions.sum(axis=2) - 1.0)) > SIMPLEX_TOL:
            raise ContractError("each P_bar(. | s, a) must sum to 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ContractError(f"gamma must be in [0, 1), got {self.gamma}")

    @property
    def n_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_actions(self) -> int:
        return self.rewards.shape[1]


@dataclass(frozen=True)
class TabularPolicy:
    """Stochastic policy table ``pi(a | s)`` of shape ``(nS, nA)``."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        if self.probs.ndim != 2 or np.any(self.probs < 0.0):
            raise ContractError("policy must be a non-negative (nS, nA) table")
        if np.max(np.abs(self.probs.sum(axis=1) - 1.0)) > SIMPLEX_TOL:
            raise ContractError("policy rows must sum to 1")

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "TabularPolicy":
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def greedy(cls, q: np.ndarray) -> "TabularPolicy":
        probs = np.zeros_like(q)
        probs[np.arange(q.shape[0]), np.argmax(q, axis=1)] = 1.0
        return cls(probs)

    def state_values(self, q: np.ndarray) -> np.ndarray:
        """``V(s) = sum_a pi(a | s) Q(s, a)``."""
        return np.sum(self.probs * q, axis=1)


def random_simplex(size: int, rng: np.random.Generator) -> np.ndarray:
    p = rng.dirichlet(np.ones(size))
    return p / p.sum()


def garnet_mdp(
    n_states: int,
    n_actions: int,
    rng: np.random.Generator,
    branching: int = None,
    gamma: float = 0.9,
) -> FiniteMdp:
    """Random Garnet-style MDP.

    Each ``(s, a)`` reaches ``branching`` distinct successors (all states by
    default) with Dirichlet(1) probabilities; rewards are uniform on [0, 1].
    """
    if n_states < 1 or n_actions < 1:
        raise ContractError(f"need at least one state and action, got {n_states}, {n_actions}")
    branching = n_states if branching is None else branching
    if not 1 <= branching <= n_states:
        raise ContractError(f"branching must be in [1, {n_states}], got {branching}")
    transitions = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            successors = rng.choice(n_states, size=branching, replace=False)
            transitions[s, a, successors] = random_simplex(branching, rng)
    rewards = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    return FiniteMdp(rewards=rewards, transitions=transitions, gamma=gamma)


def random_policy(n_states: int, n_actions: int, rng: np.random.Generator) -> TabularPolicy:
    return TabularPolicy(np.stack([random_simplex(n_actions, rng) for _ in range(n_states)]))


def evaluate_policy_exact(mdp: FiniteMdp, policy: TabularPolicy) -> np.ndarray:
    """Nominal ``Q^pi`` from the linear system ``(I - gamma P^pi) q = r``."""
    n_sa = mdp.n_states * mdp.n_actions
    # P^pi[(s, a), (s', a')] = P(s' | s, a) pi(a' | s')
    p_pi = (mdp.transitions[:, :, :, None] * policy.probs[None, None, :, :]).reshape(n_sa, n_sa)
    q = linalg.solve(np.eye(n_sa) - mdp.gamma * p_pi, mdp.rewards.reshape(n_sa))
    return q.reshape(mdp.n_states, mdp.n_actions)
