"""
Episode rollouts for evaluation.
"""

from typing import Callable, Mapping, Optional, Protocol

import numpy as np

from usr_rl.envs.base import PerturbableEnv
from usr_rl.nets.mlp import MlpParams
from usr_rl.nets.policy import deterministic_action


class Policy(Protocol):
    def act(self, observation: np.ndarray) -> np.ndarray: ...


class DeterministicPolicy:
    """Evaluation-time actor ``a = tanh(mean(s))``."""

    def __init__(self, actor: MlpParams):
        self.actor = actor

    def act(self, observation: np.ndarray) -> np.ndarray:
        return deterministic_action(self.actor, observation)


ParamSchedule = Callable[[int], Mapping[str, float]]


def run_episode(
    env: PerturbableEnv,
    policy: Policy,
    rng: np.random.Generator,
    params: Optional[Mapping[str, float]] = None,
    schedule: Optional[ParamSchedule] = None,
) -> float:
    """Undiscounted return of one episode.

    Args:
        env: Environment; its parameters are set to ``params`` (nominal for
            names not given) before the reset.
        policy: Acting policy.
        rng: Initial-state and transition noise.
        params: Fixed parameter overrides for the whole episode.
        schedule: Optional ``step -> params`` called before every step after
            the first, for time-varying perturbations.
    """
    env.set_params(params or {})
    observation = env.reset(rng)
    total = 0.0
    step = 0
    while True:
        if schedule is not None and step > 0:
            env.set_params(schedule(step))
        result = env.step(policy.act(observation), rng)
        total += result.reward
        observation = result.observation
        step += 1
        if result.done:
            return total


def evaluate_returns(
    env: PerturbableEnv,
    policy: Policy,
    episodes: int,
    rng: np.random.Generator,
    params: Optional[Mapping[str, float]] = None,
) -> np.ndarray:
    return np.array([run_episode(env, policy, rng, params) for _ in range(episodes)])
