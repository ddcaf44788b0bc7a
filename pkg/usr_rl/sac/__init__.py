"""
Robust Soft Actor-Critic: replay buffer, agent state, updates and training loop.
"""

from usr_rl.sac.agent import SacAgent, SacOptimizers, agent_from_checkpoint, init_agent, make_checkpoint
from usr_rl.sac.replay_buffer import ReplayBuffer
from usr_rl.sac.trainer import TrainResult, train
from usr_rl.sac.updates import actor_update, compute_targets, critic_update, target_update, temperature_update

__all__ = [
    "ReplayBuffer",
    "SacAgent",
    "SacOptimizers",
    "TrainResult",
    "actor_update",
    "agent_from_checkpoint",
    "compute_targets",
    "critic_update",
    "init_agent",
    "make_checkpoint",
    "target_update",
    "temperature_update",
    "train",
]
