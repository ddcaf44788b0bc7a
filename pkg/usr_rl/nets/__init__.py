"""
Networks for usr-rl: a tape-based autodiff core, feed-forward actor and
critics, differentiable value functions and the Adam optimizer.
"""

from usr_rl.nets.diffcore import Tape, Var, finite_diff_check
from usr_rl.nets.mlp import MlpParams, bind, init_mlp, mlp_forward, soft_update
from usr_rl.nets.optimizer import Adam, clip_by_global_norm
from usr_rl.nets.policy import (
    PolicyOutput,
    critic_forward,
    deterministic_action,
    init_actor,
    init_critic,
    policy_sample,
    twin_min,
)
from usr_rl.nets.values import SoftValue, ValueFunction, input_gradient, value_and_input_gradient

__all__ = [
    "Adam",
    "MlpParams",
    "PolicyOutput",
    "SoftValue",
    "Tape",
    "ValueFunction",
    "Var",
    "bind",
    "clip_by_global_norm",
    "critic_forward",
    "deterministic_action",
    "finite_diff_check",
    "init_actor",
    "init_critic",
    "init_mlp",
    "input_gradient",
    "mlp_forward",
    "policy_sample",
    "soft_update",
    "twin_min",
    "value_and_input_gradient",
]
