"""
Squashed-Gaussian actor and Q-critics.

The actor network outputs ``2 * action_dim`` columns: the pre-squash mean and
an unbounded log-std that is mapped smoothly into ``[log_std_min,
log_std_max]``. Actions are ``tanh(mean + std * eps)`` and the log-probability
carries the tanh change-of-variables correction.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from usr_rl.core.constants import LOG_STD_MAX, LOG_STD_MIN, TANH_CORRECTION_EPS
from usr_rl.core.errors import ShapeError
from usr_rl.nets import diffcore
from usr_rl.nets.diffcore import Var
from usr_rl.nets.mlp import BoundMlp, MlpParams, init_mlp, layer_sizes, mlp_forward

LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

LogStdBounds = Tuple[float, float]


@dataclass(frozen=True)
class PolicyOutput:
    """A reparameterized policy sample.

    Attributes:
        action: Squashed action(s) in ``(-1, 1)``.
        log_prob: Log-density of ``action``, one value per state.
        mean: Pre-squash mean.
        log_std: Pre-squash log standard deviation, within bounds.
        eps: Standard-normal noise used for the sample.
    """

    action: np.ndarray
    log_prob: Union[float, np.ndarray]
    mean: np.ndarray
    log_std: np.ndarray
    eps: np.ndarray


def init_actor(
    state_dim: int,
    action_dim: int,
    hidden_width: int,
    hidden_layers: int,
    rng: np.random.Generator,
) -> MlpParams:
    return init_mlp(layer_sizes(state_dim, hidden_width, hidden_layers, 2 * action_dim), rng)


def init_critic(
    state_dim: int,
    action_dim: int,
    hidden_width: int,
    hidden_layers: int,
    rng: np.random.Generator,
) -> MlpParams:
    return init_mlp(layer_sizes(state_dim + action_dim, hidden_width, hidden_layers, 1), rng)


def action_dim_of(actor: MlpParams) -> int:
    return actor.out_dim // 2


def _as_batch(states: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(states, dtype=np.float64)
    if x.ndim == 1:
        return x.reshape(1, -1), True
    return x, False


def bound_log_std(raw: np.ndarray, bounds: LogStdBounds = (LOG_STD_MIN, LOG_STD_MAX)) -> np.ndarray:
    low, high = bounds
    return low + 0.5 * (high - low) * (np.tanh(raw) + 1.0)


def policy_moments(
    actor: MlpParams,
    states: np.ndarray,
    bounds: LogStdBounds = (LOG_STD_MIN, LOG_STD_MAX),
) -> Tuple[np.ndarray, np.ndarray]:
    """Pre-squash mean and bounded log-std for a batch of states."""
    out = mlp_forward(actor, states)
    dim = out.shape[-1] // 2
    return out[..., :dim], bound_log_std(out[..., dim:], bounds)


def policy_sample(
    actor: MlpParams,
    state: np.ndarray,
    rng: np.random.Generator,
    log_std_bounds: LogStdBounds = (LOG_STD_MIN, LOG_STD_MAX),
    eps: Optional[np.ndarray] = None,
) -> PolicyOutput:
    """Sample ``tanh(mean + std * eps)`` with its log-probability.

    Args:
        actor: Actor parameters.
        state: One state ``(d,)`` or a batch ``(B, d)``.
        rng: Noise source, unused when ``eps`` is given.
        log_std_bounds: ``(min, max)`` of the log standard deviation.
        eps: Optional frozen standard-normal draws, same shape as the action.

    Returns:
        ``PolicyOutput``; a single state gives vector fields and a float
        ``log_prob``.
    """
    batch, single = _as_batch(state)
    if not np.all(np.isfinite(batch)):
        raise ShapeError("policy_sample", [batch.shape], "state has non-finite entries")
    mean, log_std = policy_moments(actor, batch, log_std_bounds)
    if eps is None:
        eps = rng.standard_normal(mean.shape)
    eps = np.asarray(eps, dtype=np.float64).reshape(mean.shape)
    action = np.tanh(mean + np.exp(log_std) * eps)
    gaussian = np.sum(-0.5 * eps * eps - log_std - LOG_SQRT_2PI, axis=1)
    correction = np.sum(np.log(1.0 - action * action + TANH_CORRECTION_EPS), axis=1)
    log_prob = gaussian - correction
    if single:
        return PolicyOutput(action[0], float(log_prob[0]), mean[0], log_std[0], eps[0])
    return PolicyOutput(action, log_prob, mean, log_std, eps)


def deterministic_action(actor: MlpParams, state: np.ndarray) -> np.ndarray:
    """Evaluation-time action ``tanh(mean)``."""
    out = mlp_forward(actor, state)
    dim = out.shape[-1] // 2
    return np.tanh(out[..., :dim])


def sample_on_tape(
    actor: BoundMlp,
    states: Var,
    eps: np.ndarray,
    log_std_bounds: LogStdBounds = (LOG_STD_MIN, LOG_STD_MAX),
) -> Tuple[Var, Var, Var, Var]:
    """Reparameterized sample recorded on the tape.

    Returns:
        ``(action, log_prob, mean, log_std)``; ``log_prob`` has shape ``(B,)``.
    """
    out = actor.apply(states)
    dim = out.shape[1] // 2
    if eps.shape != (out.shape[0], dim):
        raise ShapeError("sample_on_tape", [eps.shape, (out.shape[0], dim)], "noise shape mismatch")
    low, high = log_std_bounds
    mean = diffcore.columns(out, 0, dim)
    raw = diffcore.columns(out, dim, 2 * dim)
    log_std = diffcore.scale(diffcore.tanh(raw) + 1.0, 0.5 * (high - low)) + low
    action = diffcore.tanh(mean + diffcore.exp(log_std) * eps)
    gaussian = diffcore.sum_(-log_std + (-0.5 * eps * eps - LOG_SQRT_2PI), axis=1)
    correction = diffcore.sum_(
        diffcore.log(1.0 - diffcore.square(action) + TANH_CORRECTION_EPS), axis=1
    )
    return action, gaussian - correction, mean, log_std


def critic_forward(critic: MlpParams, state: np.ndarray, action: np.ndarray) -> Union[float, np.ndarray]:
    """Q-value of ``(state, action)``; float for one pair, ``(B,)`` for a batch."""
    s = np.asarray(state, dtype=np.float64)
    a = np.asarray(action, dtype=np.float64)
    if s.ndim != a.ndim or (s.ndim == 2 and s.shape[0] != a.shape[0]):
        raise ShapeError("critic_forward", [s.shape, a.shape], "state and action batches differ")
    if s.shape[-1] + a.shape[-1] != critic.in_dim:
        raise ShapeError("critic_forward", [s.shape, a.shape, critic.weights[0].shape], "input width mismatch")
    q = mlp_forward(critic, np.concatenate([s, a], axis=-1))
    return float(q[0]) if s.ndim == 1 else q[:, 0]


def critic_on_tape(critic: BoundMlp, states: Var, actions: Var) -> Var:
    """Q-values ``(B, 1)`` recorded on the tape."""
    return critic.apply(diffcore.concat(states, actions))


def twin_min(q1: Union[float, np.ndarray], q2: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Pessimistic combination of the twin critics."""
    if np.ndim(q1) == 0:
        return float(min(q1, q2))
    return np.minimum(q1, q2)
