"""
Gradient phases of robust SAC.

Each update takes an immutable ``SacAgent`` and returns a new one in which
only the parameter group it owns has changed.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from usr_rl.core.config import TrainConfig, UsrConfig
from usr_rl.core.errors import EvaluationError, TrainingError
from usr_rl.core.logging_config import get_logger
from usr_rl.core.rng import child_seed
from usr_rl.core.transitions import TransitionBatch
from usr_rl.nets import diffcore
from usr_rl.nets.diffcore import Tape, Var
from usr_rl.nets.mlp import BoundMlp, MlpParams, bind, soft_update
from usr_rl.nets.optimizer import Adam, clip_by_global_norm
from usr_rl.nets.policy import critic_on_tape, policy_sample, sample_on_tape
from usr_rl.nets.values import SoftValue
from usr_rl.robust.local_model import build_batch
from usr_rl.robust.uncertainty import RobustTargets, robust_targets
from usr_rl.sac.agent import SacAgent, SacOptimizers

logger = get_logger(__name__)


@dataclass(frozen=True)
class CriticStep:
    agent: SacAgent
    loss_1: float
    loss_2: float
    grad_norm: float


@dataclass(frozen=True)
class ActorStep:
    agent: SacAgent
    loss: float
    mean_log_prob: float


def target_entropy(action_dim: int) -> float:
    return -float(action_dim)


# ============================================================================
# Targets
# ============================================================================


def soft_value(agent: SacAgent, bounds, rng: np.random.Generator) -> SoftValue:
    """SAC soft value over the target critics, with its own action-noise seed."""
    return SoftValue(
        agent.actor,
        agent.critic_target_1,
        agent.critic_target_2,
        agent.temperature,
        bounds,
        noise_seed=child_seed(rng),
    )


def compute_targets(
    batch: TransitionBatch,
    agent: SacAgent,
    usr: UsrConfig,
    train: TrainConfig,
    rng: np.random.Generator,
    duals: Optional[Mapping[str, Callable]] = None,
    step: int = 0,
) -> RobustTargets:
    """Robust critic targets for a minibatch.

    The local model of each transition is centred on its observed next state.

    Raises:
        TrainingError: The bootstrap values or penalties are not finite.
    """
    model = build_batch(batch.next_states, usr.model_sigma, usr.param_mode)
    try:
        return robust_targets(
            batch.rewards,
            batch.dones,
            model,
            soft_value(agent, train.log_std_bounds, rng),
            usr.uncertainty,
            usr.sample_size,
            train.gamma,
            rng,
            average_directions=usr.adv_average_directions,
            duals=duals,
        )
    except EvaluationError as exc:
        raise TrainingError("non-finite critic target", step, {"cause": str(exc)}) from exc


# ============================================================================
# Critic
# ============================================================================


def weight_penalty(network: BoundMlp, usr: UsrConfig) -> Optional[Var]:
    """``alpha_u * sum |W|`` or ``alpha_u * sum W^2`` over weight matrices only."""
    if not usr.uncertainty.regularizes_weights or usr.alpha_u == 0.0:
        return None
    reduce = diffcore.absolute if usr.kind == "l1_weight_reg" else diffcore.square
    total = None
    for w in network.weights:
        term = diffcore.sum_(reduce(w))
        total = term if total is None else total + term
    return diffcore.scale(total, usr.alpha_u)


def critic_loss_on_tape(
    tape: Tape,
    critic: MlpParams,
    batch: TransitionBatch,
    targets: np.ndarray,
    usr: UsrConfig,
    name: str = "critic",
):
    """Mean squared TD error plus the optional weight penalty.

    Returns:
        ``(loss, bound network)``.
    """
    network = bind(tape, critic, name)
    q = diffcore.sum_(
        critic_on_tape(network, tape.constant(batch.states), tape.constant(batch.actions)), axis=1
    )
    loss = diffcore.mean(diffcore.square(q - targets))
    penalty = weight_penalty(network, usr)
    if penalty is not None:
        loss = loss + penalty
    return loss, network


def _descend(
    optimizer: Adam,
    params: MlpParams,
    grads: List[np.ndarray],
    grad_clip: float,
) -> "tuple[MlpParams, float]":
    clipped, norm = clip_by_global_norm(grads, grad_clip)
    return params.with_arrays(optimizer.step(params.arrays(), clipped)), norm


def _single_critic_step(critic, optimizer, batch, targets, usr, train, step, name):
    tape = Tape()
    try:
        loss, network = critic_loss_on_tape(tape, critic, batch, targets, usr, name)
        grads = tape.backward(loss)
    except EvaluationError as exc:
        raise TrainingError(f"non-finite {name} loss", step, {"cause": str(exc)}) from exc
    value = float(loss.value)
    if not np.isfinite(value):
        raise TrainingError(f"non-finite {name} loss", step, {"loss": value})
    new_params, norm = _descend(optimizer, critic, network.gradients(grads).arrays(), train.grad_clip)
    return new_params, value, norm


def critic_update(
    agent: SacAgent,
    optimizers: SacOptimizers,
    batch: TransitionBatch,
    targets: np.ndarray,
    usr: UsrConfig,
    train: TrainConfig,
    step: int = 0,
) -> CriticStep:
    """One Adam step on each online critic towards ``targets``.

    Raises:
        TrainingError: A loss or gradient is not finite.
    """
    if not np.all(np.isfinite(targets)):
        raise TrainingError("non-finite critic target", step, {"max_abs": float(np.nanmax(np.abs(targets)))})
    critic_1, loss_1, norm_1 = _single_critic_step(
        agent.critic_1, optimizers.critic_1, batch, targets, usr, train, step, "critic_1"
    )
    critic_2, loss_2, norm_2 = _single_critic_step(
        agent.critic_2, optimizers.critic_2, batch, targets, usr, train, step, "critic_2"
    )
    return CriticStep(agent.update(critic_1=critic_1, critic_2=critic_2), loss_1, loss_2, max(norm_1, norm_2))


# ============================================================================
# Actor and temperature
# ============================================================================


def actor_loss_on_tape(
    tape: Tape,
    agent: SacAgent,
    states: np.ndarray,
    eps: np.ndarray,
    bounds,
):
    """``mean(temperature * log pi(a|s) - min_i Q_i(s, a))`` with ``a`` reparameterized.

    Returns:
        ``(loss, log_prob, bound actor)``.
    """
    actor = bind(tape, agent.actor, "actor")
    s = tape.constant(states)
    action, log_prob, _, _ = sample_on_tape(actor, s, eps, bounds)
    q1 = critic_on_tape(bind(tape, agent.critic_1, "critic_1"), s, action)
    q2 = critic_on_tape(bind(tape, agent.critic_2, "critic_2"), s, action)
    q_min = diffcore.sum_(diffcore.minimum(q1, q2), axis=1)
    loss = diffcore.mean(diffcore.scale(log_prob, agent.temperature) - q_min)
    return loss, log_prob, actor


def actor_update(
    agent: SacAgent,
    optimizers: SacOptimizers,
    batch: TransitionBatch,
    train: TrainConfig,
    rng: np.random.Generator,
    step: int = 0,
) -> ActorStep:
    """One Adam step on the actor; critics and temperature are held fixed.

    Raises:
        TrainingError: The loss or its gradient is not finite.
    """
    eps = rng.standard_normal((len(batch), agent.action_dim))
    tape = Tape()
    try:
        loss, log_prob, actor = actor_loss_on_tape(tape, agent, batch.states, eps, train.log_std_bounds)
        grads = tape.backward(loss)
    except EvaluationError as exc:
        raise TrainingError("non-finite actor loss", step, {"cause": str(exc)}) from exc
    value = float(loss.value)
    if not np.isfinite(value):
        raise TrainingError("non-finite actor loss", step, {"loss": value})
    new_actor, _ = _descend(optimizers.actor, agent.actor, actor.gradients(grads).arrays(), train.grad_clip)
    return ActorStep(agent.update(actor=new_actor), value, float(np.mean(log_prob.value)))


def temperature_gradient(log_probs: np.ndarray, action_dim: int) -> float:
    """d/d(log temperature) of ``-log_temp * mean(log pi + target_entropy)``.

    Equals ``entropy estimate - target entropy``: negative (temperature
    rises) when the policy is less random than the target.
    """
    return -float(np.mean(log_probs) + target_entropy(action_dim))


def temperature_update(
    agent: SacAgent,
    optimizers: SacOptimizers,
    batch: TransitionBatch,
    train: TrainConfig,
    rng: np.random.Generator,
) -> SacAgent:
    """One Adam step on the log-temperature towards entropy ``-dim(A)``."""
    sample = policy_sample(agent.actor, batch.states, rng, train.log_std_bounds)
    grad = temperature_gradient(sample.log_prob, agent.action_dim)
    (new_log,) = optimizers.temperature.step([np.array([agent.log_temperature])], [np.array([grad])])
    return agent.update(log_temperature=float(new_log[0]))


def target_update(agent: SacAgent, rho: float) -> SacAgent:
    """Polyak-average both target critics towards the online critics."""
    return agent.update(
        critic_target_1=soft_update(agent.critic_target_1, agent.critic_1, rho),
        critic_target_2=soft_update(agent.critic_target_2, agent.critic_2, rho),
    )


def update_diagnostics(agent: SacAgent) -> Dict[str, float]:
    return {
        "actor_sq_norm": agent.actor.squared_norm(),
        "critic_1_sq_norm": agent.critic_1.squared_norm(),
        "critic_2_sq_norm": agent.critic_2.squared_norm(),
        "log_temperature": agent.log_temperature,
    }
