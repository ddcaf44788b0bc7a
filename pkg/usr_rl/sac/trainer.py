"""
Robust SAC training loop.

Random warmup actions fill the buffer first. After that every environment
step is followed by one gradient phase: the critics update every step, the
actor and temperature every ``actor_update_freq`` steps and the target critics
every ``target_update_freq`` steps.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from usr_rl.core.config import RunConfig
from usr_rl.core.constants import TRAIN_LOG_HEADER
from usr_rl.core.errors import ContractError, TrainingError
from usr_rl.core.logging_config import get_logger
from usr_rl.core.models import AgentCheckpoint
from usr_rl.core.rng import derive_rng
from usr_rl.core.transitions import TransitionSample
from usr_rl.envs.base import PerturbableEnv
from usr_rl.evaluation.rollout import DeterministicPolicy, evaluate_returns
from usr_rl.nets.policy import policy_sample
from usr_rl.robust.local_model import contraction_delta_1d
from usr_rl.sac.agent import SacAgent, SacOptimizers, init_agent, make_checkpoint
from usr_rl.sac.replay_buffer import ReplayBuffer
from usr_rl.sac.updates import (
    actor_update,
    compute_targets,
    critic_update,
    target_update,
    temperature_update,
    update_diagnostics,
)

logger = get_logger(__name__)


@dataclass
class TrainResult:
    agent: SacAgent
    checkpoint: AgentCheckpoint
    log_rows: List[Dict[str, float]] = field(default_factory=list)


def check_contraction(config: RunConfig) -> float:
    """Warn when ``gamma + delta > 1`` for the configured local model.

    Returns:
        ``delta`` (0 when the target is not regularized).
    """
    usr = config.usr
    if not usr.uncertainty.regularizes_target:
        return 0.0
    delta = contraction_delta_1d(usr.model_sigma, usr.alpha_u, usr.param_mode)
    if config.train.gamma + delta > 1.0:
        logger.warning(
            f"gamma + delta = {config.train.gamma + delta:.4f} > 1 "
            f"(sigma={usr.model_sigma}, alpha_u={usr.alpha_u}); robust Q-values may diverge"
        )
    return delta


def _check_dims(env: PerturbableEnv, agent: SacAgent) -> None:
    if env.spec.state_dim != agent.state_dim or env.spec.action_dim != agent.action_dim:
        raise ContractError(
            f"agent dims ({agent.state_dim}, {agent.action_dim}) do not match "
            f"{env.spec.name} ({env.spec.state_dim}, {env.spec.action_dim})"
        )


def train(
    env: PerturbableEnv,
    config: RunConfig,
    duals: Optional[Mapping[str, Callable]] = None,
    on_log: Optional[Callable[[Dict[str, float]], None]] = None,
) -> TrainResult:
    """Train a robust SAC agent on ``env``.

    Args:
        env: Training environment at nominal parameters.
        config: Full run configuration.
        duals: Optional penalty overrides passed to the robust target.
        on_log: Called with every log row as it is produced.

    Returns:
        Final agent, its checkpoint and the log rows.

    Raises:
        TrainingError: A loss became non-finite; ``checkpoint`` on the error
            holds the last good agent.
    """
    train_cfg = config.train
    seed = train_cfg.seed
    check_contraction(config)

    agent = init_agent(env.spec.state_dim, env.spec.action_dim, train_cfg, derive_rng(seed, "init"))
    _check_dims(env, agent)
    optimizers = SacOptimizers.for_agent(agent, train_cfg)
    buffer = ReplayBuffer(train_cfg.buffer_capacity, env.spec.state_dim, env.spec.action_dim)
    env_rng = derive_rng(seed, "env")
    act_rng = derive_rng(seed, "act")
    update_rng = derive_rng(seed, "update")

    env.set_params({})
    observation = env.reset(env_rng)
    episode_return = 0.0
    last_episode_return = float("nan")
    losses = {"critic_loss_1": float("nan"), "critic_loss_2": float("nan"), "actor_loss": float("nan")}
    penalty_mean = 0.0
    rows: List[Dict[str, float]] = []
    last_good = agent

    logger.info(
        f"training {env.spec.name} kind={config.usr.kind} alpha_u={config.usr.alpha_u} "
        f"steps={train_cfg.max_steps} seed={seed}"
    )
    step = 0
    try:
        for step in range(1, train_cfg.max_steps + 1):
            if step <= train_cfg.warmup_steps:
                action = env.random_action(act_rng)
            else:
                action = policy_sample(agent.actor, observation, act_rng, train_cfg.log_std_bounds).action
            result = env.step(action, env_rng)
            buffer.push(TransitionSample(observation, action, result.reward, result.observation, result.terminated))
            episode_return += result.reward
            observation = result.observation
            if result.done:
                last_episode_return = episode_return
                episode_return = 0.0
                observation = env.reset(env_rng)

            if step > train_cfg.warmup_steps and len(buffer) >= train_cfg.batch_size:
                batch = buffer.sample(train_cfg.batch_size, update_rng)
                targets = compute_targets(batch, agent, config.usr, train_cfg, update_rng, duals, step)
                penalty_mean = float(np.mean(targets.penalties))
                critic_step = critic_update(agent, optimizers, batch, targets.targets, config.usr, train_cfg, step)
                agent = critic_step.agent
                losses["critic_loss_1"], losses["critic_loss_2"] = critic_step.loss_1, critic_step.loss_2
                if step % train_cfg.actor_update_freq == 0:
                    actor_step = actor_update(agent, optimizers, batch, train_cfg, update_rng, step)
                    agent = temperature_update(actor_step.agent, optimizers, batch, train_cfg, update_rng)
                    losses["actor_loss"] = actor_step.loss
                if step % train_cfg.target_update_freq == 0:
                    agent = target_update(agent, train_cfg.rho)
            last_good = agent

            if step % train_cfg.log_interval == 0:
                row = _log_row(env, agent, config, step, last_episode_return, losses, penalty_mean)
                rows.append(row)
                if on_log is not None:
                    on_log(row)
                logger.info(
                    f"step {step}: return={row['episode_return']:.3f} "
                    f"critic={row['critic_loss_1']:.4g}/{row['critic_loss_2']:.4g} "
                    f"temperature={row['temperature']:.4g}"
                )
    except TrainingError as exc:
        exc.diagnostics.update(update_diagnostics(last_good))
        exc.checkpoint = make_checkpoint(last_good, config, max(step - 1, 0))
        logger.error(f"training aborted: {exc}")
        raise

    return TrainResult(agent=agent, checkpoint=make_checkpoint(agent, config, train_cfg.max_steps), log_rows=rows)


def _log_row(env, agent, config, step, last_episode_return, losses, penalty_mean) -> Dict[str, float]:
    train_cfg = config.train
    if train_cfg.eval_episodes > 0:
        returns = evaluate_returns(
            env.clone(),
            DeterministicPolicy(agent.actor),
            train_cfg.eval_episodes,
            derive_rng(train_cfg.seed, "train.eval", step),
        )
        episode_return = float(np.mean(returns))
    else:
        episode_return = last_episode_return
    values = {
        "step": step,
        "episode_return": episode_return,
        "critic_loss_1": losses["critic_loss_1"],
        "critic_loss_2": losses["critic_loss_2"],
        "actor_loss": losses["actor_loss"],
        "temperature": agent.temperature,
        "penalty_mean": penalty_mean,
    }
    return {key: values[key] for key in TRAIN_LOG_HEADER}
