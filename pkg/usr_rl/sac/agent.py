"""
SAC agent state: actor, twin critics, their targets and the log-temperature.
"""

from dataclasses import dataclass, replace
from typing import Dict

import numpy as np

from usr_rl.core.config import RunConfig, TrainConfig
from usr_rl.core.constants import ADAM_BETAS, ADAM_EPS
from usr_rl.core.errors import ContractError
from usr_rl.core.models import AgentCheckpoint, ParamRecord
from usr_rl.nets.mlp import MlpParams, hidden_activations
from usr_rl.nets.optimizer import Adam
from usr_rl.nets.policy import init_actor, init_critic

NETWORK_GROUPS = ("actor", "critic_1", "critic_2", "critic_target_1", "critic_target_2")
LOG_TEMPERATURE_RECORD = "log_temperature"


@dataclass(frozen=True)
class SacAgent:
    """Immutable parameter snapshot; every update returns a new agent."""

    actor: MlpParams
    critic_1: MlpParams
    critic_2: MlpParams
    critic_target_1: MlpParams
    critic_target_2: MlpParams
    log_temperature: float

    @property
    def temperature(self) -> float:
        return float(np.exp(self.log_temperature))

    @property
    def state_dim(self) -> int:
        return self.actor.in_dim

    @property
    def action_dim(self) -> int:
        return self.actor.out_dim // 2

    def update(self, **changes) -> "SacAgent":
        return replace(self, **changes)

    def records(self) -> Dict[str, np.ndarray]:
        out: Dict[str, np.ndarray] = {}
        for group in NETWORK_GROUPS:
            out.update(getattr(self, group).records(group))
        out[LOG_TEMPERATURE_RECORD] = np.array([self.log_temperature])
        return out

    @classmethod
    def from_records(cls, records: Dict[str, np.ndarray], hidden_layers: int) -> "SacAgent":
        activations = hidden_activations(hidden_layers)
        if LOG_TEMPERATURE_RECORD not in records:
            raise ContractError(f"missing parameter record {LOG_TEMPERATURE_RECORD!r}")
        networks = {group: MlpParams.from_records(group, records, activations) for group in NETWORK_GROUPS}
        return cls(log_temperature=float(np.asarray(records[LOG_TEMPERATURE_RECORD]).reshape(-1)[0]), **networks)


def init_agent(state_dim: int, action_dim: int, config: TrainConfig, rng: np.random.Generator) -> SacAgent:
    """Fresh agent; target critics start as copies of the online critics."""
    actor = init_actor(state_dim, action_dim, config.hidden_width, config.hidden_layers, rng)
    critic_1 = init_critic(state_dim, action_dim, config.hidden_width, config.hidden_layers, rng)
    critic_2 = init_critic(state_dim, action_dim, config.hidden_width, config.hidden_layers, rng)
    return SacAgent(
        actor=actor,
        critic_1=critic_1,
        critic_2=critic_2,
        critic_target_1=critic_1,
        critic_target_2=critic_2,
        log_temperature=float(np.log(config.init_temperature)),
    )


@dataclass
class SacOptimizers:
    """One Adam state per trained parameter group."""

    actor: Adam
    critic_1: Adam
    critic_2: Adam
    temperature: Adam

    @classmethod
    def for_agent(cls, agent: SacAgent, config: TrainConfig) -> "SacOptimizers":
        def shapes(params: MlpParams):
            return [a.shape for a in params.arrays()]

        return cls(
            actor=Adam(shapes(agent.actor), config.actor_lr, ADAM_BETAS, ADAM_EPS),
            critic_1=Adam(shapes(agent.critic_1), config.critic_lr, ADAM_BETAS, ADAM_EPS),
            critic_2=Adam(shapes(agent.critic_2), config.critic_lr, ADAM_BETAS, ADAM_EPS),
            temperature=Adam([(1,)], config.temp_lr, ADAM_BETAS, ADAM_EPS),
        )


def make_checkpoint(agent: SacAgent, config: RunConfig, step: int) -> AgentCheckpoint:
    return AgentCheckpoint(
        records={name: ParamRecord.from_array(array) for name, array in agent.records().items()},
        config=config,
        seed=config.train.seed,
        step=step,
    )


def agent_from_checkpoint(checkpoint: AgentCheckpoint) -> SacAgent:
    records = {name: record.to_array() for name, record in checkpoint.records.items()}
    return SacAgent.from_records(records, checkpoint.config.train.hidden_layers)
