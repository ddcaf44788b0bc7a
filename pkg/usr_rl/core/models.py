"""
Shared data models for usr-rl.

This module defines the pydantic models that are written to disk: environment
specs embedded in reports, checkpoints, sweep reports and verification
summaries.
"""

import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from usr_rl.core.config import RunConfig
from usr_rl.core.constants import CHECKPOINT_FORMAT_VERSION


class ParamSpec(BaseModel):
    """One perturbable physical parameter.

    Attributes:
        name: Parameter name, e.g. ``w1`` or ``length``.
        nominal: Value used during training.
        low: Lower end of the perturbation range (inclusive).
        high: Upper end of the perturbation range (inclusive).
    """

    model_config = ConfigDict(frozen=True)

    name: str
    nominal: float
    low: float
    high: float

    @model_validator(mode="after")
    def _check_range(self) -> "ParamSpec":
        if not self.low < self.high:
            raise ValueError(f"{self.name}: range [{self.low}, {self.high}] is empty")
        if not self.low <= self.nominal <= self.high:
            raise ValueError(f"{self.name}: nominal {self.nominal} outside [{self.low}, {self.high}]")
        return self

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


class EnvSpec(BaseModel):
    """Static description of an environment.

    Attributes:
        name: Registered environment name.
        state_dim: Observation dimension.
        action_dim: Action dimension.
        params: Perturbable parameters in declaration order.
        horizon: Episode length (truncation, not termination).
        initial_state: Human-readable description of the initial distribution.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    state_dim: int = Field(ge=1)
    action_dim: int = Field(ge=1)
    params: List[ParamSpec]
    horizon: int = Field(ge=1)
    initial_state: str

    @field_validator("params")
    @classmethod
    def _unique_names(cls, params: List[ParamSpec]) -> List[ParamSpec]:
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names: {names}")
        return params

    @property
    def param_names(self) -> List[str]:
        return [p.name for p in self.params]

    def param(self, name: str) -> ParamSpec:
        for spec in self.params:
            if spec.name == name:
                return spec
        raise KeyError(name)

    def nominal_params(self) -> Dict[str, float]:
        return {p.name: p.nominal for p in self.params}


class ParamRecord(BaseModel):
    """A named array flattened to row-major float data."""

    model_config = ConfigDict(frozen=True)

    shape: List[int]
    data: List[float]

    @model_validator(mode="after")
    def _check_length(self) -> "ParamRecord":
        expected = math.prod(self.shape)
        if len(self.data) != expected:
            raise ValueError(f"data length {len(self.data)} != shape product {expected} for {self.shape}")
        if not all(math.isfinite(x) for x in self.data):
            raise ValueError("record contains non-finite values")
        return self

    @classmethod
    def from_array(cls, array: np.ndarray) -> "ParamRecord":
        array = np.asarray(array, dtype=np.float64)
        return cls(shape=list(array.shape), data=[float(x) for x in array.reshape(-1)])

    def to_array(self) -> np.ndarray:
        return np.array(self.data, dtype=np.float64).reshape(self.shape)


class AgentCheckpoint(BaseModel):
    """Everything needed to restore a trained agent.

    Attributes:
        format_version: Checkpoint layout version.
        records: Named parameter records. Names are ``<group>.<kind>.<layer>``
            for networks (``actor.weight.0``) plus ``log_temperature``.
        config: Configuration the agent was trained with.
        seed: Root seed of the run.
        step: Environment steps completed.
    """

    model_config = ConfigDict(frozen=True)

    format_version: int = CHECKPOINT_FORMAT_VERSION
    records: Dict[str, ParamRecord]
    config: RunConfig
    seed: int = Field(ge=0)
    step: int = Field(ge=0)

    @field_validator("format_version")
    @classmethod
    def _known_version(cls, version: int) -> int:
        if version != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}, expected {CHECKPOINT_FORMAT_VERSION}")
        return version


class CurvePoint(BaseModel):
    """Sweep result at one perturbation value."""

    model_config = ConfigDict(frozen=True)

    param_value: float
    q05: float
    q10: float
    q15: float
    quantile_return: float  # at the configured quantile
    band_low: float
    band_high: float
    n_episodes: int
    returns: List[float]


class RobustCurveReport(BaseModel):
    """Perturbation sweep output.

    Attributes:
        env: Spec of the swept environment.
        param: Name of the swept parameter.
        range: ``(v_min, v_max)``.
        points: Number of perturbation values.
        quantile: Quantile level of the headline curve.
        auc: Robust-AUC of the headline curve.
        band_area: Absolute area between the two band-quantile curves,
            divided by the range width.
        curve: One row per perturbation value, ascending.
        nominal: Training value of the swept parameter.
        checkpoint_id: Content hash of the evaluated checkpoint(s).
        seeds: Root seeds used for evaluation.
    """

    model_config = ConfigDict(frozen=True)

    env: EnvSpec
    param: str
    range: Tuple[float, float]
    points: int
    quantile: float
    auc: float
    band_area: float = Field(ge=0.0)
    curve: List[CurvePoint]
    nominal: float
    checkpoint_id: str
    seeds: List[int]

    @model_validator(mode="after")
    def _check_curve(self) -> "RobustCurveReport":
        values = [p.param_value for p in self.curve]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("curve values must be strictly ascending")
        if not math.isfinite(self.auc):
            raise ValueError("auc must be finite")
        return self


class NoisySweepReport(BaseModel):
    """Random-walk perturbation evaluation output."""

    model_config = ConfigDict(frozen=True)

    env: EnvSpec
    walk_sigma: float = Field(ge=0.0)
    episodes: int
    quantile: float
    value: float
    returns: List[float]
    checkpoint_id: str
    seeds: List[int]


class SuiteResult(BaseModel):
    """Outcome of one verification or gradient-check suite.

    Attributes:
        name: Suite name (``duality``, ``density_grad``...).
        trials: Instances evaluated.
        worst: Worst observed error or ratio slack.
        threshold: Pass threshold for ``worst``.
        passed: Whether every instance passed.
        failing_instance: Serialized inputs of the first failing instance.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    trials: int
    worst: float
    threshold: float
    passed: bool
    failing_instance: Optional[Dict[str, Any]] = None


class VerificationReport(BaseModel):
    """Collection of suite results printed by the verification commands."""

    model_config = ConfigDict(frozen=True)

    suites: List[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def summary_table(self) -> str:
        """Fixed-width text table, one row per suite."""
        header = f"{'suite':<24}{'trials':>8}{'worst':>14}{'threshold':>14}  status"
        rows = [header, "-" * len(header)]
        for s in self.suites:
            status = "PASS" if s.passed else "FAIL"
            rows.append(f"{s.name:<24}{s.trials:>8}{s.worst:>14.3e}{s.threshold:>14.3e}  {status}")
        return "\n".join(rows)
