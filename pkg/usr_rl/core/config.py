"""
Configuration management for usr-rl.

This module provides the validated configuration objects shared by the
trainer, the evaluation harness and the command line. Every class is a frozen
pydantic model so a configuration can be embedded verbatim in a checkpoint and
re-validated when the checkpoint is loaded.
"""

from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from usr_rl.core.constants import (
    DEFAULT_HIDDEN_LAYERS,
    DEFAULT_HIDDEN_WIDTH,
    DEFAULT_MODEL_SIGMA,
    DEFAULT_SAMPLE_SIZE,
    LOG_STD_MAX,
    LOG_STD_MIN,
    MTT_NOISE_SCALE,
    MTT_TARGET,
    SWEEP_BAND,
    SWEEP_EPISODES,
    SWEEP_POINTS,
    SWEEP_QUANTILE,
    SWEEP_WALK_SIGMA,
    TRAIN_ACTOR_LR,
    TRAIN_ACTOR_UPDATE_FREQ,
    TRAIN_BATCH_SIZE,
    TRAIN_BUFFER_CAPACITY,
    TRAIN_CRITIC_LR,
    TRAIN_EVAL_EPISODES,
    TRAIN_GAMMA,
    TRAIN_GRAD_CLIP,
    TRAIN_INIT_TEMPERATURE,
    TRAIN_LOG_INTERVAL,
    TRAIN_MAX_STEPS,
    TRAIN_RHO,
    TRAIN_SEED,
    TRAIN_TARGET_UPDATE_FREQ,
    TRAIN_TEMP_LR,
    TRAIN_WARMUP_STEPS,
)

EnvName = Literal["moving_to_target", "pendulum"]
UsrKind = Literal["none", "l2_usr", "l1_usr", "adv_usr", "l1_weight_reg", "l2_weight_reg"]
ParamMode = Literal["mean", "mean_scale"]

_FROZEN = ConfigDict(frozen=True, extra="forbid", protected_namespaces=())


class UncertaintySetSpec(BaseModel):
    """Which uncertainty set regularizes the critic target, and its radius.

    Attributes:
        kind: ``none``, one of the set regularizers (``l2_usr``, ``l1_usr``,
            ``adv_usr``) or a weight-decay baseline (``l1_weight_reg``,
            ``l2_weight_reg``).
        alpha_u: Set radius. Ignored (treated as 0) when ``kind`` is ``none``.
    """

    model_config = _FROZEN

    kind: UsrKind = "none"
    alpha_u: float = Field(default=0.0, ge=0.0)

    @property
    def radius(self) -> float:
        """Radius actually applied."""
        return 0.0 if self.kind == "none" else self.alpha_u

    @property
    def regularizes_target(self) -> bool:
        return self.kind in ("l2_usr", "l1_usr", "adv_usr")

    @property
    def regularizes_weights(self) -> bool:
        return self.kind in ("l1_weight_reg", "l2_weight_reg")


class EnvConfig(BaseModel):
    """Environment selection (``[env]`` section).

    Attributes:
        name: Registered environment name.
        noise_scale: Transition noise standard deviation (moving-to-target).
        horizon: Episode length; ``None`` keeps the environment default.
        target_x: Moving-to-target goal abscissa.
        target_y: Moving-to-target goal ordinate.
    """

    model_config = _FROZEN

    name: EnvName = "moving_to_target"
    noise_scale: float = Field(default=MTT_NOISE_SCALE, ge=0.0)
    horizon: Optional[int] = Field(default=None, ge=1)
    target_x: float = MTT_TARGET[0]
    target_y: float = MTT_TARGET[1]


class TrainConfig(BaseModel):
    """SAC hyperparameters (``[train]`` section).

    Defaults are desk scale; the ``full`` hydra preset switches to the
    full-scale hyperparameters.
    """

    model_config = _FROZEN

    gamma: float = Field(default=TRAIN_GAMMA, ge=0.0, lt=1.0)
    batch_size: int = Field(default=TRAIN_BATCH_SIZE, ge=1)
    buffer_capacity: int = Field(default=TRAIN_BUFFER_CAPACITY, ge=1)
    actor_lr: float = Field(default=TRAIN_ACTOR_LR, gt=0.0)
    critic_lr: float = Field(default=TRAIN_CRITIC_LR, gt=0.0)
    temp_lr: float = Field(default=TRAIN_TEMP_LR, gt=0.0)
    init_temperature: float = Field(default=TRAIN_INIT_TEMPERATURE, gt=0.0)
    rho: float = Field(default=TRAIN_RHO, ge=0.0, le=1.0)
    target_update_freq: int = Field(default=TRAIN_TARGET_UPDATE_FREQ, ge=1)
    actor_update_freq: int = Field(default=TRAIN_ACTOR_UPDATE_FREQ, ge=1)
    warmup_steps: int = Field(default=TRAIN_WARMUP_STEPS, ge=0)
    max_steps: int = Field(default=TRAIN_MAX_STEPS, ge=0)
    log_std_min: float = LOG_STD_MIN
    log_std_max: float = LOG_STD_MAX
    hidden_width: int = Field(default=DEFAULT_HIDDEN_WIDTH, ge=1)
    hidden_layers: int = Field(default=DEFAULT_HIDDEN_LAYERS, ge=1)
    seed: int = Field(default=TRAIN_SEED, ge=0)
    log_interval: int = Field(default=TRAIN_LOG_INTERVAL, ge=1)
    eval_episodes: int = Field(default=TRAIN_EVAL_EPISODES, ge=0)
    grad_clip: float = Field(default=TRAIN_GRAD_CLIP, gt=0.0)

    @model_validator(mode="after")
    def _check_log_std_bounds(self) -> "TrainConfig":
        if not self.log_std_min < self.log_std_max:
            raise ValueError(
                f"log_std_min must be < log_std_max, got {self.log_std_min} >= {self.log_std_max}"
            )
        return self

    @property
    def log_std_bounds(self) -> Tuple[float, float]:
        return (self.log_std_min, self.log_std_max)


class UsrConfig(BaseModel):
    """Robust-target settings (``[usr]`` section).

    Attributes:
        kind: Uncertainty-set kind, see ``UncertaintySetSpec``.
        alpha_u: Set radius.
        sample_size: Next-state samples ``M`` per robust target.
        model_sigma: Local Gaussian model scale, identical on every dimension.
        param_mode: ``mean`` perturbs only the model mean, ``mean_scale`` also
            the per-dimension scale.
        adv_average_directions: Average the adversarial direction over the M
            samples instead of drawing one direction per transition.
    """

    model_config = _FROZEN

    kind: UsrKind = "none"
    alpha_u: float = Field(default=0.0, ge=0.0)
    sample_size: int = Field(default=DEFAULT_SAMPLE_SIZE, ge=1)
    model_sigma: float = Field(default=DEFAULT_MODEL_SIGMA, gt=0.0)
    param_mode: ParamMode = "mean"
    adv_average_directions: bool = False

    @property
    def uncertainty(self) -> UncertaintySetSpec:
        return UncertaintySetSpec(kind=self.kind, alpha_u=self.alpha_u)


class SweepConfig(BaseModel):
    """Perturbation sweep protocol (``[sweep]`` section).

    ``v_min``/``v_max`` are read from the ``min``/``max`` keys. When they are
    unset the sweep falls back to the parameter's declared range.
    """

    model_config = _FROZEN

    param: Optional[str] = None
    v_min: Optional[float] = None
    v_max: Optional[float] = None
    points: int = Field(default=SWEEP_POINTS, ge=2)
    episodes: int = Field(default=SWEEP_EPISODES, ge=1)
    quantile: float = Field(default=SWEEP_QUANTILE, gt=0.0, lt=1.0)
    band: Tuple[float, float] = SWEEP_BAND
    walk_sigma: float = Field(default=SWEEP_WALK_SIGMA, ge=0.0)
    seeds: List[int] = Field(default_factory=lambda: [TRAIN_SEED])

    @model_validator(mode="after")
    def _check_range(self) -> "SweepConfig":
        if self.v_min is not None and self.v_max is not None and not self.v_min < self.v_max:
            raise ValueError(f"min must be < max, got [{self.v_min}, {self.v_max}]")
        low, high = self.band
        if not 0.0 < low < high < 1.0:
            raise ValueError(f"band quantiles must satisfy 0 < low < high < 1, got {self.band}")
        if not self.seeds or any(s < 0 for s in self.seeds):
            raise ValueError(f"seeds must be a non-empty list of non-negative ints, got {self.seeds}")
        return self

    def resolved_range(self, declared: Tuple[float, float]) -> Tuple[float, float]:
        """Return ``(v_min, v_max)``, filling unset ends from ``declared``."""
        low = declared[0] if self.v_min is None else self.v_min
        high = declared[1] if self.v_max is None else self.v_max
        return (low, high)


class RunConfig(BaseModel):
    """Complete run configuration: one model per INI section.

    Attributes:
        env: Environment selection.
        train: SAC hyperparameters.
        usr: Robust-target settings.
        sweep: Evaluation protocol.
    """

    model_config = _FROZEN

    env: EnvConfig = EnvConfig()
    train: TrainConfig = TrainConfig()
    usr: UsrConfig = UsrConfig()
    sweep: SweepConfig = SweepConfig()

    @classmethod
    def from_sections(cls, sections: Mapping[str, Mapping[str, Any]]) -> "RunConfig":
        """Build a config from ``{section: {key: value}}``.

        Missing sections and keys keep their defaults. Raises pydantic's
        ``ValidationError`` on unknown keys or violated constraints.
        """
        return cls.model_validate({name: dict(values) for name, values in sections.items()})

    def with_updates(self, section: str, **values: Any) -> "RunConfig":
        """Return a copy with ``values`` overlaid on one section, re-validated."""
        data: Dict[str, Any] = self.model_dump()
        data[section] = {**data[section], **values}
        return RunConfig.model_validate(data)
