"""
Shared constants for usr-rl.

This module centralizes every default, bound and magic number used across the
toolkit, grouped by the component that consumes it.

Want to customize something?
    - Training scale? Look at the TRAIN_* constants (desk scale) or run with
      the ``full`` hydra preset for the full-scale hyperparameters.
    - Robust target? USR_* constants (sample size, local-model sigma).
    - Evaluation protocol? SWEEP_* constants.
"""

from typing import Dict, List, Tuple

# ============================================================================
# Numerics
# ============================================================================

FLOAT_DTYPE: str = "float64"  # every array in the toolkit
FD_EPSILON: float = 1e-5  # central finite-difference step
FD_DENOMINATOR_FLOOR: float = 1e-12  # relative-error guard in gradient checks
NORM_ZERO_THRESHOLD: float = 1e-12  # below this a gradient counts as zero

# ============================================================================
# Networks
# ============================================================================

DEFAULT_HIDDEN_WIDTH: int = 256  # desk scale; the full preset uses 1024
DEFAULT_HIDDEN_LAYERS: int = 2  # the full preset uses 3
DEFAULT_HIDDEN_ACTIVATION: str = "relu"
ACTIVATIONS: List[str] = ["relu", "tanh", "identity"]
LOG_STD_MIN: float = -5.0
LOG_STD_MAX: float = 2.0
TANH_CORRECTION_EPS: float = 1e-6  # keeps log(1 - a^2) finite at saturation

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS: float = 1e-8

# ============================================================================
# Environments
# ============================================================================

MTT_TARGET = (0.0, 0.0)
MTT_START_RADIUS: float = 5.0  # initial states lie on this circle around the target
MTT_GOAL_RADIUS: float = 0.2  # episode terminates inside this radius
MTT_TIME_COST: float = 2.0
MTT_HORIZON: int = 100
MTT_NOISE_SCALE: float = 0.05
MTT_FRICTION_RANGE = (0.0, 2.0)

PENDULUM_GRAVITY: float = 9.81
PENDULUM_DT: float = 0.05
PENDULUM_HORIZON: int = 200
PENDULUM_NOMINAL: Dict[str, float] = {"length": 1.0, "mass": 1.0, "damping": 0.1}
PENDULUM_RANGES: Dict[str, tuple] = {
    "length": (0.3, 3.0),
    "mass": (0.1, 5.0),
    "damping": (0.0, 2.0),
}

ENV_NAMES: List[str] = ["moving_to_target", "pendulum"]

# ============================================================================
# Robust target (local model + uncertainty sets)
# ============================================================================

USR_KINDS: List[str] = [
    "none",
    "l2_usr",
    "l1_usr",
    "adv_usr",
    "l1_weight_reg",
    "l2_weight_reg",
]
USR_PARAM_MODES: List[str] = ["mean", "mean_scale"]
DEFAULT_MODEL_SIGMA: float = 0.1
DEFAULT_SAMPLE_SIZE: int = 1  # "sample size" row of the hyperparameter table
DENSITY_FLOOR: float = 1e-30  # samples below this density are redrawn
MAX_RESAMPLE_RETRIES: int = 10
QUADRATURE_HALF_WIDTH: float = 8.0  # integrate mean +/- 8 sigma
QUADRATURE_NODES: int = 10_001

# Regularizer coefficients per task from the coefficient table. The
# cartpole_swingup row is the one closest to the toy tasks shipped here.
USR_COEFFICIENT_PRESETS: Dict[str, Dict[str, float]] = {
    "cartpole_balance": {
        "l1_weight_reg": 1e-5, "l2_weight_reg": 1e-4,
        "l1_usr": 5e-5, "l2_usr": 1e-4, "adv_usr": 1e-5,
    },
    "cartpole_swingup": {
        "l1_weight_reg": 1e-5, "l2_weight_reg": 1e-4,
        "l1_usr": 1e-4, "l2_usr": 1e-4, "adv_usr": 1e-4,
    },
    "walker_stand": {
        "l1_weight_reg": 1e-4, "l2_weight_reg": 1e-4,
        "l1_usr": 5e-5, "l2_usr": 1e-4, "adv_usr": 1e-4,
    },
    "walker_walk": {
        "l1_weight_reg": 1e-4, "l2_weight_reg": 1e-4,
        "l1_usr": 1e-4, "l2_usr": 1e-4, "adv_usr": 5e-4,
    },
    "quadruped_walk": {
        "l1_weight_reg": 1e-5, "l2_weight_reg": 1e-4,
        "l1_usr": 1e-4, "l2_usr": 1e-4, "adv_usr": 5e-4,
    },
    "quadruped_run": {
        "l1_weight_reg": 1e-4, "l2_weight_reg": 1e-4,
        "l1_usr": 5e-5, "l2_usr": 1e-4, "adv_usr": 7e-5,
    },
}

# ============================================================================
# SAC training (desk scale)
# ============================================================================

TRAIN_GAMMA: float = 0.99
TRAIN_BATCH_SIZE: int = 256
TRAIN_BUFFER_CAPACITY: int = 100_000
TRAIN_ACTOR_LR: float = 3e-4
TRAIN_CRITIC_LR: float = 3e-4
TRAIN_TEMP_LR: float = 3e-4
TRAIN_INIT_TEMPERATURE: float = 0.1
TRAIN_RHO: float = 0.005
TRAIN_TARGET_UPDATE_FREQ: int = 2
TRAIN_ACTOR_UPDATE_FREQ: int = 1
TRAIN_WARMUP_STEPS: int = 1_000
TRAIN_MAX_STEPS: int = 30_000
TRAIN_SEED: int = 0
TRAIN_LOG_INTERVAL: int = 1_000
TRAIN_EVAL_EPISODES: int = 10
TRAIN_GRAD_CLIP: float = 10.0

TRAIN_LOG_HEADER: List[str] = [
    "step",
    "episode_return",
    "critic_loss_1",
    "critic_loss_2",
    "actor_loss",
    "temperature",
    "penalty_mean",
]

# ============================================================================
# Evaluation sweeps
# ============================================================================

SWEEP_POINTS: int = 20
SWEEP_EPISODES: int = 100
SWEEP_QUANTILE: float = 0.10
SWEEP_BAND = (0.05, 0.15)
SWEEP_WALK_SIGMA: float = 0.05
CURVE_CSV_HEADER: List[str] = ["param_value", "q05", "q10", "q15", "n_episodes"]
THREADS_ENV_VAR: str = "USR_RL_THREADS"
LOG_LEVEL_ENV_VAR: str = "USR_RL_LOG_LEVEL"
LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT: str = "%Y-%m-%d %H:%M:%S"
# Third-party loggers held at WARNING
QUIET_LOGGERS: Tuple[str, ...] = ("matplotlib", "hydra", "PIL")

# ============================================================================
# Files and CLI
# ============================================================================

CHECKPOINT_FORMAT_VERSION: int = 1
CHECKPOINT_FILENAME: str = "checkpoint.json"
TRAIN_LOG_FILENAME: str = "train_log.csv"
CURVE_CSV_FILENAME: str = "curve.csv"
REPORT_JSON_FILENAME: str = "report.json"
CURVE_SVG_FILENAME: str = "curve.svg"
NOISY_REPORT_FILENAME: str = "noisy_report.json"
NOISY_SVG_FILENAME: str = "noisy.svg"
HYDRA_CONFIG_DIR_NAME: str = "hydra_configs"
DEFAULT_PRESET: str = "default"

EXIT_OK: int = 0
EXIT_VERIFY_FAILED: int = 1
EXIT_USAGE: int = 2
EXIT_NUMERICAL_ABORT: int = 3
