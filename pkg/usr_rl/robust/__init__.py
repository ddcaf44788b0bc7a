"""
Robust targets: local transition models, uncertainty sets and their duals.
"""

from usr_rl.robust.local_model import (
    DiagonalGaussianModel,
    LocalGaussianModel,
    ModelSample,
    StateOffsetModel,
    build,
    build_batch,
    contraction_delta_1d,
)
from usr_rl.robust.uncertainty import (
    AdvDirection,
    RobustTargets,
    adv_direction,
    dual_l1,
    dual_l2,
    dual_weighted_l2,
    in_uncertainty_set,
    normalize_direction,
    penalty,
    robust_target,
    robust_target_quadrature_1d,
    robust_targets,
    support_oracle,
)

__all__ = [
    "AdvDirection",
    "DiagonalGaussianModel",
    "LocalGaussianModel",
    "ModelSample",
    "RobustTargets",
    "StateOffsetModel",
    "adv_direction",
    "build",
    "build_batch",
    "contraction_delta_1d",
    "dual_l1",
    "dual_l2",
    "dual_weighted_l2",
    "in_uncertainty_set",
    "normalize_direction",
    "penalty",
    "robust_target",
    "robust_target_quadrature_1d",
    "robust_targets",
    "support_oracle",
]
