"""
Finite-MDP oracle lab: robust backups, value iteration and verification suites.
"""

from usr_rl.tabular.backups import (
    ValueIterationResult,
    robust_backup_bruteforce,
    robust_backup_closed,
    robust_policy_iteration,
    robust_value_iteration,
    simplex_violation,
)
from usr_rl.tabular.mdp import FiniteMdp, TabularPolicy, evaluate_policy_exact, garnet_mdp
from usr_rl.tabular.verify import (
    ContractionResult,
    GaussianGridSetting,
    TabularSetting,
    contraction_check,
    run_verification,
)

__all__ = [
    "ContractionResult",
    "FiniteMdp",
    "GaussianGridSetting",
    "TabularPolicy",
    "TabularSetting",
    "ValueIterationResult",
    "contraction_check",
    "evaluate_policy_exact",
    "garnet_mdp",
    "robust_backup_bruteforce",
    "robust_backup_closed",
    "robust_policy_iteration",
    "robust_value_iteration",
    "run_verification",
    "simplex_violation",
]
