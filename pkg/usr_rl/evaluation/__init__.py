"""
Evaluation harness: quantile metrics, Robust-AUC, sweeps and plots.
"""

from usr_rl.evaluation.metrics import quantile, robust_auc
from usr_rl.evaluation.rollout import DeterministicPolicy, Policy, evaluate_returns, run_episode
from usr_rl.evaluation.sweep import aggregate_reports, noisy_sweep, sweep

__all__ = [
    "DeterministicPolicy",
    "Policy",
    "aggregate_reports",
    "evaluate_returns",
    "noisy_sweep",
    "quantile",
    "robust_auc",
    "run_episode",
    "sweep",
]
