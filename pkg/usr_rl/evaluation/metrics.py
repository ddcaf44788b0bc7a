"""
Worst-case evaluation metrics: lower nearest-rank quantiles and Robust-AUC.
"""

import math
from typing import Sequence

import numpy as np
from scipy import integrate

from usr_rl.core.errors import ContractError


def quantile(returns: Sequence[float], q: float) -> float:
    """Lower nearest-rank ``q``-quantile.

    Sorts ascending and picks index ``ceil(q * n) - 1``, clamped to
    ``[0, n - 1]``.

    Raises:
        ContractError: Empty ``returns`` or ``q`` outside ``(0, 1)``.
    """
    values = np.sort(np.asarray(returns, dtype=np.float64).reshape(-1))
    if values.size == 0:
        raise ContractError("quantile of an empty list")
    if not 0.0 < q < 1.0:
        raise ContractError(f"quantile level must be in (0, 1), got {q}")
    index = min(max(math.ceil(q * values.size) - 1, 0), values.size - 1)
    return float(values[index])


def robust_auc(values: Sequence[float], returns: Sequence[float]) -> float:
    """Trapezoid area under ``returns(values)`` divided by the range width.

    Raises:
        ContractError: Fewer than two points, mismatched lengths, or values
            that are not strictly increasing.
    """
    v = np.asarray(values, dtype=np.float64)
    r = np.asarray(returns, dtype=np.float64)
    if v.ndim != 1 or v.shape != r.shape:
        raise ContractError(f"values and returns must be matching 1-D arrays, got {v.shape}, {r.shape}")
    if v.size < 2:
        raise ContractError("robust_auc needs at least two points")
    if np.any(np.diff(v) <= 0.0):
        raise ContractError("perturbation values must be strictly increasing")
    return float(integrate.trapezoid(r, v) / (v[-1] - v[0]))
