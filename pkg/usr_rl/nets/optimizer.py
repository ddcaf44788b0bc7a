"""Optimizer module."""

from typing import List, Sequence, Tuple

import numpy as np

from usr_rl.core.constants import ADAM_BETAS, ADAM_EPS
from usr_rl.core.errors import ContractError


def global_norm(grads: Sequence[np.ndarray]) -> float:
    """L2 norm of all gradient arrays taken together."""
    return float(np.sqrt(sum(np.sum(g * g) for g in grads)))


def clip_by_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> Tuple[List[np.ndarray], float]:
    """Rescale ``grads`` so their global norm is at most ``max_norm``.

    Returns:
        ``(clipped grads, norm before clipping)``.
    """
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return [np.array(g) for g in grads], norm
    factor = max_norm / norm
    return [g * factor for g in grads], norm


class Adam:
    """Adam over a fixed list of numpy parameter arrays.

    The optimizer never mutates its inputs: ``step`` returns new arrays.
    """

    def __init__(
        self,
        shapes: Sequence[Tuple[int, ...]],
        lr: float,
        betas: Tuple[float, float] = ADAM_BETAS,
        eps: float = ADAM_EPS,
    ):
        if lr <= 0.0:
            raise ContractError(f"learning rate must be positive, got {lr}")
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self._step = 0
        self._m = [np.zeros(s) for s in shapes]
        self._v = [np.zeros(s) for s in shapes]

    @property
    def steps_taken(self) -> int:
        return self._step

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> List[np.ndarray]:
        """One descent step; returns the updated parameter arrays."""
        if len(params) != len(self._m) or len(grads) != len(self._m):
            raise ContractError(f"expected {len(self._m)} arrays, got {len(params)} params and {len(grads)} grads")
        self._step += 1
        beta1, beta2 = self.betas
        correction1 = 1.0 - beta1**self._step
        correction2 = 1.0 - beta2**self._step
        updated = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self._m[i] = beta1 * self._m[i] + (1.0 - beta1) * g
            self._v[i] = beta2 * self._v[i] + (1.0 - beta2) * g * g
            m_hat = self._m[i] / correction1
            v_hat = self._v[i] / correction2
            updated.append(p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return updated
