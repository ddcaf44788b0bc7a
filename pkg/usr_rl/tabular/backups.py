"""
Robust Bellman backups over rectangular L2 / L1 balls around ``P_bar(. | s, a)``.

The closed form subtracts the dual norm of ``V`` from the nominal
expectation. The brute-force oracle minimizes ``<P_bar + alpha_u u, V>`` over
sampled boundary points ``u`` of the unit ball, in unconstrained signed-measure
space, so both compute the same quantity.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Mapping, Optional

import numpy as np

from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.core.logging_config import get_logger
from usr_rl.robust.uncertainty import dual_l1, dual_l2
from usr_rl.tabular.mdp import FiniteMdp, TabularPolicy

logger = get_logger(__name__)

TabularSetKind = Literal["l2", "l1"]
DualFn = Callable[[np.ndarray, float], object]

MIN_BRUTEFORCE_DIRECTIONS = 1000
DEFAULT_MAX_ITERATIONS = 100_000

DEFAULT_DUALS: Dict[str, DualFn] = {"l2": dual_l2, "l1": dual_l1}


def _dual_for(kind: str, duals: Optional[Mapping[str, DualFn]]) -> DualFn:
    table = dict(DEFAULT_DUALS)
    if duals:
        table.update(duals)
    if kind not in table:
        raise ContractError(f"unknown set kind {kind!r}; valid: {sorted(DEFAULT_DUALS)}")
    return table[kind]


def penalty_lipschitz(kind: str, n_states: int) -> float:
    """Lipschitz bound ``c`` of ``V -> dual(V)`` in the sup norm (per unit ``alpha_u``)."""
    if kind == "l2":
        return float(np.sqrt(n_states))
    if kind == "l1":
        return 1.0
    raise ContractError(f"unknown set kind {kind!r}; valid: {sorted(DEFAULT_DUALS)}")


# ============================================================================
# Single-entry backups
# ============================================================================


def robust_backup_closed(
    p_bar: np.ndarray,
    v: np.ndarray,
    reward: float,
    gamma: float,
    kind: TabularSetKind,
    alpha_u: float,
    duals: Optional[Mapping[str, DualFn]] = None,
) -> float:
    """``r + gamma * (<P_bar, V> - dual(V))`` with the L2 or L1 dual.

    Args:
        duals: Optional replacement dual functions keyed by set kind. Used by
            the verification harness to inject a deliberately wrong dual.

    Raises:
        ContractError: Unknown ``kind``.
        ShapeError: ``p_bar`` and ``v`` differ in length.
    """
    p_bar = np.asarray(p_bar, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if p_bar.shape != v.shape or v.ndim != 1:
        raise ShapeError("robust_backup_closed", [p_bar.shape, v.shape])
    dual = _dual_for(kind, duals)
    # sup_u <-V, u> over the unit ball is the dual norm of V
    return float(reward + gamma * (p_bar @ v - dual(-v, alpha_u)))


def boundary_directions(kind: TabularSetKind, size: int, n_dirs: int, rng: np.random.Generator) -> np.ndarray:
    """``n_dirs`` random points on the unit sphere of the L2 or L1 norm."""
    if kind == "l2":
        g = rng.standard_normal((n_dirs, size))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if kind == "l1":
        e = rng.exponential(size=(n_dirs, size))
        signs = rng.choice([-1.0, 1.0], size=(n_dirs, size))
        return signs * e / e.sum(axis=1, keepdims=True)
    raise ContractError(f"unknown set kind {kind!r}; valid: {sorted(DEFAULT_DUALS)}")


def analytic_directions(kind: TabularSetKind, v: np.ndarray) -> np.ndarray:
    """Candidate minimizers: ``-V / ||V||`` for L2, the signed vertices for L1."""
    if kind == "l2":
        norm = np.linalg.norm(v)
        return (-v / norm)[None, :] if norm > 0.0 else np.zeros((0, v.size))
    eye = np.eye(v.size)
    return np.concatenate([eye, -eye])


def robust_backup_bruteforce(
    p_bar: np.ndarray,
    v: np.ndarray,
    reward: float,
    gamma: float,
    kind: TabularSetKind,
    alpha_u: float,
    n_dirs: int,
    rng: np.random.Generator,
    include_analytic: bool = True,
) -> float:
    """Minimum of ``r + gamma <P_bar + alpha_u u, V>`` over sampled unit-sphere ``u``.

    Raises:
        ContractError: ``n_dirs`` below 1000 or unknown ``kind``.
    """
    if n_dirs < MIN_BRUTEFORCE_DIRECTIONS:
        raise ContractError(f"n_dirs must be >= {MIN_BRUTEFORCE_DIRECTIONS}, got {n_dirs}")
    p_bar = np.asarray(p_bar, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if p_bar.shape != v.shape or v.ndim != 1:
        raise ShapeError("robust_backup_bruteforce", [p_bar.shape, v.shape])
    directions = boundary_directions(kind, v.size, n_dirs, rng)
    if include_analytic:
        directions = np.concatenate([directions, analytic_directions(kind, v)])
    inner = np.min(directions @ v)
    return float(reward + gamma * (p_bar @ v + alpha_u * inner))


def signed_minimizer(p_bar: np.ndarray, v: np.ndarray, kind: TabularSetKind, alpha_u: float) -> np.ndarray:
    """The transition vector attaining the closed-form robust backup."""
    p_bar = np.asarray(p_bar, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if kind == "l2":
        norm = np.linalg.norm(v)
        u = -v / norm if norm > 0.0 else np.zeros_like(v)
    elif kind == "l1":
        u = np.zeros_like(v)
        k = int(np.argmax(np.abs(v)))
        u[k] = -np.sign(v[k])
    else:
        raise ContractError(f"unknown set kind {kind!r}; valid: {sorted(DEFAULT_DUALS)}")
    return p_bar + alpha_u * u


def simplex_violation(p_bar: np.ndarray, v: np.ndarray, kind: TabularSetKind, alpha_u: float) -> float:
    """How far the signed-measure minimizer lies outside the probability simplex.

    Returns ``max(negative mass of one entry, |total mass - 1|)``; 0 when the
    minimizer is itself a distribution.
    """
    p = signed_minimizer(p_bar, v, kind, alpha_u)
    return float(max(0.0, -np.min(p), abs(p.sum() - 1.0)))


# ============================================================================
# Operators and iteration
# ============================================================================


def robust_bellman(
    mdp: FiniteMdp,
    policy: TabularPolicy,
    q: np.ndarray,
    kind: TabularSetKind,
    alpha_u: float,
    duals: Optional[Mapping[str, DualFn]] = None,
) -> np.ndarray:
    """Apply the robust policy-evaluation operator to a whole ``Q`` table."""
    if q.shape != mdp.rewards.shape:
        raise ShapeError("robust_bellman", [q.shape, mdp.rewards.shape])
    v = policy.state_values(q)
    dual = _dual_for(kind, duals)
    # rectangular sets share one radius, so the penalty is the same for every (s, a)
    return mdp.rewards + mdp.gamma * (mdp.transitions @ v - dual(-v, alpha_u))


@dataclass
class ValueIterationResult:
    """Fixed point of robust value iteration with its residual trace."""

    q: np.ndarray
    iterations: int
    residuals: List[float] = field(default_factory=list)
    lipschitz: float = 0.0


def robust_value_iteration(
    mdp: FiniteMdp,
    policy: TabularPolicy,
    kind: TabularSetKind,
    alpha_u: float,
    tol: float,
    q0: Optional[np.ndarray] = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    duals: Optional[Mapping[str, DualFn]] = None,
) -> ValueIterationResult:
    """Iterate the robust operator until the fixed point is within ``tol``.

    Stops once ``||Q_{k+1} - Q_k||_inf < tol`` and the a-posteriori bound
    ``L / (1 - L) * ||Q_{k+1} - Q_k||_inf`` is below ``tol`` as well, with
    ``L = gamma + alpha_u * c``.

    Raises:
        ContractError: ``tol <= 0`` or ``gamma + alpha_u * c >= 1``.
    """
    if tol <= 0.0:
        raise ContractError(f"tol must be > 0, got {tol}")
    lipschitz = mdp.gamma + alpha_u * penalty_lipschitz(kind, mdp.n_states)
    if lipschitz >= 1.0:
        raise ContractError(
            f"contraction condition violated: gamma + alpha_u * c = {lipschitz:.6g} >= 1 "
            f"(gamma={mdp.gamma}, alpha_u={alpha_u}, kind={kind}, nS={mdp.n_states})"
        )
    q = np.zeros_like(mdp.rewards) if q0 is None else np.array(q0, dtype=np.float64)
    residuals: List[float] = []
    for iteration in range(1, max_iterations + 1):
        q_next = robust_bellman(mdp, policy, q, kind, alpha_u, duals)
        step = float(np.max(np.abs(q_next - q)))
        residuals.append(step)
        q = q_next
        if step < tol and lipschitz / (1.0 - lipschitz) * step < tol:
            return ValueIterationResult(q=q, iterations=iteration, residuals=residuals, lipschitz=lipschitz)
    raise ContractError(f"robust value iteration did not reach tol={tol} in {max_iterations} iterations")


def robust_policy_iteration(
    mdp: FiniteMdp,
    kind: TabularSetKind,
    alpha_u: float,
    tol: float = 1e-10,
    max_rounds: int = 100,
) -> "tuple[TabularPolicy, np.ndarray]":
    """Greedy improvement on robust evaluation until the policy is stable."""
    policy = TabularPolicy.uniform(mdp.n_states, mdp.n_actions)
    q = np.zeros_like(mdp.rewards)
    for round_index in range(max_rounds):
        q = robust_value_iteration(mdp, policy, kind, alpha_u, tol, q0=q).q
        improved = TabularPolicy.greedy(q)
        if np.array_equal(improved.probs, policy.probs):
            logger.debug(f"robust policy iteration stable after {round_index + 1} rounds")
            return policy, q
        policy = improved
    logger.warning(f"robust policy iteration stopped after {max_rounds} rounds without a stable policy")
    return policy, q
