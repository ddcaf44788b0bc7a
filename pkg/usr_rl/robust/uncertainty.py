"""
Uncertainty sets, their dual penalties, and the regularized critic target.

Worst-case transitions inside a norm ball around the nominal parameters
``w_bar`` turn, through the convex conjugate of the ball's indicator, into a
penalty subtracted from each bootstrapped value:

    y = r + gamma * mean_i [ V(s'_i) - dual(grad_w P(s'_i) * V(s'_i)) / P(s'_i) ]

with ``s'_i`` drawn from the nominal model. The L2 ball gives
``alpha_u * ||l||_2``, the L1 ball ``alpha_u * ||l||_inf`` and the
value-aligned ellipsoid ``{w: ||w / d||_2 <= 1}`` gives ``alpha_u * ||d * l||_2``.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Literal, Optional, Union

import numpy as np
from scipy import integrate

from usr_rl.core.config import UncertaintySetSpec
from usr_rl.core.constants import (
    DENSITY_FLOOR,
    MAX_RESAMPLE_RETRIES,
    NORM_ZERO_THRESHOLD,
    QUADRATURE_HALF_WIDTH,
    QUADRATURE_NODES,
)
from usr_rl.core.errors import ContractError, EvaluationError, ShapeError
from usr_rl.core.logging_config import get_logger
from usr_rl.core.transitions import TransitionSample
from usr_rl.nets.values import ValueFunction, value_and_input_gradient
from usr_rl.robust.local_model import DiagonalGaussianModel

logger = get_logger(__name__)

Normalization = Literal["l2", "sqrt_abs"]
SetKind = Literal["l2", "l1", "ellipsoid"]
ArrayOrFloat = Union[float, np.ndarray]

SET_KIND_OF_USR: Dict[str, SetKind] = {"l2_usr": "l2", "l1_usr": "l1", "adv_usr": "ellipsoid"}


# ============================================================================
# Dual penalties (support functions of the uncertainty sets)
# ============================================================================


def _check_alpha(alpha_u: float) -> None:
    if alpha_u < 0.0:
        raise ContractError(f"alpha_u must be >= 0, got {alpha_u}")


def _reduce(value: np.ndarray) -> ArrayOrFloat:
    return float(value) if np.ndim(value) == 0 else value


def dual_l2(l: np.ndarray, alpha_u: float) -> ArrayOrFloat:
    """``alpha_u * ||l||_2`` along the last axis."""
    _check_alpha(alpha_u)
    return _reduce(alpha_u * np.linalg.norm(np.asarray(l, dtype=np.float64), axis=-1))


def dual_l1(l: np.ndarray, alpha_u: float) -> ArrayOrFloat:
    """``alpha_u * max_k |l_k|`` along the last axis."""
    _check_alpha(alpha_u)
    return _reduce(alpha_u * np.max(np.abs(np.asarray(l, dtype=np.float64)), axis=-1))


def dual_weighted_l2(l: np.ndarray, d: np.ndarray, alpha_u: float) -> ArrayOrFloat:
    """``alpha_u * ||d * l||_2`` along the last axis.

    The ellipsoid's semi-axes are ``|d_k|``; a zero entry collapses that axis.
    """
    _check_alpha(alpha_u)
    l = np.asarray(l, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if d.shape[-1] != l.shape[-1]:
        raise ShapeError("dual_weighted_l2", [l.shape, d.shape])
    return _reduce(alpha_u * np.linalg.norm(np.abs(d) * l, axis=-1))


def penalty(kind: str, l: np.ndarray, alpha_u: float, direction: Optional[np.ndarray] = None) -> ArrayOrFloat:
    """Dual penalty for an uncertainty-set kind (``l2_usr``, ``l1_usr``, ``adv_usr``).

    Any other kind regularizes nothing here and yields zeros.
    """
    if kind == "l2_usr":
        return dual_l2(l, alpha_u)
    if kind == "l1_usr":
        return dual_l1(l, alpha_u)
    if kind == "adv_usr":
        if direction is None:
            raise ContractError("adv_usr penalty needs a direction")
        return dual_weighted_l2(l, direction, alpha_u)
    return _reduce(np.zeros(np.shape(l)[:-1]))


# ============================================================================
# Set geometry
# ============================================================================


def support_oracle(
    kind: SetKind,
    l: np.ndarray,
    alpha_u: float,
    rng: np.random.Generator,
    d: Optional[np.ndarray] = None,
    n: int = 100_000,
) -> float:
    """Brute-force ``sup <l, w>`` over ``n`` boundary points of the set.

    L2 samples the sphere, L1 samples the cross-polytope surface plus its
    vertices, the ellipsoid maps sphere samples through ``|d|``.
    """
    _check_alpha(alpha_u)
    l = np.asarray(l, dtype=np.float64)
    dim = l.shape[0]
    if kind == "l2" or kind == "ellipsoid":
        u = rng.standard_normal((n, dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        if kind == "ellipsoid":
            if d is None:
                raise ContractError("ellipsoid oracle needs a direction")
            u = u * np.abs(np.asarray(d, dtype=np.float64))
    elif kind == "l1":
        magnitudes = rng.exponential(size=(n, dim))
        u = magnitudes / magnitudes.sum(axis=1, keepdims=True) * rng.choice([-1.0, 1.0], size=(n, dim))
        vertices = np.vstack([np.eye(dim), -np.eye(dim)])
        u = np.vstack([u, vertices])
    else:
        raise ContractError(f"unknown set kind {kind!r}")
    return float(np.max(u @ (alpha_u * l)))


def in_uncertainty_set(
    kind: SetKind,
    w: np.ndarray,
    w_bar: np.ndarray,
    alpha_u: float,
    d: Optional[np.ndarray] = None,
    tol: float = 1e-12,
) -> bool:
    """Whether ``w`` lies in ``{w_bar + alpha_u * u : ||u|| <= 1}``."""
    _check_alpha(alpha_u)
    delta = np.asarray(w, dtype=np.float64) - np.asarray(w_bar, dtype=np.float64)
    if alpha_u == 0.0:
        return bool(np.all(np.abs(delta) <= tol))
    u = delta / alpha_u
    if kind == "l2":
        return bool(np.linalg.norm(u) <= 1.0 + tol)
    if kind == "l1":
        return bool(np.sum(np.abs(u)) <= 1.0 + tol)
    if kind == "ellipsoid":
        if d is None:
            raise ContractError("ellipsoid membership needs a direction")
        axes = np.abs(np.asarray(d, dtype=np.float64))
        if np.any((axes == 0.0) & (np.abs(u) > tol)):
            return False
        scaled = np.divide(u, axes, out=np.zeros_like(u), where=axes > 0.0)
        return bool(np.linalg.norm(scaled) <= 1.0 + tol)
    raise ContractError(f"unknown set kind {kind!r}")


# ============================================================================
# Adversarial direction
# ============================================================================


@dataclass(frozen=True)
class AdvDirection:
    """Raw value gradient over ``w_bar`` and its normalized direction.

    Both fields are ``(W,)`` for one model and ``(B, W)`` for a batch.
    """

    raw: np.ndarray
    direction: np.ndarray


def normalize_direction(g: np.ndarray, normalization: Normalization = "l2") -> np.ndarray:
    """Normalize gradients along the last axis.

    ``l2`` returns ``g / ||g||_2``. ``sqrt_abs`` returns
    ``sqrt(|g_k| / sum_j |g_j|)``, which is also unit-norm. Gradients with
    norm below 1e-12 map to the uniform direction ``1 / sqrt(W)``.
    """
    g = np.asarray(g, dtype=np.float64)
    width = g.shape[-1]
    uniform = np.full(g.shape, 1.0 / np.sqrt(width))
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    degenerate = norm < NORM_ZERO_THRESHOLD
    if normalization == "l2":
        d = g / np.where(degenerate, 1.0, norm)
    elif normalization == "sqrt_abs":
        total = np.sum(np.abs(g), axis=-1, keepdims=True)
        d = np.sqrt(np.abs(g) / np.where(degenerate, 1.0, total))
    else:
        raise ContractError(f"unknown normalization {normalization!r}")
    return np.where(degenerate, uniform, d)


def _flatten_points(points: np.ndarray) -> np.ndarray:
    return points.reshape(-1, points.shape[-1])


def adv_direction(
    value_fn: ValueFunction,
    model: DiagonalGaussianModel,
    rng: np.random.Generator,
    normalization: Normalization = "l2",
) -> AdvDirection:
    """Value-aligned direction over the model parameters.

    Samples one next state per model, differentiates the value with respect
    to it, maps that gradient onto ``w_bar`` through the sample's Jacobian
    and normalizes.

    Raises:
        EvaluationError: The gradient has non-finite entries.
    """
    drawn = model.sample(1, rng)
    flat = _flatten_points(drawn.points)
    _, point_grads = value_and_input_gradient(value_fn, flat)
    eps = _flatten_points(drawn.eps)
    raw = model.pullback(eps, point_grads)
    if not model.batched:
        raw = raw[0]
    if not np.all(np.isfinite(raw)):
        raise EvaluationError("adversarial direction gradient is not finite")
    return AdvDirection(raw=raw, direction=normalize_direction(raw, normalization))


# ============================================================================
# Robust target
# ============================================================================


@dataclass(frozen=True)
class RobustTargets:
    """Regularized targets for a batch of transitions.

    Attributes:
        targets: ``y`` per transition.
        penalties: Mean importance-weighted penalty per transition.
        values: ``V`` at the sampled next states, ``(B, M)``.
    """

    targets: np.ndarray
    penalties: np.ndarray
    values: np.ndarray


def _draw_with_floor(model: DiagonalGaussianModel, count: int, rng: np.random.Generator):
    drawn = model.sample(count, rng)
    eps, points = drawn.eps, drawn.points
    density = np.asarray(model.density(points))
    for _ in range(MAX_RESAMPLE_RETRIES):
        low = density < DENSITY_FLOOR
        if not np.any(low):
            return points, eps, density
        eps = eps.copy()
        eps[low] = rng.standard_normal((int(np.sum(low)), model.state_dim))
        points = model.points_from_eps(eps)
        density = np.asarray(model.density(points))
    if np.any(density < DENSITY_FLOOR):
        raise EvaluationError(
            f"next-state density stayed below {DENSITY_FLOOR} after {MAX_RESAMPLE_RETRIES} redraws"
        )
    return points, eps, density


def robust_targets(
    rewards: np.ndarray,
    dones: np.ndarray,
    model: DiagonalGaussianModel,
    value_fn: ValueFunction,
    spec: UncertaintySetSpec,
    sample_size: int,
    gamma: float,
    rng: np.random.Generator,
    normalization: Normalization = "l2",
    average_directions: bool = False,
    duals: Optional[Dict[str, Callable[..., ArrayOrFloat]]] = None,
) -> RobustTargets:
    """Monte Carlo robust targets for ``B`` transitions.

    Args:
        rewards: ``(B,)`` rewards.
        dones: ``(B,)`` terminal flags; a terminal transition does not bootstrap.
        model: Nominal next-state model, batched over the ``B`` transitions
            (a single model means ``B = 1``).
        value_fn: Bootstrap value ``V``.
        spec: Uncertainty set and radius.
        sample_size: Next-state samples ``M`` per transition.
        gamma: Discount in ``[0, 1)``.
        rng: Noise source for next-state samples and directions.
        normalization: Direction normalization for ``adv_usr``.
        average_directions: For ``adv_usr``, average the direction over the
            ``M`` samples instead of drawing one fresh sample per transition.
        duals: Optional replacement penalty functions keyed by kind.

    Returns:
        ``RobustTargets`` with ``(B,)`` targets.

    Raises:
        ContractError: ``sample_size < 1`` or ``gamma`` outside ``[0, 1)``.
        EvaluationError: Density floor not met after the allowed redraws.
    """
    if sample_size < 1:
        raise ContractError(f"sample size M must be >= 1, got {sample_size}")
    if not 0.0 <= gamma < 1.0:
        raise ContractError(f"gamma must be in [0, 1), got {gamma}")
    rewards = np.atleast_1d(np.asarray(rewards, dtype=np.float64))
    dones = np.atleast_1d(np.asarray(dones, dtype=np.float64))
    batch = rewards.shape[0]

    points, eps, density = _draw_with_floor(model, sample_size, rng)
    flat = _flatten_points(points)
    alpha_u = spec.radius
    active = spec.regularizes_target and alpha_u > 0.0

    direction = None
    if active and spec.kind == "adv_usr" and average_directions:
        values, point_grads = value_and_input_gradient(value_fn, flat)
        raw = model.pullback(_flatten_points(eps), point_grads).reshape(batch, sample_size, -1).mean(axis=1)
        direction = normalize_direction(raw, normalization)
    else:
        values = value_fn.evaluate(flat)
        if active and spec.kind == "adv_usr":
            direction = adv_direction(value_fn, model, rng, normalization).direction
    values = values.reshape(batch, sample_size)
    if not np.all(np.isfinite(values)):
        raise EvaluationError("bootstrap values are not finite")

    if active:
        grads = model.grad_density(points).reshape(batch, sample_size, -1)
        l = grads * values[..., None]
        if direction is not None:
            direction = np.reshape(direction, (batch, 1, -1))
        dual = (duals or {}).get(spec.kind)
        if dual is not None:
            raw_penalty = dual(l, alpha_u) if direction is None else dual(l, direction, alpha_u)
        else:
            raw_penalty = penalty(spec.kind, l, alpha_u, direction)
        weighted = np.asarray(raw_penalty).reshape(batch, sample_size) / density.reshape(batch, sample_size)
    else:
        weighted = np.zeros((batch, sample_size))

    bootstrap = np.mean(values - weighted, axis=1)
    targets = rewards + gamma * (1.0 - dones) * bootstrap
    return RobustTargets(targets=targets, penalties=weighted.mean(axis=1), values=values)


def robust_target(
    sample: TransitionSample,
    model: DiagonalGaussianModel,
    value_fn: ValueFunction,
    spec: UncertaintySetSpec,
    sample_size: int,
    gamma: float,
    rng: np.random.Generator,
    **kwargs,
) -> float:
    """Robust target ``y`` of a single replay tuple (see ``robust_targets``)."""
    result = robust_targets(
        np.array([sample.reward]), np.array([float(sample.done)]),
        model, value_fn, spec, sample_size, gamma, rng, **kwargs,
    )
    return float(result.targets[0])


def robust_target_quadrature_1d(
    reward: float,
    model: DiagonalGaussianModel,
    value_fn: ValueFunction,
    spec: UncertaintySetSpec,
    gamma: float,
    nodes: int = QUADRATURE_NODES,
) -> float:
    """Deterministic counterpart of ``robust_target`` for a 1-D model.

    Integrates ``P V`` and ``dual(grad_w P V)`` by the trapezoid rule over
    ``mean +/- 8 sigma``. Not defined for ``adv_usr``, whose direction is
    random.
    """
    if model.state_dim != 1 or model.batched:
        raise ContractError("quadrature target needs a single 1-D model")
    if spec.kind == "adv_usr":
        raise ContractError("quadrature target is not defined for adv_usr")
    center, width = float(model.mean[0]), float(model.scale[0])
    grid = np.linspace(center - QUADRATURE_HALF_WIDTH * width, center + QUADRATURE_HALF_WIDTH * width, nodes)
    points = grid[:, None]
    values = value_fn.evaluate(points)
    expected = integrate.trapezoid(np.asarray(model.density(points)) * values, grid)
    if spec.regularizes_target and spec.radius > 0.0:
        l = model.grad_density(points) * values[:, None]
        regularizer = integrate.trapezoid(np.asarray(penalty(spec.kind, l, spec.radius)), grid)
    else:
        regularizer = 0.0
    return float(reward + gamma * (expected - regularizer))
