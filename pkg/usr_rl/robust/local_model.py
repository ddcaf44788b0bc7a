"""
Parametric Gaussian transition models around an observed transition.

The nominal transition of a replay tuple is a diagonal Gaussian over the next
state whose mean and scale are functions of a parameter vector ``w_bar``. The
robust target needs three things from such a model: its density at sampled
next states, the density's gradient with respect to ``w_bar``, and the
Jacobian ``d s' / d w_bar`` of a reparameterized sample
``s' = mean(w_bar) + scale(w_bar) * eps``.

``LocalGaussianModel`` takes ``w_bar = x`` (mean mode) or ``w_bar = (x, sigma)``
(mean_scale mode). Other parameterizations subclass ``DiagonalGaussianModel``
and only describe how mean and scale depend on their parameters.

A ``LocalGaussianModel`` may also hold a batch of ``B`` means sharing one
scale. Points are then shaped ``(B, N, d)`` and every result gains the
leading batch axis, which is how the trainer evaluates a whole minibatch.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from scipy import integrate, stats

from usr_rl.core.constants import DEFAULT_MODEL_SIGMA, QUADRATURE_HALF_WIDTH, QUADRATURE_NODES
from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.core.transitions import TransitionSample

ParamMode = Literal["mean", "mean_scale"]


@dataclass(frozen=True)
class ModelSample:
    """Reparameterized draws: ``points = mean + scale * eps``."""

    points: np.ndarray
    eps: np.ndarray


class DiagonalGaussianModel(ABC):
    """Gaussian over next states with diagonal covariance.

    Subclasses define ``mean``, ``scale``, ``param_vector`` and the two
    pullbacks ``v -> v @ d(mean)/d(w_bar)`` and ``v -> v @ d(scale)/d(w_bar)``.
    """

    @property
    @abstractmethod
    def mean(self) -> np.ndarray:
        """Mean of the next-state distribution, ``(d,)`` or ``(B, d)``."""

    @property
    @abstractmethod
    def scale(self) -> np.ndarray:
        """Per-dimension standard deviation, shape ``(d,)``."""

    @abstractmethod
    def param_vector(self) -> np.ndarray:
        """Nominal parameters ``w_bar``."""

    @abstractmethod
    def mean_pullback(self, v: np.ndarray) -> np.ndarray:
        """``v @ d(mean)/d(w_bar)`` for rows ``v`` of shape ``(..., d)``."""

    @abstractmethod
    def scale_pullback(self, v: np.ndarray) -> np.ndarray:
        """``v @ d(scale)/d(w_bar)`` for rows ``v`` of shape ``(..., d)``."""

    @abstractmethod
    def with_params(self, params: np.ndarray) -> "DiagonalGaussianModel":
        """Same model family at parameters ``params``."""

    @property
    def state_dim(self) -> int:
        return self.mean.shape[-1]

    @property
    def param_dim(self) -> int:
        return self.param_vector().shape[-1]

    @property
    def batched(self) -> bool:
        return self.mean.ndim == 2

    def _aligned_mean(self, points: np.ndarray, op: str) -> np.ndarray:
        mean = self.mean
        if points.shape[-1] != self.state_dim:
            raise ShapeError(op, [points.shape, mean.shape], "point dimension mismatch")
        if not self.batched:
            if points.ndim > 2:
                raise ShapeError(op, [points.shape, mean.shape], "expected (d,) or (N, d) points")
            return mean
        if points.ndim != 3 or points.shape[0] != mean.shape[0]:
            raise ShapeError(op, [points.shape, mean.shape], "expected (B, N, d) points")
        return mean[:, None, :]

    def density(self, points: np.ndarray) -> Union[float, np.ndarray]:
        """Product of per-dimension normal densities.

        Returns a float for one point ``(d,)`` and one value per point
        otherwise.
        """
        x = np.asarray(points, dtype=np.float64)
        p = np.prod(stats.norm.pdf(x, loc=self._aligned_mean(x, "density"), scale=self.scale), axis=-1)
        return float(p) if x.ndim == 1 else p

    def grad_density(self, points: np.ndarray) -> np.ndarray:
        """Gradient of the density with respect to ``w_bar``.

        Uses ``dp/dmean_k = p (y_k - mean_k) / scale_k^2`` and
        ``dp/dscale_k = p ((y_k - mean_k)^2 / scale_k^3 - 1 / scale_k)``.
        """
        x = np.asarray(points, dtype=np.float64)
        mean = self._aligned_mean(x, "grad_density")
        p = np.prod(stats.norm.pdf(x, loc=mean, scale=self.scale), axis=-1)
        p_col = p[..., None] if x.ndim >= 2 else p
        diff = x - mean
        d_mean = p_col * diff / self.scale**2
        d_scale = p_col * (diff**2 / self.scale**3 - 1.0 / self.scale)
        return self.mean_pullback(d_mean) + self.scale_pullback(d_scale)

    def points_from_eps(self, eps: np.ndarray) -> np.ndarray:
        """``mean + scale * eps`` with ``eps`` shaped like the sampled points."""
        eps = np.asarray(eps, dtype=np.float64)
        return self._aligned_mean(eps, "points_from_eps") + self.scale * eps

    def sample(self, count: int, rng: np.random.Generator) -> ModelSample:
        """Draw ``count`` points per model and keep the standard-normal ``eps``."""
        if count < 1:
            raise ContractError(f"sample count must be >= 1, got {count}")
        eps = rng.standard_normal(self.mean.shape[:-1] + (count, self.state_dim))
        return ModelSample(self.points_from_eps(eps), eps)

    def point_jacobian(self, eps: np.ndarray) -> np.ndarray:
        """``d s' / d w_bar`` of one reparameterized sample, shape ``(d, W)``."""
        eye = np.eye(self.state_dim)
        return self.mean_pullback(eye) + self.scale_pullback(eye * np.asarray(eps)[:, None])

    def pullback(self, eps: np.ndarray, point_grads: np.ndarray) -> np.ndarray:
        """``J(eps)^T g`` per sample: rows of ``point_grads`` mapped onto ``w_bar``."""
        return self.mean_pullback(point_grads) + self.scale_pullback(point_grads * eps)


class LocalGaussianModel(DiagonalGaussianModel):
    """Gaussian centred on the observed next state ``x`` with scale ``sigma``.

    Attributes:
        mode: ``mean`` makes ``w_bar = x``; ``mean_scale`` makes
            ``w_bar = (x, sigma)``.
    """

    def __init__(self, mean: np.ndarray, scale: np.ndarray, mode: ParamMode = "mean"):
        mean = np.array(mean, dtype=np.float64)
        if mean.ndim == 0 or mean.ndim > 2:
            raise ShapeError("LocalGaussianModel", [mean.shape], "mean must be (d,) or (B, d)")
        scale = np.array(scale, dtype=np.float64).reshape(-1)
        if scale.shape != mean.shape[-1:]:
            raise ShapeError("LocalGaussianModel", [mean.shape, scale.shape])
        if np.any(scale <= 0.0):
            raise ContractError(f"sigma must be strictly positive, got {scale}")
        if not np.all(np.isfinite(mean)):
            raise ContractError("model mean has non-finite entries")
        if mode not in ("mean", "mean_scale"):
            raise ContractError(f"unknown param mode {mode!r}")
        self._mean = mean
        self._scale = scale
        self.mode = mode

    @property
    def mean(self) -> np.ndarray:
        return self._mean

    @property
    def scale(self) -> np.ndarray:
        return self._scale

    def param_vector(self) -> np.ndarray:
        if self.mode == "mean":
            return self._mean.copy()
        return np.concatenate([self._mean, np.broadcast_to(self._scale, self._mean.shape)], axis=-1)

    def mean_pullback(self, v: np.ndarray) -> np.ndarray:
        if self.mode == "mean":
            return np.array(v, dtype=np.float64)
        return np.concatenate([v, np.zeros_like(v)], axis=-1)

    def scale_pullback(self, v: np.ndarray) -> np.ndarray:
        if self.mode == "mean":
            return np.zeros_like(v, dtype=np.float64)
        return np.concatenate([np.zeros_like(v), v], axis=-1)

    def with_params(self, params: np.ndarray) -> "LocalGaussianModel":
        params = np.asarray(params, dtype=np.float64)
        if self.mode == "mean":
            return LocalGaussianModel(params, self._scale, self.mode)
        d = self.state_dim
        return LocalGaussianModel(params[:d], params[d:], self.mode)

    def __repr__(self) -> str:
        return f"LocalGaussianModel(mean={self._mean}, scale={self._scale}, mode={self.mode!r})"


def build(sample: TransitionSample, sigma: np.ndarray, mode: ParamMode = "mean") -> LocalGaussianModel:
    """Local model of one replay tuple: mean ``sample.next_state``, scale ``sigma``.

    Raises:
        ContractError: A ``sigma`` entry is not strictly positive.
        ShapeError: ``sigma`` does not match the state dimension.
    """
    return build_batch(np.asarray(sample.next_state, dtype=np.float64), sigma, mode)


def build_batch(next_states: np.ndarray, sigma: np.ndarray, mode: ParamMode = "mean") -> LocalGaussianModel:
    """Local models of ``B`` replay tuples at once (``next_states`` is ``(B, d)``)."""
    x = np.asarray(next_states, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim == 0:
        sigma = np.full(x.shape[-1:], float(sigma))
    if sigma.shape != x.shape[-1:]:
        raise ShapeError("build", [x.shape, sigma.shape], "sigma must match the state dimension")
    return LocalGaussianModel(x, sigma, mode)


class StateOffsetModel(DiagonalGaussianModel):
    """Adds a next-state offset ``beta`` (nominal 0) to another model's parameters.

    Perturbing observations is then a perturbation of the transition: the
    parameter vector becomes ``(w_bar_base, beta)`` and ``d s'/d beta = I``.
    """

    def __init__(self, base: DiagonalGaussianModel, offset: Optional[np.ndarray] = None):
        self.base = base
        self.offset = np.zeros(base.state_dim) if offset is None else np.asarray(offset, dtype=np.float64)
        if self.offset.shape != (base.state_dim,):
            raise ShapeError("StateOffsetModel", [self.offset.shape, (base.state_dim,)])

    @property
    def mean(self) -> np.ndarray:
        return self.base.mean + self.offset

    @property
    def scale(self) -> np.ndarray:
        return self.base.scale

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.base.param_vector(), self.offset])

    def mean_pullback(self, v: np.ndarray) -> np.ndarray:
        return np.concatenate([self.base.mean_pullback(v), v], axis=-1)

    def scale_pullback(self, v: np.ndarray) -> np.ndarray:
        return np.concatenate([self.base.scale_pullback(v), np.zeros_like(v)], axis=-1)

    def with_params(self, params: np.ndarray) -> "StateOffsetModel":
        params = np.asarray(params, dtype=np.float64)
        split = self.base.param_dim
        return StateOffsetModel(self.base.with_params(params[:split]), params[split:])


def contraction_delta_1d(
    sigma: float = DEFAULT_MODEL_SIGMA,
    alpha_u: float = 1.0,
    mode: ParamMode = "mean",
    nodes: int = QUADRATURE_NODES,
) -> float:
    """``alpha_u * integral ||grad_w P(s')||_2 ds'`` for a 1-D local model.

    The integral does not depend on the mean, so the maximum over
    state-action pairs is this single value. Trapezoid quadrature over
    ``mean +/- 8 sigma``.
    """
    if sigma <= 0.0 or alpha_u < 0.0:
        raise ContractError(f"need sigma > 0 and alpha_u >= 0, got {sigma}, {alpha_u}")
    model = LocalGaussianModel([0.0], [sigma], mode)
    grid = np.linspace(-QUADRATURE_HALF_WIDTH * sigma, QUADRATURE_HALF_WIDTH * sigma, nodes)
    grads = model.grad_density(grid[:, None])
    return float(alpha_u * integrate.trapezoid(np.linalg.norm(grads, axis=1), grid))
