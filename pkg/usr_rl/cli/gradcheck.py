"""
Finite-difference gradient checks.

Every group compares an analytic gradient with central differences and
reports the worst relative error ``||analytic - numeric|| / ||numeric||``
over its cases. All inputs come from fixed internal seeds.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from usr_rl.core.config import UsrConfig
from usr_rl.core.constants import FD_DENOMINATOR_FLOOR, FD_EPSILON
from usr_rl.core.logging_config import get_logger
from usr_rl.core.models import SuiteResult, VerificationReport
from usr_rl.core.rng import derive_rng
from usr_rl.core.transitions import TransitionBatch
from usr_rl.nets import diffcore
from usr_rl.nets.diffcore import Tape, Var
from usr_rl.nets.mlp import BoundMlp, MlpParams, bind, init_mlp, layer_sizes
from usr_rl.nets.policy import sample_on_tape
from usr_rl.nets.values import MlpValue, value_and_input_gradient
from usr_rl.robust.local_model import LocalGaussianModel
from usr_rl.sac.updates import critic_loss_on_tape

logger = get_logger(__name__)

GRADCHECK_THRESHOLD = 1e-4
DENSITY_THRESHOLD = 1e-6
GRADCHECK_SEED = 0


def norm_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.linalg.norm(np.ravel(analytic) - np.ravel(numeric))
    return float(diff / (np.linalg.norm(np.ravel(numeric)) + FD_DENOMINATOR_FLOOR))


def central_differences(function: Callable[[np.ndarray], float], point: np.ndarray, epsilon: float = FD_EPSILON) -> np.ndarray:
    """Numerical gradient of a plain ``ndarray -> float`` function."""
    base = np.array(point, dtype=np.float64)
    grad = np.zeros(base.size)
    for k in range(base.size):
        shifted = base.reshape(-1).copy()
        shifted[k] += epsilon
        upper = function(shifted.reshape(base.shape))
        shifted[k] -= 2.0 * epsilon
        lower = function(shifted.reshape(base.shape))
        grad[k] = (upper - lower) / (2.0 * epsilon)
    return grad.reshape(base.shape)


@dataclass(frozen=True)
class GradCheck:
    name: str
    threshold: float
    run: Callable[[np.random.Generator], List[float]]


# ============================================================================
# Autodiff primitives
# ============================================================================


def _magnitudes(rng: np.random.Generator, shape, low: float = 0.2, high: float = 1.5) -> np.ndarray:
    """Entries bounded away from zero, so kinks at 0 are never straddled."""
    return rng.uniform(low, high, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _primitive_cases(rng: np.random.Generator) -> Dict[str, Tuple[Callable[[Tape, Var], Var], np.ndarray]]:
    shape = (3, 4)
    w = rng.uniform(0.5, 1.5, size=shape)
    other = _magnitudes(rng, shape)
    right = rng.standard_normal((4, 2))
    positive = rng.uniform(0.5, 2.0, size=shape)

    def weighted(out: Var, weights: np.ndarray) -> Var:
        return diffcore.sum_(out * weights)

    at_minimum = _magnitudes(rng, shape)
    threshold = at_minimum + _magnitudes(rng, shape)
    return {
        "add": (lambda t, x: weighted(x + other, w), _magnitudes(rng, shape)),
        "subtract": (lambda t, x: weighted(diffcore.subtract(other, x), w), _magnitudes(rng, shape)),
        "multiply": (lambda t, x: weighted(x * x, w), _magnitudes(rng, shape)),
        "divide": (lambda t, x: weighted(diffcore.divide(other, x), w), _magnitudes(rng, shape)),
        "minimum": (lambda t, x: weighted(diffcore.minimum(x, threshold), w), at_minimum),
        "matmul": (lambda t, x: diffcore.sum_(diffcore.square(x @ right)), _magnitudes(rng, shape)),
        "tanh": (lambda t, x: weighted(diffcore.tanh(x), w), _magnitudes(rng, shape)),
        "exp": (lambda t, x: weighted(diffcore.exp(x), w), _magnitudes(rng, shape)),
        "log": (lambda t, x: weighted(diffcore.log(x), w), positive),
        "square": (lambda t, x: weighted(diffcore.square(x), w), _magnitudes(rng, shape)),
        "sqrt": (lambda t, x: weighted(diffcore.sqrt(x), w), positive),
        "absolute": (lambda t, x: weighted(diffcore.absolute(x), w), _magnitudes(rng, shape)),
        "relu": (lambda t, x: weighted(diffcore.relu(x), w), _magnitudes(rng, shape)),
        "scale": (lambda t, x: weighted(diffcore.scale(x, -2.5), w), _magnitudes(rng, shape)),
        "sum": (lambda t, x: diffcore.sum_(diffcore.square(diffcore.sum_(x, axis=1))), _magnitudes(rng, shape)),
        "mean": (lambda t, x: diffcore.sum_(diffcore.square(diffcore.mean(x, axis=0))), _magnitudes(rng, shape)),
        "columns": (lambda t, x: weighted(diffcore.square(diffcore.columns(x, 1, 3)), w[:, 1:3]), _magnitudes(rng, shape)),
        "concat": (lambda t, x: weighted(diffcore.square(diffcore.concat(x, other)), np.hstack([w, w])), _magnitudes(rng, shape)),
    }


def check_primitives(rng: np.random.Generator) -> List[float]:
    errors = []
    for name, (function, point) in _primitive_cases(rng).items():
        _, analytic = diffcore.value_and_grad(function, point)
        numeric = diffcore.numerical_gradient(function, point)
        errors.append(norm_relative_error(analytic, numeric))
        logger.debug(f"primitive {name}: {errors[-1]:.3e}")
    return errors


# ============================================================================
# Gaussian density gradients
# ============================================================================


def check_density_grad(rng: np.random.Generator, cases: int = 20) -> List[float]:
    """``grad_w p(y)`` of the local model in both parameter modes."""
    errors = []
    for i in range(cases):
        mode = "mean" if i % 2 == 0 else "mean_scale"
        d = int(rng.integers(1, 4))
        mean = rng.uniform(-1.0, 1.0, size=d)
        scale = rng.uniform(0.5, 1.5, size=d)
        model = LocalGaussianModel(mean, scale, mode)
        point = mean + scale * _magnitudes(rng, d, 0.3, 1.5)

        def density_at(params: np.ndarray) -> float:
            return float(model.with_params(params).density(point))

        numeric = central_differences(density_at, model.param_vector())
        errors.append(norm_relative_error(model.grad_density(point), numeric))
    return errors


# ============================================================================
# Network gradients
# ============================================================================


def _flatten(params: MlpParams) -> np.ndarray:
    return np.concatenate([a.reshape(-1) for a in params.arrays()])


def _unflatten(params: MlpParams, flat: np.ndarray) -> MlpParams:
    arrays, offset = [], 0
    for a in params.arrays():
        arrays.append(flat[offset:offset + a.size].reshape(a.shape))
        offset += a.size
    return params.with_arrays(arrays)


def _parameter_check(params: MlpParams, loss: Callable[[Tape, MlpParams], Tuple[Var, BoundMlp]]) -> float:
    tape = Tape()
    out, network = loss(tape, params)
    analytic = _flatten(network.gradients(tape.backward(out)))

    def value_at(flat: np.ndarray) -> float:
        return float(loss(Tape(), _unflatten(params, flat))[0].value)

    return norm_relative_error(analytic, central_differences(value_at, _flatten(params)))


def _small_net(rng: np.random.Generator, n_in: int, n_out: int) -> MlpParams:
    return init_mlp(layer_sizes(n_in, 8, 2, n_out), rng, "tanh")


def check_policy_logprob(rng: np.random.Generator, cases: int = 5) -> List[float]:
    """Squashed-Gaussian log-probability with respect to the actor parameters."""
    errors = []
    for _ in range(cases):
        state_dim, action_dim, batch = 3, 2, 4
        actor = _small_net(rng, state_dim, 2 * action_dim)
        states = rng.standard_normal((batch, state_dim))
        eps = rng.standard_normal((batch, action_dim))

        def loss(tape: Tape, params: MlpParams):
            network = bind(tape, params, "actor")
            _, log_prob, _, _ = sample_on_tape(network, tape.constant(states), eps)
            return diffcore.sum_(log_prob), network

        errors.append(_parameter_check(actor, loss))
    return errors


def check_critic_loss(rng: np.random.Generator, cases: int = 5) -> List[float]:
    """TD loss plus L2 weight penalty with respect to the critic parameters."""
    usr = UsrConfig(kind="l2_weight_reg", alpha_u=1e-2)
    errors = []
    for _ in range(cases):
        state_dim, action_dim, batch = 3, 2, 6
        critic = _small_net(rng, state_dim + action_dim, 1)
        transitions = TransitionBatch(
            states=rng.standard_normal((batch, state_dim)),
            actions=rng.uniform(-1.0, 1.0, size=(batch, action_dim)),
            rewards=rng.standard_normal(batch),
            next_states=rng.standard_normal((batch, state_dim)),
            dones=np.zeros(batch),
        )
        targets = rng.standard_normal(batch)

        def loss(tape: Tape, params: MlpParams):
            return critic_loss_on_tape(tape, params, transitions, targets, usr)

        errors.append(_parameter_check(critic, loss))
    return errors


def check_input_gradient(rng: np.random.Generator, cases: int = 5) -> List[float]:
    """``dV/ds`` of a value network used by the adversarial direction."""
    errors = []
    for _ in range(cases):
        value_fn = MlpValue(_small_net(rng, 3, 1))
        points = rng.standard_normal((4, 3))
        _, analytic = value_and_input_gradient(value_fn, points)

        def total(x: np.ndarray) -> float:
            return float(np.sum(value_fn.evaluate(x)))

        errors.append(norm_relative_error(analytic, central_differences(total, points)))
    return errors


GRADCHECKS: Tuple[GradCheck, ...] = (
    GradCheck("autodiff_primitives", GRADCHECK_THRESHOLD, check_primitives),
    GradCheck("density_grad", DENSITY_THRESHOLD, check_density_grad),
    GradCheck("policy_logprob", GRADCHECK_THRESHOLD, check_policy_logprob),
    GradCheck("critic_loss", GRADCHECK_THRESHOLD, check_critic_loss),
    GradCheck("input_gradient", GRADCHECK_THRESHOLD, check_input_gradient),
)


def run_gradchecks(seed: int = GRADCHECK_SEED) -> VerificationReport:
    """Run every registered group; the report passes iff each is below threshold."""
    suites = []
    for check in GRADCHECKS:
        errors = check.run(derive_rng(seed, f"gradcheck.{check.name}"))
        worst = max(errors)
        passed = worst < check.threshold
        failing = None if passed else {"case": int(np.argmax(errors)), "error": worst}
        suites.append(SuiteResult(name=check.name, trials=len(errors), worst=worst,
                                  threshold=check.threshold, passed=passed, failing_instance=failing))
        (logger.info if passed else logger.error)(f"{check.name}: worst relative error {worst:.3e}")
    return VerificationReport(suites=suites)
