"""
Oracle suites for the tabular lab.

Each suite draws random instances, compares the closed-form machinery against
an independent oracle and reports the worst deviation as a ``SuiteResult``.
``run_verification`` bundles them for the ``tabular-verify`` command.
"""

from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Protocol, Tuple

import numpy as np
from scipy import integrate

from usr_rl.core.constants import QUADRATURE_HALF_WIDTH
from usr_rl.core.errors import ContractError, ShapeError
from usr_rl.core.logging_config import get_logger
from usr_rl.core.models import SuiteResult, VerificationReport
from usr_rl.core.rng import derive_rng
from usr_rl.robust.local_model import LocalGaussianModel, ParamMode
from usr_rl.tabular.backups import (
    DualFn,
    TabularSetKind,
    penalty_lipschitz,
    robust_backup_bruteforce,
    robust_backup_closed,
    robust_bellman,
    robust_value_iteration,
)
from usr_rl.tabular.mdp import FiniteMdp, TabularPolicy, garnet_mdp, random_policy, random_simplex

logger = get_logger(__name__)

CONTRACTION_SLACK = 1e-9
GRID_QUADRATURE_NODES = 2001


# ============================================================================
# Operator settings for the contraction check
# ============================================================================


class OperatorSetting(Protocol):
    """A robust policy-evaluation operator on ``Q`` tables."""

    gamma: float

    @property
    def q_shape(self) -> Tuple[int, int]: ...

    def apply(self, q: np.ndarray, alpha_u: float) -> np.ndarray: ...

    def delta(self, alpha_u: float) -> float: ...


@dataclass(frozen=True)
class TabularSetting:
    """Finite MDP under a fixed policy with an L2 or L1 rectangular set."""

    mdp: FiniteMdp
    policy: TabularPolicy
    kind: TabularSetKind = "l2"

    @property
    def gamma(self) -> float:
        return self.mdp.gamma

    @property
    def q_shape(self) -> Tuple[int, int]:
        return self.mdp.rewards.shape

    def apply(self, q: np.ndarray, alpha_u: float) -> np.ndarray:
        return robust_bellman(self.mdp, self.policy, q, self.kind, alpha_u)

    def delta(self, alpha_u: float) -> float:
        return alpha_u * penalty_lipschitz(self.kind, self.mdp.n_states)


class GaussianGridSetting:
    """1-D continuous-state operator with local Gaussian transitions.

    States live on ``grid``; action ``a`` moves the mean to ``s + shifts[a]``
    and the next state is ``N(mean, sigma^2)``. ``V`` between grid points is
    linearly interpolated (constant beyond the ends) and the operator is

        T Q(s, a) = r(s, a) + gamma * integral [ P V - alpha_u ||grad_w P|| |V| ] ds'

    evaluated by trapezoid quadrature on one shared node grid, so ``delta``
    uses exactly the same quadrature as the operator.
    """

    def __init__(
        self,
        grid: np.ndarray,
        shifts: np.ndarray,
        rewards: np.ndarray,
        sigma: float,
        gamma: float,
        policy: np.ndarray,
        mode: ParamMode = "mean",
        nodes: int = GRID_QUADRATURE_NODES,
    ):
        self.grid = np.asarray(grid, dtype=np.float64)
        self.shifts = np.asarray(shifts, dtype=np.float64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.policy = np.asarray(policy, dtype=np.float64)
        self.gamma = float(gamma)
        if np.any(np.diff(self.grid) <= 0.0):
            raise ContractError("grid must be strictly increasing")
        if self.rewards.shape != (self.grid.size, self.shifts.size):
            raise ShapeError("GaussianGridSetting", [self.rewards.shape, (self.grid.size, self.shifts.size)])
        if self.policy.shape != self.rewards.shape:
            raise ShapeError("GaussianGridSetting", [self.policy.shape, self.rewards.shape], "policy")
        means = (self.grid[:, None] + self.shifts[None, :]).reshape(-1, 1)
        half_width = QUADRATURE_HALF_WIDTH * sigma
        self.nodes = np.linspace(means.min() - half_width, means.max() + half_width, nodes)
        model = LocalGaussianModel(means, [sigma], mode)
        points = np.broadcast_to(self.nodes[None, :, None], (means.shape[0], nodes, 1))
        self.densities = model.density(points)
        self.grad_norms = np.linalg.norm(model.grad_density(points), axis=-1)

    @classmethod
    def random(cls, rng: np.random.Generator, n_grid: int = 5, n_actions: int = 2, sigma: float = 0.5,
               gamma: float = 0.9, mode: ParamMode = "mean") -> "GaussianGridSetting":
        grid = np.linspace(-1.0, 1.0, n_grid)
        shifts = rng.uniform(-0.5, 0.5, size=n_actions)
        rewards = rng.uniform(0.0, 1.0, size=(n_grid, n_actions))
        policy = np.stack([random_simplex(n_actions, rng) for _ in range(n_grid)])
        return cls(grid, shifts, rewards, sigma, gamma, policy, mode)

    @property
    def q_shape(self) -> Tuple[int, int]:
        return self.rewards.shape

    def apply(self, q: np.ndarray, alpha_u: float) -> np.ndarray:
        v = np.sum(self.policy * q, axis=1)
        v_nodes = np.interp(self.nodes, self.grid, v)
        expected = integrate.trapezoid(self.densities * v_nodes, self.nodes, axis=-1)
        penalty = alpha_u * integrate.trapezoid(self.grad_norms * np.abs(v_nodes), self.nodes, axis=-1)
        return self.rewards + self.gamma * (expected - penalty).reshape(self.q_shape)

    def delta(self, alpha_u: float) -> float:
        return float(alpha_u * np.max(integrate.trapezoid(self.grad_norms, self.nodes, axis=-1)))


@dataclass(frozen=True)
class ContractionResult:
    ratio: float
    delta: float
    gamma: float

    @property
    def bound(self) -> float:
        return self.gamma + self.delta


def contraction_check(setting: OperatorSetting, q1: np.ndarray, q2: np.ndarray, alpha_u: float) -> ContractionResult:
    """Measured ``||T Q1 - T Q2||_inf / ||Q1 - Q2||_inf`` with the setting's ``delta``.

    Raises:
        ContractError: ``Q1 == Q2``.
    """
    gap = float(np.max(np.abs(q1 - q2)))
    if gap == 0.0:
        raise ContractError("contraction_check needs Q1 != Q2")
    ratio = float(np.max(np.abs(setting.apply(q1, alpha_u) - setting.apply(q2, alpha_u)))) / gap
    return ContractionResult(ratio=ratio, delta=setting.delta(alpha_u), gamma=setting.gamma)


# ============================================================================
# Suites
# ============================================================================


def _instance(**arrays: Any) -> Dict[str, Any]:
    return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in arrays.items()}


def run_duality_suite(
    trials: int,
    tol: float,
    rng: np.random.Generator,
    duals: Optional[Mapping[str, DualFn]] = None,
    n_dirs: int = 1000,
) -> SuiteResult:
    """Closed-form vs brute-force backups on random ``(P_bar, V, alpha_u)``, both set kinds."""
    worst = 0.0
    failing = None
    for _ in range(trials):
        n_states = int(rng.integers(2, 9))
        p_bar = random_simplex(n_states, rng)
        v = rng.uniform(-10.0, 10.0, size=n_states)
        alpha_u = float(rng.uniform(0.0, 1.0))
        reward = float(rng.uniform(0.0, 1.0))
        gamma = float(rng.uniform(0.0, 0.99))
        for kind in ("l2", "l1"):
            closed = robust_backup_closed(p_bar, v, reward, gamma, kind, alpha_u, duals)
            brute = robust_backup_bruteforce(p_bar, v, reward, gamma, kind, alpha_u, n_dirs, rng)
            error = abs(closed - brute)
            worst = max(worst, error)
            if error > tol and failing is None:
                failing = _instance(kind=kind, p_bar=p_bar, v=v, alpha_u=alpha_u, reward=reward,
                                    gamma=gamma, closed=closed, brute=brute)
    return SuiteResult(name="duality", trials=trials, worst=worst, threshold=tol,
                       passed=failing is None, failing_instance=failing)


def _contracting_alpha(gamma: float, kind: str, n_states: int, rng: np.random.Generator) -> float:
    # keep gamma + alpha_u * c at most halfway to 1
    return float(rng.uniform(0.0, 0.5 * (1.0 - gamma) / penalty_lipschitz(kind, n_states)))


def run_fixed_point_suite(
    n_mdps: int,
    tol: float,
    rng: np.random.Generator,
    inits: int = 10,
    duals: Optional[Mapping[str, DualFn]] = None,
) -> SuiteResult:
    """Robust value iteration from ``inits`` random starts lands on one fixed point."""
    worst = 0.0
    failing = None
    for _ in range(n_mdps):
        n_states, n_actions = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        mdp = garnet_mdp(n_states, n_actions, rng, gamma=float(rng.uniform(0.5, 0.9)))
        policy = random_policy(n_states, n_actions, rng)
        kind = "l2" if rng.random() < 0.5 else "l1"
        alpha_u = _contracting_alpha(mdp.gamma, kind, n_states, rng)
        solutions = [
            robust_value_iteration(
                mdp, policy, kind, alpha_u, tol, q0=rng.uniform(-10.0, 10.0, size=mdp.rewards.shape), duals=duals
            ).q
            for _ in range(inits)
        ]
        spread = max(float(np.max(np.abs(q - solutions[0]))) for q in solutions)
        worst = max(worst, spread)
        if spread > 2.0 * tol and failing is None:
            failing = _instance(kind=kind, alpha_u=alpha_u, gamma=mdp.gamma, rewards=mdp.rewards,
                                transitions=mdp.transitions, spread=spread)
    return SuiteResult(name="fixed_point", trials=n_mdps, worst=worst, threshold=2.0 * tol,
                       passed=failing is None, failing_instance=failing)


def run_contraction_suite(
    pairs: int,
    rng: np.random.Generator,
    setting_refresh: int = 100,
) -> SuiteResult:
    """Operator ratio never exceeds ``gamma + delta``.

    Alternates between random 5-state tabular settings and random 1-D
    local-Gaussian settings, drawing a fresh setting every
    ``setting_refresh`` pairs. ``worst`` is the largest ``ratio - bound``.
    """
    worst = -np.inf
    failing = None
    setting: Optional[OperatorSetting] = None
    for index in range(pairs):
        if index % setting_refresh == 0:
            gamma = float(rng.uniform(0.0, 0.99))
            if (index // setting_refresh) % 2 == 0:
                mdp = garnet_mdp(5, int(rng.integers(1, 4)), rng, gamma=gamma)
                kind = "l2" if rng.random() < 0.5 else "l1"
                setting = TabularSetting(mdp, random_policy(mdp.n_states, mdp.n_actions, rng), kind)
            else:
                mode = "mean" if rng.random() < 0.5 else "mean_scale"
                setting = GaussianGridSetting.random(rng, gamma=gamma, sigma=float(rng.uniform(0.2, 1.0)), mode=mode)
        alpha_u = float(rng.uniform(0.0, 1.0))
        q1 = rng.uniform(-10.0, 10.0, size=setting.q_shape)
        q2 = rng.uniform(-10.0, 10.0, size=setting.q_shape)
        result = contraction_check(setting, q1, q2, alpha_u)
        slack = result.ratio - result.bound
        worst = max(worst, slack)
        if slack > CONTRACTION_SLACK and failing is None:
            failing = _instance(setting=type(setting).__name__, alpha_u=alpha_u, ratio=result.ratio,
                                bound=result.bound, q1=q1, q2=q2)
    return SuiteResult(name="contraction", trials=pairs, worst=float(worst), threshold=CONTRACTION_SLACK,
                       passed=failing is None, failing_instance=failing)


def run_monotonicity_suite(
    n_mdps: int,
    tol: float,
    rng: np.random.Generator,
    radii: int = 5,
) -> SuiteResult:
    """Fixed-point ``Q`` decreases elementwise as ``alpha_u`` grows."""
    worst = 0.0
    failing = None
    for _ in range(n_mdps):
        n_states, n_actions = int(rng.integers(2, 9)), int(rng.integers(1, 4))
        mdp = garnet_mdp(n_states, n_actions, rng, gamma=float(rng.uniform(0.5, 0.9)))
        policy = random_policy(n_states, n_actions, rng)
        kind = "l2" if rng.random() < 0.5 else "l1"
        top = 0.5 * (1.0 - mdp.gamma) / penalty_lipschitz(kind, n_states)
        fixed_points = [
            robust_value_iteration(mdp, policy, kind, alpha_u, tol).q for alpha_u in np.linspace(0.0, top, radii)
        ]
        increase = max(float(np.max(b - a)) for a, b in zip(fixed_points, fixed_points[1:]))
        worst = max(worst, increase)
        if increase > 2.0 * tol and failing is None:
            failing = _instance(kind=kind, gamma=mdp.gamma, rewards=mdp.rewards,
                                transitions=mdp.transitions, increase=increase)
    return SuiteResult(name="monotone_alpha", trials=n_mdps, worst=worst, threshold=2.0 * tol,
                       passed=failing is None, failing_instance=failing)


def run_verification(
    trials: int,
    tol: float,
    seed: int = 0,
    duals: Optional[Mapping[str, DualFn]] = None,
) -> VerificationReport:
    """All tabular suites, sized from ``trials``.

    ``trials`` duality instances, ``trials // 10`` MDPs for the fixed-point
    and monotonicity suites and ``10 * trials`` contraction pairs.
    """
    if trials < 1 or tol <= 0.0:
        raise ContractError(f"need trials >= 1 and tol > 0, got {trials}, {tol}")
    n_mdps = max(1, trials // 10)
    suites = [
        run_duality_suite(trials, tol, derive_rng(seed, "verify.duality"), duals),
        run_fixed_point_suite(n_mdps, tol, derive_rng(seed, "verify.fixed_point"), duals=duals),
        run_contraction_suite(10 * trials, derive_rng(seed, "verify.contraction")),
        run_monotonicity_suite(n_mdps, tol, derive_rng(seed, "verify.monotone")),
    ]
    for suite in suites:
        log = logger.info if suite.passed else logger.error
        log(f"{suite.name}: worst={suite.worst:.3e} threshold={suite.threshold:.3e} trials={suite.trials}")
    return VerificationReport(suites=suites)
