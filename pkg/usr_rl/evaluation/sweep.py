"""
Perturbation sweeps.

``sweep`` evaluates a policy at uniformly spaced values of one physical
parameter and summarizes the worst-case returns as a Robust-AUC.
``noisy_sweep`` lets every parameter drift as a clamped Gaussian random walk
during each episode. Every perturbation point and episode draws its noise from
a seed keyed by its index, so worker count never changes a report.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from usr_rl.core.config import SweepConfig
from usr_rl.core.constants import THREADS_ENV_VAR
from usr_rl.core.errors import ContractError
from usr_rl.core.logging_config import get_logger
from usr_rl.core.models import CurvePoint, NoisySweepReport, RobustCurveReport
from usr_rl.core.rng import derive_rng
from usr_rl.envs.base import PerturbableEnv
from usr_rl.evaluation.metrics import quantile, robust_auc
from usr_rl.evaluation.rollout import Policy, run_episode

logger = get_logger(__name__)

FIXED_QUANTILES = (0.05, 0.10, 0.15)


def worker_count(points: int) -> int:
    """Threads for a sweep, capped by ``USR_RL_THREADS``."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return max(1, min(points, os.cpu_count() or 1))
    try:
        requested = int(raw)
    except ValueError as e:
        raise ContractError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from e
    return max(1, min(points, requested))


def curve_point(value: float, returns: Sequence[float], q: float, band: Tuple[float, float]) -> CurvePoint:
    q05, q10, q15 = (quantile(returns, level) for level in FIXED_QUANTILES)
    return CurvePoint(
        param_value=float(value),
        q05=q05,
        q10=q10,
        q15=q15,
        quantile_return=quantile(returns, q),
        band_low=quantile(returns, band[0]),
        band_high=quantile(returns, band[1]),
        n_episodes=len(returns),
        returns=[float(r) for r in returns],
    )


def curve_report(
    env: PerturbableEnv,
    param: str,
    curve: List[CurvePoint],
    config: SweepConfig,
    checkpoint_id: str,
    seeds: Sequence[int],
) -> RobustCurveReport:
    values = [p.param_value for p in curve]
    low_auc = robust_auc(values, [p.band_low for p in curve])
    high_auc = robust_auc(values, [p.band_high for p in curve])
    return RobustCurveReport(
        env=env.spec,
        param=param,
        range=(values[0], values[-1]),
        points=len(curve),
        quantile=config.quantile,
        auc=robust_auc(values, [p.quantile_return for p in curve]),
        band_area=abs(high_auc - low_auc),
        curve=curve,
        nominal=env.spec.param(param).nominal,
        checkpoint_id=checkpoint_id,
        seeds=list(seeds),
    )


def sweep_values(env: PerturbableEnv, config: SweepConfig) -> Tuple[str, np.ndarray]:
    """Swept parameter name and its uniformly spaced values.

    Raises:
        ContractError: No parameter configured, unknown name or empty range.
    """
    if config.param is None:
        raise ContractError(f"sweep.param is required; valid: {env.spec.param_names}")
    if config.param not in env.spec.param_names:
        raise ContractError(f"unknown parameter {config.param!r}; valid: {env.spec.param_names}")
    spec = env.spec.param(config.param)
    low, high = config.resolved_range((spec.low, spec.high))
    if not low < high:
        raise ContractError(f"sweep range must satisfy min < max, got [{low}, {high}]")
    return config.param, np.linspace(low, high, config.points)


def sweep(
    policy: Policy,
    env: PerturbableEnv,
    config: SweepConfig,
    checkpoint_id: str,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> RobustCurveReport:
    """Fixed-perturbation sweep of one parameter.

    Args:
        policy: Deterministic evaluation policy.
        env: Template environment; each point runs on its own clone.
        config: Sweep protocol.
        checkpoint_id: Content hash recorded in the report.
        seed: Root seed, defaults to the first of ``config.seeds``.
        workers: Thread count; defaults to ``worker_count``.
    """
    seed = config.seeds[0] if seed is None else seed
    param, values = sweep_values(env, config)

    def evaluate_point(index: int) -> CurvePoint:
        point_env = env.clone()
        rng = derive_rng(seed, "sweep", index)
        returns = [
            run_episode(point_env, policy, rng, {param: float(values[index])}) for _ in range(config.episodes)
        ]
        return curve_point(values[index], returns, config.quantile, config.band)

    threads = workers or worker_count(len(values))
    logger.info(f"sweeping {param} over [{values[0]}, {values[-1]}] at {len(values)} points, {threads} threads")
    if threads == 1:
        curve = [evaluate_point(i) for i in range(len(values))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curve = list(pool.map(evaluate_point, range(len(values))))
    report = curve_report(env, param, curve, config, checkpoint_id, [seed])
    logger.info(f"robust AUC {report.auc:.4f}, band area {report.band_area:.4f}")
    return report


def aggregate_reports(reports: Sequence[RobustCurveReport], config: SweepConfig, env: PerturbableEnv) -> RobustCurveReport:
    """Pool per-point returns of several checkpoints before taking quantiles.

    Raises:
        ContractError: No reports, or reports over different parameters or values.
    """
    if not reports:
        raise ContractError("nothing to aggregate")
    first = reports[0]
    values = [p.param_value for p in first.curve]
    for report in reports[1:]:
        if report.param != first.param or [p.param_value for p in report.curve] != values:
            raise ContractError("reports must sweep the same parameter over the same values")
    curve = [
        curve_point(
            value,
            [r for report in reports for r in report.curve[i].returns],
            config.quantile,
            config.band,
        )
        for i, value in enumerate(values)
    ]
    checkpoint_id = "+".join(report.checkpoint_id for report in reports)
    seeds = [s for report in reports for s in report.seeds]
    return curve_report(env, first.param, curve, config, checkpoint_id, seeds)


def noisy_sweep(
    policy: Policy,
    env: PerturbableEnv,
    walk_sigma: float,
    episodes: int,
    checkpoint_id: str,
    seed: int = 0,
    q: float = 0.10,
) -> NoisySweepReport:
    """Episodes under a clamped Gaussian random walk of every parameter.

    Each episode starts at nominal parameters; before every step after the
    first each parameter moves by ``Normal(0, walk_sigma^2)`` and is clipped
    into its declared range. The walk has its own noise stream, so
    ``walk_sigma = 0`` reproduces fixed-nominal episodes exactly.

    Raises:
        ContractError: ``walk_sigma < 0`` or ``episodes < 1``.
    """
    if walk_sigma < 0.0:
        raise ContractError(f"walk_sigma must be >= 0, got {walk_sigma}")
    if episodes < 1:
        raise ContractError(f"episodes must be >= 1, got {episodes}")
    if walk_sigma == 0.0:
        returns = fixed_returns(policy, env, episodes, seed)
    else:
        returns = _walked_returns(policy, env, walk_sigma, episodes, seed)
    value = quantile(returns, q)
    logger.info(f"noisy sweep walk_sigma={walk_sigma}: {q:.2f}-quantile return {value:.4f}")
    return NoisySweepReport(
        env=env.spec,
        walk_sigma=walk_sigma,
        episodes=episodes,
        quantile=q,
        value=value,
        returns=[float(r) for r in returns],
        checkpoint_id=checkpoint_id,
        seeds=[seed],
    )


def fixed_returns(policy: Policy, env: PerturbableEnv, episodes: int, seed: int = 0) -> List[float]:
    """Nominal-parameter episodes on the same noise streams ``noisy_sweep`` uses."""
    episode_env = env.clone()
    return [run_episode(episode_env, policy, derive_rng(seed, "noisy", i)) for i in range(episodes)]


def _walked_returns(policy: Policy, env: PerturbableEnv, walk_sigma: float, episodes: int, seed: int) -> List[float]:
    episode_env = env.clone()
    returns = []
    for episode in range(episodes):
        walk_rng = derive_rng(seed, "noisy.walk", episode)

        def drift(step: int) -> dict:
            current = episode_env.params
            moved = {name: value + walk_sigma * walk_rng.standard_normal() for name, value in current.items()}
            return episode_env.clamp_params(moved)

        returns.append(run_episode(episode_env, policy, derive_rng(seed, "noisy", episode), schedule=drift))
    return returns
