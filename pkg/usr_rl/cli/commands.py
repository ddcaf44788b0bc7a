"""
Command-line interface for usr-rl.

Each ``cmd_*`` function takes the parsed arguments and returns a process exit
code: 0 on success, 1 when a verification suite fails, 2 for usage or
configuration errors and 3 when training aborts on a non-finite value.

Examples:
    python main.py train --config configs/mtt_adv_usr.ini --seed 0 --out runs/adv
    python main.py sweep --checkpoint runs/adv/checkpoint.json --param w1 --out runs/adv
    python main.py noisy-sweep --checkpoint runs/adv/checkpoint.json --walk-sigma 0.05
    python main.py tabular-verify --trials 1000 --tol 1e-6
    python main.py gradcheck
"""

import argparse
import json
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

from usr_rl.cli.checkpoint_io import load_checkpoint, policy_from_checkpoint, save_checkpoint
from usr_rl.cli.gradcheck import GRADCHECK_SEED, run_gradchecks
from usr_rl.cli.reports import TrainLogWriter, write_curve_csv, write_json
from usr_rl.cli.run_config import load_run_config, validate_sections
from usr_rl.core.constants import (
    CHECKPOINT_FILENAME,
    CURVE_CSV_FILENAME,
    CURVE_SVG_FILENAME,
    DEFAULT_PRESET,
    EXIT_NUMERICAL_ABORT,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_FAILED,
    NOISY_REPORT_FILENAME,
    NOISY_SVG_FILENAME,
    REPORT_JSON_FILENAME,
    TRAIN_LOG_FILENAME,
)
from usr_rl.core.errors import ConfigError, ContractError, TrainingError
from usr_rl.core.logging_config import get_logger, setup_logging
from usr_rl.core.models import AgentCheckpoint, VerificationReport
from usr_rl.envs import make_env
from usr_rl.evaluation.plot import plot_curve, plot_noisy
from usr_rl.evaluation.sweep import aggregate_reports, noisy_sweep, sweep
from usr_rl.robust.uncertainty import dual_l2
from usr_rl.sac.trainer import train
from usr_rl.tabular.verify import run_verification

logger = get_logger(__name__)

FAULTS: Dict[str, Dict[str, Callable]] = {
    "dual_l2_sign_flip": {"l2": lambda l, alpha_u: -dual_l2(l, alpha_u)},
}


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"output directory {out} is not writable: {e}") from e
    return out


def _report_verification(report: VerificationReport) -> int:
    print(report.summary_table())
    for suite in report.suites:
        if suite.failing_instance is not None:
            print(f"\nfailing instance ({suite.name}):")
            print(json.dumps(suite.failing_instance, sort_keys=True))
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def _with_sweep_overrides(checkpoint: AgentCheckpoint, values: Dict[str, Any]):
    """Checkpoint config with ``[sweep]`` fields replaced by the given flags."""
    sections = checkpoint.config.model_dump()
    sections["sweep"].update({k: v for k, v in values.items() if v is not None})
    return validate_sections(sections)


# ============================================================================
# Commands
# ============================================================================


def cmd_train(args: argparse.Namespace) -> int:
    """Train one agent and write its checkpoint and log."""
    config = load_run_config(args.config, args.preset, {"train": {"seed": args.seed}})
    out = _out_dir(args.out)
    env = make_env(config.env)
    checkpoint_path = out / CHECKPOINT_FILENAME
    try:
        with TrainLogWriter(out / TRAIN_LOG_FILENAME) as log:
            result = train(env, config, on_log=log.write)
    except TrainingError as e:
        if e.checkpoint is not None:
            save_checkpoint(e.checkpoint, checkpoint_path)
            logger.error(f"partial checkpoint kept at {checkpoint_path}")
        print(f"numerical abort: {e}")
        return EXIT_NUMERICAL_ABORT
    ident = save_checkpoint(result.checkpoint, checkpoint_path)
    print(f"checkpoint {ident}: {checkpoint_path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Fixed-perturbation sweep of one or more checkpoints."""
    loaded = [load_checkpoint(path) for path in args.checkpoint]
    overrides = {
        "param": args.param,
        "v_min": args.min,
        "v_max": args.max,
        "points": args.points,
        "episodes": args.episodes,
        "quantile": args.quantile,
    }
    reports = []
    config = None
    env = None
    for checkpoint, ident in loaded:
        config = _with_sweep_overrides(checkpoint, overrides)
        env = make_env(config.env)
        seed = config.sweep.seeds[0] if args.seed is None else args.seed
        reports.append(sweep(policy_from_checkpoint(checkpoint), env, config.sweep, ident, seed=seed))
    report = reports[0] if len(reports) == 1 else aggregate_reports(reports, config.sweep, env)

    out = _out_dir(args.out)
    write_curve_csv(report, out / CURVE_CSV_FILENAME)
    write_json(report, out / REPORT_JSON_FILENAME)
    plot_curve(report, out / CURVE_SVG_FILENAME)
    print(f"robust AUC {report.auc:.6f} (q={report.quantile}, {report.points} points, band area {report.band_area:.6f})")
    return EXIT_OK


def cmd_noisy_sweep(args: argparse.Namespace) -> int:
    """Random-walk perturbation evaluation, compared with fixed nominal parameters."""
    checkpoint, ident = load_checkpoint(args.checkpoint)
    config = _with_sweep_overrides(
        checkpoint,
        {"walk_sigma": args.walk_sigma, "episodes": args.episodes, "quantile": args.quantile},
    )
    env = make_env(config.env)
    policy = policy_from_checkpoint(checkpoint)
    seed = config.sweep.seeds[0] if args.seed is None else args.seed
    sweep_cfg = config.sweep
    fixed = noisy_sweep(policy, env, 0.0, sweep_cfg.episodes, ident, seed, sweep_cfg.quantile)
    noisy = noisy_sweep(policy, env, sweep_cfg.walk_sigma, sweep_cfg.episodes, ident, seed, sweep_cfg.quantile)

    out = _out_dir(args.out)
    write_json(noisy, out / NOISY_REPORT_FILENAME)
    plot_noisy([fixed, noisy], ["fixed", f"walk {sweep_cfg.walk_sigma:g}"], out / NOISY_SVG_FILENAME)
    print(f"{sweep_cfg.quantile:.2f}-quantile return: fixed {fixed.value:.4f}, noisy {noisy.value:.4f}")
    return EXIT_OK


def cmd_tabular_verify(args: argparse.Namespace) -> int:
    """Duality, fixed-point, contraction and monotonicity suites on finite MDPs."""
    if args.trials < 1:
        raise ContractError(f"--trials must be >= 1, got {args.trials}")
    if args.tol <= 0.0:
        raise ContractError(f"--tol must be > 0, got {args.tol}")
    duals = FAULTS[args.inject_fault] if args.inject_fault else None
    if duals is not None:
        logger.warning(f"injecting fault {args.inject_fault}")
    return _report_verification(run_verification(args.trials, args.tol, args.seed, duals))


def cmd_gradcheck(args: argparse.Namespace) -> int:
    """Every registered finite-difference gradient check."""
    return _report_verification(run_gradchecks(args.seed))


# ============================================================================
# Parser
# ============================================================================


def _add_seed(parser: argparse.ArgumentParser, default: Optional[int] = None) -> None:
    parser.add_argument("--seed", type=int, default=default, help="Root seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usr-rl",
        description="Uncertainty-set regularized robust SAC: training, sweeps and oracle suites",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("Examples:", 1)[1],
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output (repeatable)")
    parser.add_argument("-q", "--quiet", action="count", default=0, help="Less log output (repeatable)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_train = sub.add_parser("train", help="Train a robust SAC agent",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_train.add_argument("--config", default=None, help="INI run configuration")
    p_train.add_argument("--preset", default=DEFAULT_PRESET, help="Hydra preset under hydra_configs/")
    p_train.add_argument("--out", default="runs/latest", help="Output directory")
    _add_seed(p_train)
    p_train.set_defaults(func=cmd_train)

    p_sweep = sub.add_parser("sweep", help="Fixed-perturbation Robust-AUC sweep",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_sweep.add_argument("--checkpoint", nargs="+", required=True,
                         help="Checkpoint(s); several are pooled per point")
    p_sweep.add_argument("--param", default=None, help="Parameter to sweep")
    p_sweep.add_argument("--min", type=float, default=None, help="Lower end (default: declared range)")
    p_sweep.add_argument("--max", type=float, default=None, help="Upper end (default: declared range)")
    p_sweep.add_argument("--points", type=int, default=None, help="Perturbation values (>= 2)")
    p_sweep.add_argument("--episodes", type=int, default=None, help="Episodes per value")
    p_sweep.add_argument("--quantile", type=float, default=None, help="Quantile level of the curve")
    p_sweep.add_argument("--out", default="runs/latest", help="Output directory")
    _add_seed(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_noisy = sub.add_parser("noisy-sweep", help="Random-walk perturbation evaluation",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_noisy.add_argument("--checkpoint", required=True, help="Checkpoint to evaluate")
    p_noisy.add_argument("--walk-sigma", type=float, default=None, help="Random-walk step std")
    p_noisy.add_argument("--episodes", type=int, default=None, help="Episodes")
    p_noisy.add_argument("--quantile", type=float, default=None, help="Quantile level")
    p_noisy.add_argument("--out", default="runs/latest", help="Output directory")
    _add_seed(p_noisy)
    p_noisy.set_defaults(func=cmd_noisy_sweep)

    p_verify = sub.add_parser("tabular-verify", help="Finite-MDP oracle suites",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_verify.add_argument("--trials", type=int, default=1000, help="Duality instances")
    p_verify.add_argument("--tol", type=float, default=1e-6, help="Tolerance")
    p_verify.add_argument("--inject-fault", choices=sorted(FAULTS), default=None,
                          help="Replace a dual function with a broken one")
    _add_seed(p_verify, default=0)
    p_verify.set_defaults(func=cmd_tabular_verify)

    p_grad = sub.add_parser("gradcheck", help="Finite-difference gradient suites",
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_seed(p_grad, default=GRADCHECK_SEED)
    p_grad.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run one command, mapping errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(verbosity=args.verbose - args.quiet)
    try:
        return args.func(args)
    except (ConfigError, ContractError) as e:
        logger.error(f"{args.cmd}: {e}")
        print(f"error: {e}")
        return EXIT_USAGE
