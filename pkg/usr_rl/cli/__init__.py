"""
Command-line surface: run configuration, checkpoints, reports and commands.
"""

from usr_rl.cli.checkpoint_io import checkpoint_id, load_checkpoint, save_checkpoint
from usr_rl.cli.commands import build_parser, main
from usr_rl.cli.run_config import load_run_config

__all__ = [
    "build_parser",
    "checkpoint_id",
    "load_checkpoint",
    "load_run_config",
    "main",
    "save_checkpoint",
]
