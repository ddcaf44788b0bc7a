"""
Logging configuration for usr-rl.

The level is resolved once per process: an explicit level wins, otherwise
``USR_RL_LOG_LEVEL`` (a name such as ``DEBUG`` or a number), shifted by the
command-line verbosity flags.
"""

import logging
import os
import sys
from typing import Optional, Union

from usr_rl.core.constants import LOG_DATE_FORMAT, LOG_FORMAT, LOG_LEVEL_ENV_VAR, QUIET_LOGGERS

LEVEL_STEP = logging.INFO - logging.DEBUG


def parse_level(value: Union[str, int, None], default: int = logging.INFO) -> int:
    """Turn a level name or number into a ``logging`` level.

    Unknown names fall back to ``default``.
    """
    if value is None:
        return default
    if isinstance(value, int):
        return value
    text = value.strip()
    if text.lstrip("-").isdigit():
        return int(text)
    level = logging.getLevelName(text.upper())
    return level if isinstance(level, int) else default


def resolve_level(level: Optional[int] = None, verbosity: int = 0) -> int:
    """Level from ``level`` or the environment, moved one step per verbosity unit.

    Positive ``verbosity`` is chattier (``-v``), negative quieter (``-q``).
    The result is clamped to ``[DEBUG, CRITICAL]``.
    """
    base = level if level is not None else parse_level(os.environ.get(LOG_LEVEL_ENV_VAR))
    shifted = base - verbosity * LEVEL_STEP
    return min(max(shifted, logging.DEBUG), logging.CRITICAL)


def setup_logging(
    level: Optional[int] = None,
    verbosity: int = 0,
    format_string: Optional[str] = None,
) -> int:
    """Configure application-wide logging.

    Args:
        level: Logging level. Defaults to ``USR_RL_LOG_LEVEL`` or INFO.
        verbosity: Net count of ``-v`` minus ``-q`` flags.
        format_string: Optional custom format string.

    Returns:
        The level the root logger was set to.
    """
    resolved = resolve_level(level, verbosity)
    logging.basicConfig(
        level=resolved,
        format=format_string or LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
        stream=sys.stdout,
    )
    # basicConfig is a no-op once handlers exist
    logging.getLogger().setLevel(resolved)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(resolved, logging.WARNING))
    return resolved


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
