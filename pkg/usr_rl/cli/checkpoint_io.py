"""
Checkpoint persistence.

Checkpoints are JSON with sorted keys; Python prints floats as their shortest
round-trip decimal, so save -> load -> save reproduces the file byte for byte.
"""

import hashlib
import json
from pathlib import Path
from typing import Tuple, Union

from pydantic import ValidationError

from usr_rl.core.errors import ConfigError
from usr_rl.core.logging_config import get_logger
from usr_rl.core.models import AgentCheckpoint
from usr_rl.evaluation.rollout import DeterministicPolicy
from usr_rl.sac.agent import agent_from_checkpoint

logger = get_logger(__name__)

CHECKPOINT_ID_LENGTH = 16


def checkpoint_text(checkpoint: AgentCheckpoint) -> str:
    return json.dumps(checkpoint.model_dump(mode="json"), sort_keys=True, separators=(",", ":")) + "\n"


def checkpoint_id(text: str) -> str:
    """Truncated sha256 of the serialized checkpoint."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:CHECKPOINT_ID_LENGTH]


def save_checkpoint(checkpoint: AgentCheckpoint, path: Union[str, Path]) -> str:
    """Write ``checkpoint`` to ``path`` and return its id."""
    text = checkpoint_text(checkpoint)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    ident = checkpoint_id(text)
    logger.info(f"saved checkpoint {ident} (step {checkpoint.step}) to {path}")
    return ident


def load_checkpoint(path: Union[str, Path]) -> Tuple[AgentCheckpoint, str]:
    """Read and validate a checkpoint.

    Returns:
        ``(checkpoint, checkpoint id)``.

    Raises:
        ConfigError: Missing file, invalid JSON or a record that fails validation.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        checkpoint = AgentCheckpoint.model_validate(json.loads(text))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e.msg}", line=e.lineno) from e
    except ValidationError as e:
        error = e.errors()[0]
        where = ".".join(str(part) for part in error["loc"])
        raise ConfigError(f"{path}: invalid checkpoint at {where}: {error['msg']}", key=where) from e
    return checkpoint, checkpoint_id(text)


def policy_from_checkpoint(checkpoint: AgentCheckpoint) -> DeterministicPolicy:
    return DeterministicPolicy(agent_from_checkpoint(checkpoint).actor)
