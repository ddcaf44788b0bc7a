"""
Run configuration loading.

A run configuration is an INI document with ``[env]``, ``[train]``, ``[usr]``
and ``[sweep]`` sections. Its values are laid over a hydra preset
(``hydra_configs/<preset>.yaml``) and the result is validated as a
``RunConfig``. Every rejection becomes a ``ConfigError`` naming the dotted key,
the violated constraint and, when the value came from the file, its line.
"""

import configparser
import re
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from pydantic import ValidationError

from usr_rl.core.config import RunConfig
from usr_rl.core.constants import DEFAULT_PRESET, HYDRA_CONFIG_DIR_NAME
from usr_rl.core.errors import ConfigError
from usr_rl.core.logging_config import get_logger

logger = get_logger(__name__)

HYDRA_CONFIG_DIR = Path(__file__).resolve().parents[2] / HYDRA_CONFIG_DIR_NAME

# INI spelling -> field name
KEY_ALIASES: Dict[Tuple[str, str], str] = {
    ("sweep", "min"): "v_min",
    ("sweep", "max"): "v_max",
}
FIELD_ALIASES: Dict[Tuple[str, str], str] = {v: k[1] for k, v in KEY_ALIASES.items()}
LIST_FIELDS: Dict[Tuple[str, str], type] = {
    ("sweep", "band"): float,
    ("sweep", "seeds"): int,
}
NONE_LITERALS = ("", "none", "null")

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def allowed_keys() -> Dict[str, Tuple[str, ...]]:
    """INI keys accepted in each section."""
    out: Dict[str, Tuple[str, ...]] = {}
    for section, field in RunConfig.model_fields.items():
        model = field.annotation
        out[section] = tuple(FIELD_ALIASES.get((section, name), name) for name in model.model_fields)
    return out


def dotted_key(section: str, field: str) -> str:
    return f"{section}.{FIELD_ALIASES.get((section, field), field)}"


# ============================================================================
# Hydra presets
# ============================================================================


def compose_preset(preset: str = DEFAULT_PRESET, config_dir: Path = HYDRA_CONFIG_DIR) -> Dict[str, Any]:
    """Compose ``<preset>.yaml`` into ``{section: {key: value}}``.

    Falls back to an empty overlay (the built-in defaults) when hydra cannot
    compose the preset.
    """
    from hydra import compose, initialize_config_dir
    from hydra.core.global_hydra import GlobalHydra
    from omegaconf import OmegaConf

    try:
        with initialize_config_dir(config_dir=str(config_dir), version_base=None):
            cfg = compose(config_name=preset)
        data = OmegaConf.to_container(cfg, resolve=True)
    except Exception as e:
        logger.error(f"Failed to load Hydra preset {preset!r}: {e}")
        logger.info("Using default configuration")
        return {}
    finally:
        if GlobalHydra.instance().is_initialized():
            GlobalHydra.instance().clear()
    return {section: dict(values or {}) for section, values in data.items() if section in RunConfig.model_fields}


# ============================================================================
# INI documents
# ============================================================================


def _line_index(text: str) -> Dict[Tuple[str, str], int]:
    """1-based line of every ``key = value`` in the document."""
    lines: Dict[Tuple[str, str], int] = {}
    section: Optional[str] = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = _SECTION_RE.match(line)
        if header:
            section = header.group(1).strip()
            lines[(section, "")] = number
            continue
        key = _KEY_RE.match(line)
        if key and section is not None:
            lines[(section, key.group(1).strip().lower())] = number
    return lines


def _convert(section: str, key: str, raw: str) -> Any:
    value = raw.strip()
    if (section, key) in LIST_FIELDS:
        cast = LIST_FIELDS[(section, key)]
        try:
            return [cast(item) for item in value.split(",") if item.strip()]
        except ValueError as e:
            raise ConfigError(f"{section}.{key}: expected a comma-separated list, got {raw!r}", key=f"{section}.{key}") from e
    if value.lower() in NONE_LITERALS:
        return None
    return value


def parse_ini(text: str, source: str = "<string>") -> Tuple[Dict[str, Dict[str, Any]], Dict[Tuple[str, str], int]]:
    """Parse an INI document into raw section values.

    Returns:
        ``({section: {field: value}}, {(section, field): line})``.

    Raises:
        ConfigError: Malformed syntax, unknown section or unknown key.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"{source}: key outside any section: {e.line.strip()!r}", line=e.lineno) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"{source}: duplicate section [{e.section}]", line=e.lineno) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"{source}: duplicate key {e.section}.{e.option}", key=f"{e.section}.{e.option}", line=e.lineno) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError(f"{source}: cannot parse {e.errors[0][1] if e.errors else ''}", line=line) from e

    lines = _line_index(text)
    known = allowed_keys()
    sections: Dict[str, Dict[str, Any]] = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(
                f"{source}: unknown section [{section}]; valid: {sorted(known)}",
                key=section,
                line=lines.get((section, "")),
            )
        values: Dict[str, Any] = {}
        for key, raw in parser.items(section):
            if key not in known[section]:
                raise ConfigError(
                    f"{source}: unknown key {section}.{key}; valid: {list(known[section])}",
                    key=f"{section}.{key}",
                    line=lines.get((section, key)),
                )
            field = KEY_ALIASES.get((section, key), key)
            values[field] = _convert(section, key, raw)
            if (section, key) in lines:
                lines[(section, field)] = lines[(section, key)]
        sections[section] = values
    return sections, lines


# ============================================================================
# Validation
# ============================================================================


def _merge(base: Mapping[str, Mapping[str, Any]], overlay: Mapping[str, Mapping[str, Any]]) -> Dict[str, Dict[str, Any]]:
    merged = {section: dict(values) for section, values in base.items()}
    for section, values in overlay.items():
        merged.setdefault(section, {}).update(values)
    return merged


def validate_sections(
    sections: Mapping[str, Mapping[str, Any]],
    lines: Optional[Mapping[Tuple[str, str], int]] = None,
) -> RunConfig:
    """Validate merged sections, turning pydantic errors into ``ConfigError``."""
    try:
        return RunConfig.from_sections(sections)
    except ValidationError as e:
        error = e.errors()[0]
        loc = [str(part) for part in error["loc"]]
        if len(loc) >= 2:
            key = dotted_key(loc[0], loc[1])
            line = (lines or {}).get((loc[0], loc[1]))
        else:
            key = ".".join(loc) or None
            line = None
        message = error["msg"]
        if error["type"] == "extra_forbidden":
            message = "unknown key"
        got = error.get("input")
        detail = f" (got {got!r})" if not isinstance(got, Mapping) else ""
        raise ConfigError(f"{key}: {message}{detail}", key=key, line=line) from e


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    preset: str = DEFAULT_PRESET,
    overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
) -> RunConfig:
    """Preset, then the INI file at ``path``, then ``overrides``.

    Args:
        path: Optional INI run configuration.
        preset: Hydra preset name under ``hydra_configs/``.
        overrides: Command-line values, ``{section: {field: value}}``;
            ``None`` values are skipped.

    Raises:
        ConfigError: The file is missing, malformed or holds invalid values.
    """
    sections = compose_preset(preset)
    lines: Dict[Tuple[str, str], int] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parsed, lines = parse_ini(path.read_text(encoding="utf-8"), source=str(path))
        sections = _merge(sections, parsed)
        logger.info(f"loaded run config {path} over preset {preset!r}")
    if overrides:
        given = {s: {k: v for k, v in values.items() if v is not None} for s, values in overrides.items()}
        sections = _merge(sections, given)
        for section, values in given.items():
            for key in values:
                lines.pop((section, key), None)
    return validate_sections(sections, lines)
