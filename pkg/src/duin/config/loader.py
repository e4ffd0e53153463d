"""
Config Loader Module

Reads run configuration files and turns them into validated RunConfig objects.
Files are parsed with ``yaml.safe_load``, so both YAML and JSON are accepted.
Validation failures are reported as ConfigError naming the dotted key.

Example:
    >>> from duin.config import parse_config
    >>> cfg = parse_config("configs/desk.yaml", overrides={"seed": 3})
    >>> cfg.seed
    3
"""

import copy
import logging
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from .schema import RunConfig

# Configure logging
logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Raised when a run configuration cannot be read or fails validation."""

    pass


def _format_validation_error(error: ValidationError) -> str:
    messages = []
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"]) or "<root>"
        if item["type"] == "extra_forbidden":
            messages.append(f"{key}: unknown key")
        else:
            messages.append(f"{key}: {item['msg']}")
    return "; ".join(messages)


def set_dotted(data: dict[str, Any], key: str, value: Any) -> None:
    """
    Set ``data["a"]["b"] = value`` for ``key = "a.b"``, creating blocks as needed.

    Raises:
        ConfigError: If an intermediate key holds a non-mapping value.
    """
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(f"{key}: {part!r} is not a config block")
        node = child
    node[parts[-1]] = value


def config_from_dict(data: dict[str, Any], overrides: dict[str, Any] | None = None) -> RunConfig:
    """
    Validate a configuration mapping.

    Args:
        data: Parsed configuration.
        overrides: Dotted-key values applied on top of ``data``.

    Returns:
        The validated RunConfig.

    Raises:
        ConfigError: Naming the offending dotted key.
    """
    merged = copy.deepcopy(data)
    for key, value in (overrides or {}).items():
        set_dotted(merged, key, value)
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        error_msg = f"Invalid configuration: {_format_validation_error(e)}"
        logger.error(error_msg)
        raise ConfigError(error_msg) from e


def load_config_data(path: str | Path) -> dict[str, Any]:
    """
    Read a YAML or JSON configuration file into a mapping.

    Raises:
        ConfigError: If the file is unreadable, malformed or not a mapping.
    """
    filepath = Path(path)
    try:
        with filepath.open(encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        error_msg = f"Cannot read config file {filepath}: {e}"
        logger.error(error_msg)
        raise ConfigError(error_msg) from e
    except yaml.YAMLError as e:
        error_msg = f"Malformed config file {filepath}: {e}"
        logger.error(error_msg)
        raise ConfigError(error_msg) from e

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {filepath} must contain a mapping, got {type(data).__name__}")
    return data


def parse_config(path: str | Path, overrides: dict[str, Any] | None = None) -> RunConfig:
    """
    Load and validate a configuration file.

    Missing blocks and keys take their defaults.

    Args:
        path: YAML or JSON file.
        overrides: Dotted-key values applied after reading (CLI flags).

    Returns:
        The validated RunConfig.

    Raises:
        ConfigError: If the file cannot be read or fails validation.
    """
    cfg = config_from_dict(load_config_data(path), overrides)
    logger.info(f"Loaded config from {path} (stage={cfg.stage}, seed={cfg.seed})")
    return cfg


def resolved_dict(cfg: RunConfig) -> dict[str, Any]:
    """The fully resolved configuration as JSON-ready data."""
    return cfg.model_dump(mode="json")
