"""Flat ``key = value`` run configuration files.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
Per-axis keys take comma-separated values or one value for every axis;
``kernel_table`` takes ``r:phi`` pairs. Keys and defaults are documented on
`kinetic_fluid.schemas.config.SimConfig` and in ``docs/FORMATS.md``.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Dict, Union

from kinetic_fluid.errors import ConfigError
from kinetic_fluid.schemas.config import SimConfig

logger = logging.getLogger(__name__)


def parse_config(text: str) -> SimConfig:
    """Parse and validate a configuration; raises `ConfigError` listing every problem."""
    values: Dict[str, str] = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            problems.append((f"line {lineno}", "expected 'key = value'"))
            continue
        if key in values:
            problems.append((key, f"assigned twice (line {lineno})"))
            continue
        values[key] = value.strip()
    if problems:
        raise ConfigError(problems)
    return SimConfig.build(values)


def load_config(path: Union[str, Path]) -> SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError([("config", "file is not valid UTF-8")]) from exc
    config = parse_config(text)
    logger.debug("loaded configuration from %s", path)
    return config


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ", ".join(f"{_format(r)}:{_format(phi)}" for r, phi in value)
        return ", ".join(_format(v) for v in value)
    return str(value)


def render_config(config: SimConfig) -> str:
    """Inverse of `parse_config`: every set key, in schema order."""
    lines = []
    for name, info in SimConfig.model_fields.items():
        value = getattr(config, name)
        if value is None or value == ():
            continue
        lines.append(f"{info.alias or name} = {_format(value)}")
    return "\n".join(lines) + "\n"
