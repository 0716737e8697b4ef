"""
Flat ``key = value`` configuration files.

Values are parsed as YAML scalars or flow sequences, so quoted strings,
numbers, booleans and ``[a, b]`` lists all work; ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Tuple

import yaml

from priortune.core.loader.knowledge_loader import KNOWLEDGE_DIR
from priortune.core.models import TrainConfig

PROFILES_DIR = KNOWLEDGE_DIR / "profiles"
PROFILE_SUFFIX = ".profile"

_DEFAULTS = {f.name: f.default for f in fields(TrainConfig)}
_INT_SEQUENCES = {"experts"}


def _coerce(key: str, value: Any) -> Any:
    default = _DEFAULTS[key]
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise TypeError(f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool):
            raise TypeError(f"expected a number, got {value!r}")
        try:
            # YAML reads exponent forms such as 1e-3 as strings.
            return float(value)
        except (TypeError, ValueError) as e:
            raise TypeError(f"expected a number, got {value!r}") from e
    if isinstance(default, str):
        if not isinstance(value, str):
            raise TypeError(f"expected a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        items = value if isinstance(value, list) else [value]
        if key in _INT_SEQUENCES:
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in items):
                raise TypeError(f"expected a list of integers, got {value!r}")
            return tuple(items)
        return tuple(str(v) for v in items)
    raise TypeError(f"unsupported value {value!r}")


def _parse_lines(path: Path) -> Tuple[Dict[str, Any], Dict[str, int]]:
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got '{line}'")

        key, text = (part.strip() for part in line.split("=", 1))
        if key not in _DEFAULTS:
            raise ValueError(f"{path}:{lineno}: unknown key '{key}'")
        if key in values:
            raise ValueError(f"{path}:{lineno}: duplicate key '{key}' (first set on line {lines[key]})")

        try:
            values[key] = _coerce(key, yaml.safe_load(text) if text else None)
        except (yaml.YAMLError, TypeError) as e:
            raise ValueError(f"{path}:{lineno}: invalid value for '{key}': {e}") from e
        lines[key] = lineno

    return values, lines


def parse_config(path: str | Path, base: TrainConfig | None = None) -> TrainConfig:
    """
    Read a configuration file on top of ``base`` (desk defaults when omitted).

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        ValueError: For unknown keys, type errors or violated invariants,
            naming the file, line and key.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")

    values, lines = _parse_lines(path)
    base = base or TrainConfig()
    merged = {**base.to_dict(), **values}
    config = TrainConfig.from_dict(merged)

    try:
        config.validate()
    except ValueError as e:
        key = str(e).split(" ", 1)[0]
        where = f"{path}:{lines[key]}" if key in lines else str(path)
        raise ValueError(f"{where}: {e}") from e

    return config


def available_profiles() -> List[str]:
    return sorted(p.stem for p in PROFILES_DIR.glob(f"*{PROFILE_SUFFIX}"))


def load_profile(name: str) -> TrainConfig:
    """
    Raises:
        FileNotFoundError: If no shipped profile has this name.
    """
    path = PROFILES_DIR / f"{name}{PROFILE_SUFFIX}"
    if not path.is_file():
        raise FileNotFoundError(f"Profile '{name}' not found; available: {available_profiles()}")
    return parse_config(path)
