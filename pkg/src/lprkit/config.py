"""Flat ``key = value`` configuration files.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
Values stay strings here; each consumer converts and validates its own keys.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ArtifactIOError, ConfigError, ParseError


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"expected 'key = value', got {raw!r}", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        out[key] = value.strip()
    return out


def load_config(path: str | Path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(str(path), e.strerror or str(e)) from e
    return parse_config(text)


def dumps_config(values: Mapping[str, object]) -> str:
    return "".join(f"{k} = {values[k]}\n" for k in sorted(values))


def config_hash(values: Mapping[str, object]) -> str:
    """sha256 of the sorted, normalized assignments."""
    return hashlib.sha256(dumps_config({k: str(v) for k, v in values.items()}).encode()).hexdigest()


def check_keys(values: Mapping[str, object], allowed: Iterable[str], what: str = "config") -> None:
    allowed = set(allowed)
    for key in values:
        if key not in allowed:
            raise ConfigError(key, f"unknown {what} key")


def get_float(values: Mapping[str, str], key: str, default: float | None = None) -> float:
    if key not in values:
        if default is None:
            raise ConfigError(key, "missing")
        return default
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(key, f"expected a number, got {values[key]!r}") from None


def get_int(values: Mapping[str, str], key: str, default: int | None = None) -> int:
    if key not in values:
        if default is None:
            raise ConfigError(key, "missing")
        return default
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {values[key]!r}") from None


def get_bool(values: Mapping[str, str], key: str, default: bool) -> bool:
    if key not in values:
        return default
    v = values[key].lower()
    if v not in {"true", "false", "1", "0", "yes", "no"}:
        raise ConfigError(key, f"expected a boolean, got {values[key]!r}")
    return v in {"true", "1", "yes"}
