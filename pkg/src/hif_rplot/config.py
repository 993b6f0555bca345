"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored.  Values are kept as strings and
converted by the consumer, which also rejects unknown keys.  List values are
comma separated; ``linspace(a, b, n)`` expands to ``n`` evenly spaced floats.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from hif_rplot.errors import ConfigError

_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)$")


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_kv_file(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_kv_text(text, str(path))


def as_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def as_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def as_bool(key: str, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def as_str_list(key: str, value: str) -> list[str]:
    items = [s.strip() for s in value.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return items


def as_float_list(key: str, value: str) -> list[float]:
    m = _LINSPACE.match(value.strip())
    if m:
        lo, hi, n = as_float(key, m.group(1)), as_float(key, m.group(2)), int(m.group(3))
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [as_float(key, s) for s in as_str_list(key, value)]


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
