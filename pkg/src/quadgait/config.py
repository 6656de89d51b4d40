"""Flat ``key = value`` config files, plus canonical hashing for manifests.

The format is intentionally tiny: one assignment per line, ``#`` comments,
values parsed as int, float, bool, a comma-separated tuple of those, or a
bare string. Nothing nests. Round-trips through dump_flat_config.
"""

from __future__ import annotations

import hashlib


def _parse_scalar(raw: str):
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    low = raw.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    if low in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_flat_config(text: str) -> dict:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        raw = raw.strip()
        if "," in raw:
            values[key] = tuple(_parse_scalar(p) for p in raw.split(","))
        else:
            values[key] = _parse_scalar(raw)
    return values


def load_flat_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_flat_config(fh.read())


def _format_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_flat_config(values: dict) -> str:
    lines = []
    for key in sorted(values):
        v = values[key]
        if isinstance(v, (tuple, list)):
            lines.append(f"{key} = {', '.join(_format_scalar(x) for x in v)}")
        else:
            lines.append(f"{key} = {_format_scalar(v)}")
    return "\n".join(lines) + "\n"


def save_flat_config(path, values: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_flat_config(values))


def config_hash(values: dict) -> str:
    """Stable short hash of a config dict (order-insensitive)."""
    return hashlib.sha256(dump_flat_config(values).encode("utf-8")).hexdigest()[:12]
