"""Plain-text key/value config files with include support.

Syntax, one entry per line::

    # comment
    include other.cfg
    key = value
    list_key = a, b, c

Included files are resolved relative to the including file and loaded
first, so later keys override. Values stay strings; ``coerce`` helpers
turn them into ints/floats/bools/lists at the point of use.
"""

from __future__ import annotations

from pathlib import Path


def load_config(path) -> dict[str, str]:
    path = Path(path)
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("include "):
            target = line[len("include "):].strip()
            out.update(load_config(path.parent / target))
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def as_bool(value: str) -> bool:
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def as_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def as_int_list(value: str) -> list[int]:
    return [int(item) for item in as_list(value)]
