"""Flat key-value config file parsing shared by the mode catalog and the CLI.

Format: one ``key = value`` per line, ``#`` starts a comment, blank lines are
ignored.  Keys may repeat (the reader-mode catalog uses a repeated ``label``
key to start a new entry).
"""

from __future__ import annotations

import os
from typing import Iterable, Iterator, Tuple


def iter_key_values(lines: Iterable[str], source: str = "<config>") -> Iterator[Tuple[str, str]]:
    """Yield (key, value) pairs from flat key-value text.

    Raises ValueError (with line number) on lines that are neither blank,
    comment, nor ``key = value``.
    """
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        yield key, value.strip()


def read_key_values(path: str | os.PathLike) -> list[Tuple[str, str]]:
    """Parse a config file into an ordered (key, value) list."""
    with open(path, "r", encoding="utf-8") as fh:
        return list(iter_key_values(fh, source=str(path)))


def parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")
