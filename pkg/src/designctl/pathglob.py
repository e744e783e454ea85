"""Repository path globs: ``*`` stays within a segment, ``**`` spans any
number of segments (including none). No braces, classes or ``?``."""

from __future__ import annotations

import re
from functools import lru_cache


@lru_cache(maxsize=256)
def _segment_regex(segment: str) -> re.Pattern[str]:
    return re.compile("".join("[^/]*" if part == "*" else re.escape(part)
                              for part in re.split(r"(\*)", segment) if part) + r"\Z")


def match(pattern: str, path: str) -> bool:
    pats = pattern.strip("/").split("/")
    parts = path.strip("/").split("/")

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> bool:
        if i == len(pats):
            return j == len(parts)
        if pats[i] == "**":
            return any(go(i + 1, k) for k in range(j, len(parts) + 1))
        return j < len(parts) and bool(_segment_regex(pats[i]).match(parts[j])) and go(i + 1, j + 1)

    return go(0, 0)


def match_any(patterns: list[str] | tuple[str, ...], path: str) -> bool:
    return any(match(p, path) for p in patterns)
