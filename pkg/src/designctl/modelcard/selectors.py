"""Field selectors: ``model_parameters.data[0].x_sources``-style paths.

A selector is a dot-separated list of object keys, each optionally followed
by one or more ``[n]`` list indices or ``[*]`` (every element).
"""

from __future__ import annotations

import re
from typing import Any, Iterator, Union

Step = Union[str, int]
Path = tuple[Step, ...]

_INDEX_RE = re.compile(r"\[(\d+|\*)\]")
_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*")


class SelectorError(ValueError):
    pass


class SelectorUnresolved(LookupError):
    def __init__(self, selector: str):
        super().__init__(f"selector {selector!r} matches no field")
        self.selector = selector


def parse_selector(selector: str) -> list[Step | object]:
    """Split ``selector`` into key/index steps; ``[*]`` becomes a wildcard step."""
    steps: list[Step | object] = []
    if not selector:
        raise SelectorError("empty selector")
    for part in selector.split("."):
        m = _KEY_RE.match(part)
        if not m:
            raise SelectorError(f"bad selector segment {part!r} in {selector!r}")
        steps.append(m.group(0))
        rest = part[m.end():]
        while rest:
            im = _INDEX_RE.match(rest)
            if not im:
                raise SelectorError(f"bad index {rest!r} in {selector!r}")
            steps.append(_Wild if im.group(1) == "*" else int(im.group(1)))
            rest = rest[im.end():]
    return steps


class _WildType:
    def __repr__(self) -> str:
        return "[*]"


_Wild = _WildType()


def format_path(path: Path) -> str:
    out = ""
    for step in path:
        if isinstance(step, int):
            out += f"[{step}]"
        else:
            out += f".{step}" if out else step
    return out


def resolve(doc: Any, selector: str) -> list[Path]:
    """Concrete paths in ``doc`` matched by ``selector`` (document order)."""
    steps = parse_selector(selector)
    found: list[Path] = []

    def walk(node: Any, i: int, path: Path) -> None:
        if i == len(steps):
            found.append(path)
            return
        step = steps[i]
        if step is _Wild:
            if isinstance(node, list):
                for j, child in enumerate(node):
                    walk(child, i + 1, path + (j,))
        elif isinstance(step, int):
            if isinstance(node, list) and step < len(node):
                walk(node[step], i + 1, path + (step,))
        elif isinstance(node, dict) and step in node:
            walk(node[step], i + 1, path + (step,))

    walk(doc, 0, ())
    return found


def covers(selector: str, path: Path) -> bool:
    """True when ``path`` is the selected field or lies underneath it."""
    steps = parse_selector(selector)
    if len(path) < len(steps):
        return False
    for step, actual in zip(steps, path):
        if step is _Wild:
            if not isinstance(actual, int):
                return False
        elif step != actual:
            return False
    return True


def delete_paths(doc: Any, paths: list[Path]) -> None:
    """Remove every path from ``doc`` in place.

    Deepest and highest-index paths go first so earlier removals never shift
    the position of a later one.
    """
    def key(path: Path) -> tuple:
        return tuple((0, s) if isinstance(s, int) else (1, s) for s in path)

    for path in sorted(set(paths), key=key, reverse=True):
        node = doc
        try:
            for step in path[:-1]:
                node = node[step]
            del node[path[-1]]
        except (KeyError, IndexError, TypeError):
            continue  # already removed with an ancestor


def leaves(doc: Any, path: Path = ()) -> Iterator[tuple[Path, Any]]:
    """Yield ``(path, value)`` for every scalar and every empty container."""
    if isinstance(doc, dict) and doc:
        for k in sorted(doc):
            yield from leaves(doc[k], path + (k,))
    elif isinstance(doc, list) and doc:
        for i, v in enumerate(doc):
            yield from leaves(v, path + (i,))
    else:
        yield path, doc
