"""Canonical JSON form used for diffing, digesting and byte-stable output.

Rules: UTF-8, object keys sorted by code point, no insignificant whitespace,
floats in shortest round-trip form with integral values written as integers.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any


class MalformedJson(ValueError):
    """Input is not a parseable JSON document."""


def _reject_constant(name: str) -> Any:
    raise MalformedJson(f"non-standard JSON constant {name!r}")


def _no_duplicates(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in pairs:
        if key in out:
            raise MalformedJson(f"duplicate object key {key!r}")
        out[key] = value
    return out


def loads(data: bytes | str) -> Any:
    """Strict JSON decode: rejects NaN/Infinity literals and duplicate keys."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"not UTF-8: {exc}") from None
    if not data.strip():
        raise MalformedJson("empty document")
    try:
        return json.loads(
            data, parse_constant=_reject_constant, object_pairs_hook=_no_duplicates
        )
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _number(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {value!r} has no JSON form")
    if value.is_integer() and abs(value) < 1e21:
        return str(int(value))
    return repr(value)


def _encode(value: Any, parts: list[str]) -> None:
    if value is None:
        parts.append("null")
    elif value is True:
        parts.append("true")
    elif value is False:
        parts.append("false")
    elif isinstance(value, int):
        parts.append(str(value))
    elif isinstance(value, float):
        parts.append(_number(value))
    elif isinstance(value, str):
        parts.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, dict):
        parts.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise TypeError(f"object key must be str, got {type(key).__name__}")
            if i:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _encode(value[key], parts)
        parts.append("}")
    elif isinstance(value, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(value):
            if i:
                parts.append(",")
            _encode(item, parts)
        parts.append("]")
    else:
        raise TypeError(f"value of type {type(value).__name__} is not JSON-serializable")


def dumps(value: Any) -> str:
    parts: list[str] = []
    _encode(value, parts)
    return "".join(parts)


def canonical_bytes(value: Any) -> bytes:
    return dumps(value).encode("utf-8")


def canonicalize(data: bytes | str) -> bytes:
    """Re-encode a JSON document in canonical form."""
    return canonical_bytes(loads(data))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
