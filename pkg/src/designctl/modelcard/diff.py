from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from . import canonical, selectors
from .model import ModelCard

_MISSING = object()


@dataclass
class CardDiff:
    changed_paths: list[str] = field(default_factory=list)
    version_changed: bool = False
    datasets_changed: bool = False
    metrics_changed: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "changed_paths": list(self.changed_paths),
            "version_changed": self.version_changed,
            "datasets_changed": self.datasets_changed,
            "metrics_changed": self.metrics_changed,
        }


def _version_name(card: ModelCard | None) -> str | None:
    if card is None or card.model_details.version is None:
        return None
    return card.model_details.version.name


def _flat(card: ModelCard | None) -> dict[str, str]:
    if card is None:
        return {}
    return {
        selectors.format_path(path): canonical.dumps(value)
        for path, value in selectors.leaves(card.to_dict())
    }


def _under(path: str, prefix: str) -> bool:
    return path == prefix or path.startswith((prefix + ".", prefix + "["))


def diff_cards(old: ModelCard | None, new: ModelCard | None) -> CardDiff:
    """Leaf-level difference between two cards.

    ``changed_paths`` holds the selector of every scalar (or empty container)
    whose canonical value differs, including leaves present on one side only.
    A missing ``old`` card is treated as empty.
    """
    a, b = _flat(old), _flat(new)
    changed = sorted(p for p in a.keys() | b.keys() if a.get(p, _MISSING) != b.get(p, _MISSING))
    return CardDiff(
        changed_paths=changed,
        version_changed=_version_name(old) != _version_name(new),
        datasets_changed=any(_under(p, "model_parameters.data") for p in changed),
        metrics_changed=any(_under(p, "quantitative_analysis") for p in changed),
    )
