from __future__ import annotations

import copy

from . import selectors
from .model import ModelCard, SchemaViolation, card_from_dict
from .selectors import SelectorUnresolved

# Redaction bookkeeping; hiding it would break re-redaction.
_BOOKKEEPING = ("x_regulatory.visibility", "x_regulatory.redacted")


class RedactionError(ValueError):
    """A private selector cannot be honoured without breaking the card."""


def redact_card(card: ModelCard) -> ModelCard:
    """Return a copy of ``card`` with every private field removed.

    Private selectors come from ``x_regulatory.visibility``. They are moved
    to ``x_regulatory.redacted`` in the output, so validating the redacted
    card reports missing private fields as warnings and redacting it again
    is a no-op.
    """
    doc = copy.deepcopy(card.to_dict())
    reg = card.x_regulatory
    visibility = dict(reg.visibility or {}) if reg else {}
    for sel in sorted(visibility):
        if not selectors.resolve(doc, sel):
            raise SelectorUnresolved(sel)
    private = sorted(sel for sel, level in visibility.items() if level == "private")
    if not private:
        return card_from_dict(doc)

    doomed: list[selectors.Path] = []
    for sel in private:
        steps = tuple(s for s in selectors.parse_selector(sel) if isinstance(s, (str, int)))
        if steps == ("x_regulatory",) or any(selectors.covers(b, steps) for b in _BOOKKEEPING):
            raise RedactionError(f"selector {sel!r} targets redaction metadata")
        doomed.extend(selectors.resolve(doc, sel))
    selectors.delete_paths(doc, doomed)

    reg_doc = doc["x_regulatory"]
    remaining = {sel: level for sel, level in visibility.items()
                 if level == "public" and selectors.resolve(doc, sel)}
    if remaining:
        reg_doc["visibility"] = remaining
    else:
        reg_doc.pop("visibility", None)
    reg_doc["redacted"] = sorted(set(reg_doc.get("redacted", [])) | set(private))

    try:
        return card_from_dict(doc)
    except SchemaViolation as exc:
        raise RedactionError(f"redaction removes a required field: {exc}") from None
