from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    """One problem located on a trace item, rule or artifact."""

    code: str
    severity: str
    subject: str
    message: str
    rule_id: str | None = None

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def for_rule(self, rule_id: str) -> Finding:
        return replace(self, rule_id=rule_id)

    def to_dict(self) -> dict[str, Any]:
        out = {"code": self.code, "severity": self.severity, "subject": self.subject, "message": self.message}
        if self.rule_id is not None:
            out["rule_id"] = self.rule_id
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> Finding:
        return cls(raw["code"], raw["severity"], raw["subject"], raw["message"], raw.get("rule_id"))
