"""Profile-based validation of a parsed model card.

Profiles are cumulative: ``structural`` checks shape invariants the parser
cannot see, ``development`` adds what a design output needs during
implementation, ``release`` adds what a released model must carry.
Problems are reported as findings; validation itself never raises.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any

from . import selectors
from .model import ModelCard

PROFILES = ("structural", "development", "release")

# code -> (first profile that checks it, severity, summary)
RULES: dict[str, tuple[str, str, str]] = {
    "UNKNOWN_FIELD": ("structural", "warning", "field outside the schema and not x_-prefixed"),
    "PARAM_RANGE_INVALID": ("structural", "error", "valid_range is not [min <= max] over a numeric value"),
    "PARAM_OUT_OF_RANGE": ("structural", "error", "x_parameters value outside its valid_range"),
    "SOURCE_ID_DUPLICATE": ("structural", "error", "data source id used more than once in the card"),
    "METRIC_DUPLICATE": ("structural", "error", "metric (type, slice) pair repeated"),
    "VISIBILITY_UNRESOLVED": ("structural", "error", "visibility selector matches no field"),
    "DOC_MISSING": ("development", "error", "model_details.documentation empty or absent"),
    "TRAIN_MISSING": ("development", "error", "no dataset with role=train"),
    "SOURCES_MISSING": ("development", "error", "dataset has no x_sources"),
    "JUSTIFICATION_MISSING": ("development", "error", "dataset description (justification) empty"),
    "TEST_COUNT": ("release", "error", "release card needs exactly one role=test dataset"),
    "QA_MISSING": ("release", "error", "quantitative_analysis absent"),
    "CONSIDERATIONS_MISSING": ("release", "error", "considerations absent"),
    "RISK_MITIGATION_MISSING": ("release", "error", "risk without mitigation text"),
    "INTENDED_USE_MISSING": ("release", "error", "x_regulatory.intended_use empty or absent"),
}


@dataclass(frozen=True)
class CardFinding:
    code: str
    severity: str
    path: str
    message: str


@dataclass
class ValidationReport:
    profile: str
    findings: list[CardFinding] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def codes(self, severity: str | None = None) -> list[str]:
        return [f.code for f in self.findings if severity is None or f.severity == severity]

    def to_dict(self) -> dict[str, Any]:
        return {
            "profile": self.profile,
            "passed": self.passed,
            "findings": [asdict(f) for f in self.findings],
        }


def _blank(text: str | None) -> bool:
    return text is None or not text.strip()


class _Collector:
    def __init__(self, card: ModelCard):
        reg = card.x_regulatory
        self.redacted = list(reg.redacted or []) if reg else []
        self.findings: list[CardFinding] = []

    def add(self, code: str, path: str, message: str, absent: bool = False) -> None:
        severity = RULES[code][1]
        if absent and severity == "error" and self._is_redacted(path):
            severity = "warning"
            message += " (field redacted from this representation)"
        self.findings.append(CardFinding(code, severity, path, message))

    def _is_redacted(self, path: str) -> bool:
        concrete = _concrete(path)
        return any(selectors.covers(sel, concrete) for sel in self.redacted)


def _concrete(path: str) -> selectors.Path:
    steps = selectors.parse_selector(path)
    return tuple(s for s in steps if isinstance(s, (str, int)))


def _structural(card: ModelCard, out: _Collector) -> None:
    for w in card.warnings:
        out.add(w.code, w.path, w.message)

    for i, p in enumerate(card.model_parameters.x_parameters or []):
        path = f"model_parameters.x_parameters[{i}]"
        if p.valid_range is None:
            continue
        lo, hi = p.valid_range
        if lo > hi or isinstance(p.value, str):
            out.add("PARAM_RANGE_INVALID", f"{path}.valid_range", f"parameter {p.name!r}: range [{lo}, {hi}] unusable")
        elif not lo <= p.value <= hi:
            out.add("PARAM_OUT_OF_RANGE", f"{path}.value", f"parameter {p.name!r}={p.value} outside [{lo}, {hi}]")

    seen: dict[str, str] = {}
    for i, ds in enumerate(card.model_parameters.data):
        for j, src in enumerate(ds.x_sources or []):
            path = f"model_parameters.data[{i}].x_sources[{j}].id"
            if src.id in seen:
                out.add("SOURCE_ID_DUPLICATE", path, f"source id {src.id!r} already used at {seen[src.id]}")
            else:
                seen[src.id] = path

    qa = card.quantitative_analysis
    if qa is not None:
        counts = Counter((m.type, m.slice) for m in qa.performance_metrics)
        for i, m in enumerate(qa.performance_metrics):
            if counts[(m.type, m.slice)] > 1:
                label = m.type if m.slice is None else f"{m.type}/{m.slice}"
                out.add("METRIC_DUPLICATE", f"quantitative_analysis.performance_metrics[{i}]", f"metric {label} repeated")

    reg = card.x_regulatory
    if reg is not None and reg.visibility:
        doc = card.to_dict()
        for sel in sorted(reg.visibility):
            try:
                hit = selectors.resolve(doc, sel)
            except selectors.SelectorError as exc:
                out.add("VISIBILITY_UNRESOLVED", "x_regulatory.visibility", str(exc))
                continue
            if not hit:
                out.add("VISIBILITY_UNRESOLVED", "x_regulatory.visibility", f"selector {sel!r} matches no field")


def _development(card: ModelCard, out: _Collector) -> None:
    if _blank(card.model_details.documentation):
        out.add("DOC_MISSING", "model_details.documentation", "model documentation is required", absent=True)
    data = card.model_parameters.data
    if not any(d.role == "train" for d in data):
        out.add("TRAIN_MISSING", "model_parameters.data", "at least one training dataset is required", absent=True)
    for i, ds in enumerate(data):
        if not ds.x_sources:
            out.add("SOURCES_MISSING", f"model_parameters.data[{i}].x_sources",
                    f"dataset {ds.name!r} does not trace to any data source", absent=True)
        if _blank(ds.description):
            out.add("JUSTIFICATION_MISSING", f"model_parameters.data[{i}].description",
                    f"dataset {ds.name!r} has no description/justification", absent=True)


def _release(card: ModelCard, out: _Collector) -> None:
    tests = card.model_parameters.datasets("test")
    if len(tests) != 1:
        out.add("TEST_COUNT", "model_parameters.data",
                f"expected exactly one test dataset, found {len(tests)}", absent=not tests)
    if card.quantitative_analysis is None:
        out.add("QA_MISSING", "quantitative_analysis", "integration test results are required for release", absent=True)
    cons = card.considerations
    if cons is None:
        out.add("CONSIDERATIONS_MISSING", "considerations", "risk considerations are required for release", absent=True)
    else:
        for i, risk in enumerate(cons.risks or []):
            if _blank(risk.mitigation):
                out.add("RISK_MITIGATION_MISSING", f"considerations.risks[{i}].mitigation",
                        f"risk {risk.name!r} has no mitigation", absent=True)
    reg = card.x_regulatory
    if reg is None or _blank(reg.intended_use):
        out.add("INTENDED_USE_MISSING", "x_regulatory.intended_use", "intended use statement is required", absent=True)


_CHECKS = {"structural": _structural, "development": _development, "release": _release}


def validate_card(card: ModelCard, profile: str = "structural") -> ValidationReport:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    out = _Collector(card)
    for name in PROFILES[: PROFILES.index(profile) + 1]:
        _CHECKS[name](card, out)
    return ValidationReport(profile=profile, findings=out.findings)
