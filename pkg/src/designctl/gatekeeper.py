"""Pull-request design-control gate.

A gate run evaluates every enabled rule against a snapshot of the pull
request, the trace graph and the old/new model cards, and records each
rule's outcome with its findings. Rules never short-circuit each other, so
the verdict is a complete review record.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from . import pathglob
from .findings import ERROR, WARNING, Finding
from .modelcard import ModelCard, canonical, diff_cards
from .provenance import DigestsUnavailable, dataset_overlap
from .traceability import TraceGraph

PHASES = ("pre_market", "post_market")
ROLES = ("developer", "data_scientist", "regulatory", "clinical")
RULE_IDS = ("R1", "R2", "R3", "R4", "R5", "R6", "R7")
OUTCOMES = ("pass", "fail", "skipped")


class ConfigInvalid(ValueError):
    pass


class UnknownRule(KeyError):
    def __str__(self) -> str:
        return f"unknown rule {self.args[0]!r}"


@dataclass(frozen=True)
class TestResult:
    test_case_id: str
    status: str

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        if self.status not in ("pass", "fail"):
            raise ValueError(f"test status must be pass or fail, got {self.status!r}")


@dataclass(frozen=True)
class Approval:
    reviewer: str
    role: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown reviewer role {self.role!r}")


@dataclass
class PullRequestContext:
    pr_id: str
    phase: str = "pre_market"
    linked_requirements: list[str] = field(default_factory=list)
    changed_paths: list[str] = field(default_factory=list)
    model_artifact_changed: bool = False
    card_old: ModelCard | None = None
    card_new: ModelCard | None = None
    test_results: list[TestResult] = field(default_factory=list)
    approvals: list[Approval] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.pr_id:
            raise ValueError("pr_id must be non-empty")
        if self.phase not in PHASES:
            raise ValueError(f"phase must be one of {PHASES}, got {self.phase!r}")


@dataclass
class GateConfig:
    enabled_rules: list[str] = field(default_factory=lambda: list(RULE_IDS))
    required_roles: set[str] = field(default_factory=lambda: {"developer", "data_scientist", "regulatory"})
    model_path_globs: list[str] = field(default_factory=lambda: ["models/**"])
    metric_thresholds: dict[str, float] = field(default_factory=dict)
    qa_labels: list[str] = field(default_factory=lambda: ["integration", "release"])

    def check(self) -> None:
        unknown = [r for r in self.enabled_rules if r not in RULE_IDS]
        if unknown:
            raise ConfigInvalid(f"unknown rule id(s): {', '.join(unknown)}")
        if len(set(self.enabled_rules)) != len(self.enabled_rules):
            raise ConfigInvalid("enabled_rules lists a rule more than once")
        if "R6" in self.enabled_rules and not self.required_roles:
            raise ConfigInvalid("R6 is enabled but required_roles is empty")
        bad_roles = sorted(set(self.required_roles) - set(ROLES))
        if bad_roles:
            raise ConfigInvalid(f"unknown role(s): {', '.join(bad_roles)}")


@dataclass
class RuleResult:
    rule_id: str
    outcome: str
    findings: list[Finding] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"rule_id": self.rule_id, "outcome": self.outcome, "findings": [f.to_dict() for f in self.findings]}


@dataclass
class GateVerdict:
    pr_id: str
    rule_results: list[RuleResult]

    @property
    def status(self) -> str:
        return "fail" if any(r.outcome == "fail" for r in self.rule_results) else "pass"

    def result(self, rule_id: str) -> RuleResult:
        for r in self.rule_results:
            if r.rule_id == rule_id:
                return r
        raise UnknownRule(rule_id)

    def to_dict(self) -> dict[str, Any]:
        return {"pr_id": self.pr_id, "status": self.status, "rule_results": [r.to_dict() for r in self.rule_results]}

    def to_json(self) -> bytes:
        return canonical.canonical_bytes(self.to_dict())

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> GateVerdict:
        return cls(raw["pr_id"], [
            RuleResult(r["rule_id"], r["outcome"], [Finding.from_dict(f) for f in r["findings"]])
            for r in raw["rule_results"]
        ])


Outcome = tuple[str, list[Finding]]


def _r1(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig, model_changed: bool) -> Outcome:
    findings = []
    if not ctx.linked_requirements:
        findings.append(Finding("REQ_NOT_LINKED", ERROR, ctx.pr_id, "pull request names no requirement"))
    for req in ctx.linked_requirements:
        if req not in graph:
            findings.append(Finding("REQ_UNKNOWN", ERROR, req, f"linked requirement {req} is not in the trace graph"))
    for t in ctx.test_results:
        if t.status == "fail":
            findings.append(Finding("TEST_FAILED", ERROR, t.test_case_id, f"test {t.test_case_id} failed"))
    return ("fail" if findings else "pass"), findings


def _r2(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig, model_changed: bool) -> Outcome:
    if not model_changed:
        return "skipped", []
    if ctx.card_new is None:
        return "fail", [Finding("CARD_MISSING", ERROR, ctx.pr_id, "model artifact changed but no model card in the change")]
    if not diff_cards(ctx.card_old, ctx.card_new).version_changed:
        name = ctx.card_new.model_details.version.name if ctx.card_new.model_details.version else None
        return "fail", [Finding("CARD_NOT_UPDATED", ERROR, ctx.pr_id,
                                f"model artifact changed but model_details.version.name is still {name!r}")]
    return "pass", []


def _r3(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig, model_changed: bool) -> Outcome:
    card = ctx.card_new
    if card is None:
        return "skipped", []
    trains = card.model_parameters.datasets("train")
    tests = card.model_parameters.datasets("test")
    findings = []
    try:
        for train in trains:
            for test in tests:
                ov = dataset_overlap(train, test)
                if ov.count:
                    findings.append(Finding(
                        "TT_OVERLAP", ERROR, f"{train.name}/{test.name}",
                        f"{ov.count} record(s) shared between train {train.name!r} and test {test.name!r}: "
                        + ", ".join(ov.sample),
                    ))
    except DigestsUnavailable as exc:
        return "skipped", [Finding("TT_UNCHECKABLE", WARNING, ctx.pr_id, f"independence not checkable: {exc}")]
    return ("fail" if findings else "pass"), findings


def _r4(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig, model_changed: bool) -> Outcome:
    if not set(ctx.labels) & set(config.qa_labels):
        return "skipped", []
    qa = ctx.card_new.quantitative_analysis if ctx.card_new else None
    if qa is None:
        return "fail", [Finding("QA_MISSING", ERROR, ctx.pr_id, "quantitative_analysis missing from the model card")]
    findings = []
    for mtype, minimum in sorted(config.metric_thresholds.items()):
        found = [m for m in qa.performance_metrics if m.type == mtype]
        if not found:
            findings.append(Finding("METRIC_MISSING", ERROR, mtype, f"no {mtype} metric reported"))
        for m in found:
            if m.value < minimum:
                findings.append(Finding("METRIC_BELOW_THRESHOLD", ERROR, _metric_label(m.type, m.slice),
                                        f"{_metric_label(m.type, m.slice)}={m.value} below required {minimum}"))
    for m in qa.performance_metrics:
        if m.threshold is not None and m.value < m.threshold:
            findings.append(Finding("METRIC_BELOW_THRESHOLD", ERROR, _metric_label(m.type, m.slice),
                                    f"{_metric_label(m.type, m.slice)}={m.value} below card threshold {m.threshold}"))
    return ("fail" if findings else "pass"), findings


def _metric_label(mtype: str, mslice: str | None) -> str:
    return mtype if mslice is None else f"{mtype}[{mslice}]"


def _r5(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig, model_changed: bool) -> Outcome:
    card = ctx.card_new
    if card is None:
        return "skipped", []
    findings = []
    risks = card.considerations.risks if card.considerations and card.considerations.risks else []
    for risk in risks:
        if not (risk.mitigation or "").strip():
            findings.append(Finding("RISK_UNMITIGATED", ERROR, risk.name, f"risk {risk.name!r} has no mitigation"))
        if risk.requirement_ref is not None and risk.requirement_ref not in graph:
            findings.append(Finding("RISK_REF_UNKNOWN", ERROR, risk.name,
                                    f"risk {risk.name!r} references unknown requirement {risk.requirement_ref}"))
    return ("fail" if findings else "pass"), findings


def _r6(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig, model_changed: bool) -> Outcome:
    covered = {a.role for a in ctx.approvals}
    missing = sorted(set(config.required_roles) - covered)
    findings = [Finding("ROLE_MISSING", ERROR, role, f"no approval from a {role} reviewer") for role in missing]
    return ("fail" if findings else "pass"), findings


def _r7(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig, model_changed: bool) -> Outcome:
    if ctx.phase != "post_market":
        return "skipped", []
    if model_changed:
        changed = [p for p in ctx.changed_paths if pathglob.match_any(config.model_path_globs, p)]
        return "fail", [Finding("LOCKED_MODEL_CHANGED", ERROR, ctx.pr_id,
                                "post-market change modifies the locked model: " + (", ".join(changed) or "model artifact"))]
    return "pass", []


_RULES: dict[str, Callable[[PullRequestContext, TraceGraph, GateConfig, bool], Outcome]] = {
    "R1": _r1, "R2": _r2, "R3": _r3, "R4": _r4, "R5": _r5, "R6": _r6, "R7": _r7,
}


def model_changed(ctx: PullRequestContext, config: GateConfig) -> bool:
    return ctx.model_artifact_changed or any(pathglob.match_any(config.model_path_globs, p) for p in ctx.changed_paths)


def evaluate_gate(ctx: PullRequestContext, graph: TraceGraph, config: GateConfig) -> GateVerdict:
    config.check()
    changed = model_changed(ctx, config)
    results = []
    for rule_id in config.enabled_rules:
        outcome, findings = _RULES[rule_id](ctx, graph, config, changed)
        results.append(RuleResult(rule_id, outcome, [f.for_rule(rule_id) for f in findings]))
    return GateVerdict(ctx.pr_id, results)


_EXPLANATIONS = {
    "R1": (
        "requirement-linked",
        "The pull request must name at least one requirement and every named requirement must exist in the "
        "trace graph: the requirement is the design input the change answers to. Failed test results attached "
        "to the pull request are reported under this rule as TEST_FAILED.",
        "FDA 21 CFR 820.30(c) design input; IEC 62304 5.1.1 traceability",
    ),
    "R2": (
        "card-updated-on-model-change",
        "When a model artifact changes, the model card must change with it and model_details.version.name must "
        "differ from the previous card. The card, model and test dataset together form the design output.",
        "FDA 21 CFR 820.30(d) design output; IEC 62304 8 configuration management",
    ),
    "R3": (
        "train-test-independence",
        "No record may be used both to fit and to evaluate the model: no per-record digest may occur in both a "
        "train dataset and the test dataset. Without per-record digests the rule is skipped with warning TT_UNCHECKABLE.",
        "FDA/Health Canada/MHRA Good Machine Learning Practice, guiding principle 4",
    ),
    "R4": (
        "quantitative-analysis-present",
        "Integration and release pull requests must carry the integration test results in the card's "
        "quantitative_analysis section, with every configured or card-declared threshold met.",
        "IEC 62304 5.6 software integration and integration testing; MDR Annex XIV clinical evaluation",
    ),
    "R5": (
        "risk-documented",
        "Every risk in considerations needs mitigation text, and a requirement_ref, when given, must resolve "
        "to an item in the trace graph so the mitigation feeds back into development as a requirement.",
        "ISO 14971 7 risk control; IEC 62304 7 software risk management",
    ),
    "R6": (
        "multi-role-approval",
        "Approvals must cover every configured reviewer role, so each discipline named in the configuration "
        "reviews the change before it merges.",
        "Good Machine Learning Practice, guiding principle 1; FDA 21 CFR 820.30(e) design review",
    ),
    "R7": (
        "locked-model",
        "After market release the deployed model is locked: a post-market pull request may not change a model "
        "artifact. Corrective action goes through a new pre-market iteration instead.",
        "FDA AI/ML SaMD discussion paper, locked algorithms; IEC 62304 6 software maintenance",
    ),
}


def explain_rule(rule_id: str) -> str:
    try:
        name, text, source = _EXPLANATIONS[rule_id]
    except KeyError:
        raise UnknownRule(rule_id) from None
    return f"{rule_id} {name}\n\n{text}\n\nSource: {source}\n"
