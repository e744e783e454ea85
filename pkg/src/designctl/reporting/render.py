from __future__ import annotations

from functools import lru_cache
from importlib import resources
from string import Template
from typing import Iterable, Sequence

from ..findings import Finding
from ..gatekeeper import GateVerdict
from ..modelcard import ModelCard, redact_card, validate_card
from ..modelcard.model import RISK_CATEGORIES, Dataset
from ..provenance import Chain
from ..traceability import TraceMatrix

NONE = "_None documented._"

_CATEGORY_TITLES = {
    "input_data": "Input data",
    "algorithm_design": "Algorithm design",
    "output_decisions": "Output decisions",
}


class ReportError(ValueError):
    pass


class ProfileInsufficient(ReportError):
    pass


class ConsiderationsMissing(ReportError):
    pass


@lru_cache(maxsize=None)
def _template(name: str) -> Template:
    text = resources.files("designctl.reporting").joinpath("templates", f"{name}.md.tmpl").read_text("utf-8")
    return Template(text)


def _fill(template: str, /, **fields: str) -> str:
    text = _template(template).substitute(**fields)
    lines = [line.rstrip() for line in text.replace("\r\n", "\n").split("\n")]
    return "\n".join(lines).rstrip("\n") + "\n"


def cell(value: object) -> str:
    if value is None or value == "":
        return "-"
    text = str(value)
    return " ".join(text.replace("|", "\\|").split())


def table(headers: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    out = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        out.append("| " + " | ".join(cell(v) for v in row) + " |")
    return "\n".join(out)


def bullets(items: Iterable[str] | None) -> str:
    items = [i for i in (items or []) if i.strip()]
    return "\n".join(f"- {' '.join(i.split())}" for i in items) if items else NONE


def _block(text: str | None) -> str:
    if text is None or not text.strip():
        return NONE
    return text.strip().replace("\r\n", "\n")


def _version(card: ModelCard) -> str:
    v = card.model_details.version
    return v.name if v else "unversioned"


def _num(value: float | int) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _dataset_section(ds: Dataset) -> str:
    parts = [f"### {ds.name} ({ds.role})", "", _block(ds.description), ""]
    facts = []
    if ds.record_count is not None:
        facts.append(f"- Records: {ds.record_count}")
    if ds.digest:
        facts.append(f"- Digest: `sha256:{ds.digest}`")
    if facts:
        parts += facts + [""]
    parts.append("Sources:")
    parts.append("")
    if ds.x_sources:
        parts.append(table(["id", "kind", "description"], [(s.id, s.kind, s.description) for s in ds.x_sources]))
    else:
        parts.append(NONE)
    return "\n".join(parts)


def _considerations(card: ModelCard) -> str:
    cons = card.considerations
    if cons is None:
        return NONE
    parts = [
        "### Limitations", "", bullets(cons.limitations), "",
        "### Trade-offs", "", bullets(cons.tradeoffs), "",
        "### Ethical considerations", "", bullets(cons.ethical_considerations), "",
        "### Risks", "",
    ]
    if cons.risks:
        parts.append(table(["risk", "category", "mitigation", "requirement"],
                           [(r.name, r.category, r.mitigation, r.requirement_ref) for r in cons.risks]))
    else:
        parts.append(NONE)
    return "\n".join(parts)


def render_model_card(card: ModelCard, audience: str = "internal") -> str:
    """Markdown model card; the public audience sees the redacted card only."""
    if audience not in ("internal", "public"):
        raise ValueError(f"audience must be internal or public, got {audience!r}")
    if not validate_card(card, "development").passed:
        raise ProfileInsufficient("model card must pass the development profile before rendering")
    if audience == "public":
        card = redact_card(card)

    md = card.model_details
    details = [f"- Name: {cell(md.name)}", f"- Version: {cell(_version(card))}"]
    if md.version and md.version.date:
        details.append(f"- Date: {md.version.date}")
    if md.version and md.version.diff:
        details.append(f"- Changes: {cell(md.version.diff)}")
    if md.license:
        details.append(f"- License: {cell(md.license)}")
    if md.owners:
        details.append("- Owners: " + ", ".join(
            o.name if not o.role else f"{o.name} ({o.role})" for o in md.owners))
    details += ["", _block(md.documentation)]

    mp = card.model_parameters
    params = [f"- Model format: {cell(mp.model_format)}", ""]
    if mp.x_parameters:
        params.append(table(["parameter", "value", "valid range"], [
            (p.name, p.value if isinstance(p.value, str) else _num(p.value),
             None if p.valid_range is None else f"[{_num(p.valid_range[0])}, {_num(p.valid_range[1])}]")
            for p in mp.x_parameters
        ]))
    else:
        params.append(NONE)
    reg = card.x_regulatory
    params += ["", "### Resource requirements", "", bullets(reg.resource_requirements if reg else None)]

    qa = card.quantitative_analysis
    if qa is None:
        qa_text = NONE
    else:
        qa_text = "\n".join([
            f"Evaluation context: {cell(qa.evaluation_context)}", "",
            table(["metric", "slice", "value", "threshold"],
                  [(m.type, m.slice, _num(m.value), None if m.threshold is None else _num(m.threshold))
                   for m in qa.performance_metrics]) if qa.performance_metrics else NONE,
        ])

    return _fill(
        "model_card",
        name=cell(md.name),
        summary=f"Version {cell(_version(card))}.",
        details="\n".join(details),
        intended_use=_block(reg.intended_use if reg else None),
        datasets="\n\n".join(_dataset_section(d) for d in mp.data) if mp.data else NONE,
        parameters="\n".join(params),
        quantitative_analysis=qa_text,
        considerations=_considerations(card),
        schema_version=card.schema_version,
        audience=audience,
    )


def render_risk_report(card: ModelCard) -> str:
    cons = card.considerations
    if cons is None:
        raise ConsiderationsMissing("model card has no considerations section")
    risks = cons.risks or []
    groups = []
    for cat in RISK_CATEGORIES:
        rows = [r for r in risks if r.category == cat]
        groups.append(f"## {_CATEGORY_TITLES[cat]}")
        groups.append("")
        if rows:
            groups.append(table(["risk", "mitigation", "requirement"], [
                (r.name, r.mitigation or "**missing mitigation**",
                 r.requirement_ref or "**unlinked**") for r in rows
            ]))
        else:
            groups.append(NONE)
        groups.append("")
    body = "\n".join([
        "### Limitations", "", bullets(cons.limitations), "",
        "### Trade-offs", "", bullets(cons.tradeoffs), "",
        "### Ethical considerations", "", bullets(cons.ethical_considerations),
    ])
    return _fill(
        "risk_report",
        name=cell(card.model_details.name),
        version=cell(_version(card)),
        groups="\n".join(groups).rstrip(),
        considerations=body,
        schema_version=card.schema_version,
    )


def render_trace_matrix(matrix: TraceMatrix) -> str:
    if not matrix.rows:
        body = NONE
    else:
        body = table(
            ["requirement", "title", "user needs", "change requests", "test cases", "software elements"],
            [(r.requirement, matrix.titles.get(r.requirement), ", ".join(r.user_needs),
              ", ".join(r.change_requests), ", ".join(r.test_cases), ", ".join(r.software_elements))
             for r in matrix.rows],
        )
    return _fill("trace_matrix", summary=_matrix_counts(matrix), table=body)


def _matrix_counts(matrix: TraceMatrix) -> str:
    rows = matrix.rows
    return "\n".join([
        f"- Requirements: {len(rows)}",
        f"- Traced to a user need: {sum(1 for r in rows if r.user_needs)}",
        f"- Resolved by a change request: {sum(1 for r in rows if r.change_requests)}",
        f"- Verified by a test case: {sum(1 for r in rows if r.test_cases)}",
        f"- Mapped to a software element: {sum(1 for r in rows if r.software_elements)}",
    ])


def render_clinical_validation_report(
    card: ModelCard,
    matrix: TraceMatrix,
    verdicts: Sequence[GateVerdict],
    chain: Chain,
    findings: Sequence[Finding] = (),
    thresholds: dict[str, float] | None = None,
) -> str:
    """Release-time regulatory report assembled from card, trace and gate history."""
    report = validate_card(card, "release")
    if not report.passed:
        raise ProfileInsufficient("release profile not met: " + ", ".join(report.codes("error")))
    if not verdicts:
        raise ReportError("at least one gate verdict is required")
    thresholds = thresholds or {}
    reg = card.x_regulatory

    prov = []
    if chain:
        prov.append(table(["kind", "digest", "parents", "recorded", "note"], [
            (r.kind, f"`{r.subject.hex}`", ", ".join(p.hex[:12] for p in r.parents),
             r.created_at, r.note) for r in chain
        ]))
    else:
        prov.append("_No provenance chain supplied._")
    prov += ["", "Datasets declared in the model card:", "",
             table(["dataset", "role", "records", "digest", "sources"], [
                 (d.name, d.role, d.record_count, f"`{d.digest}`" if d.digest else None,
                  ", ".join(s.id for s in d.x_sources or []))
                 for d in card.model_parameters.data
             ])]

    qa = card.quantitative_analysis
    perf_rows = []
    for m in qa.performance_metrics:
        limit = m.threshold if m.threshold is not None else thresholds.get(m.type)
        result = "no threshold" if limit is None else ("pass" if m.value >= limit else "FAIL")
        perf_rows.append((m.type, m.slice, _num(m.value), None if limit is None else _num(limit), result))
    performance = "\n".join([
        f"Evaluation context: {cell(qa.evaluation_context)}", "",
        table(["metric", "slice", "value", "threshold", "result"], perf_rows) if perf_rows else NONE,
        "", "Clinical evaluation:", "", _block(reg.clinical_evaluation if reg else None),
    ])

    rule_ids = sorted({r.rule_id for v in verdicts for r in v.rule_results}, key=lambda x: (len(x), x))
    history = [table(["pull request", "status", *rule_ids], [
        (v.pr_id, v.status, *(_outcome(v, rid) for rid in rule_ids)) for v in verdicts
    ])]
    detail = [f"- {v.pr_id} {f.rule_id} {f.code} ({f.severity}): {' '.join(f.message.split())}"
              for v in verdicts for r in v.rule_results for f in r.findings]
    history += ["", "Findings:", "", "\n".join(detail) if detail else NONE]

    open_findings = [f"- {f.code} ({f.severity}) {f.subject}: {' '.join(f.message.split())}" for f in findings]
    traceability = "\n".join([_matrix_counts(matrix), "", "Open findings:", "",
                              "\n".join(open_findings) if open_findings else NONE])

    return _fill(
        "clinical_validation",
        name=cell(card.model_details.name),
        version=cell(_version(card)),
        summary=f"Gate verdicts recorded: {len(verdicts)}; failing: {sum(v.status == 'fail' for v in verdicts)}.",
        intended_use=_block(reg.intended_use if reg else None),
        provenance="\n".join(prov),
        performance=performance,
        history="\n".join(history),
        traceability=traceability,
        schema_version=card.schema_version,
    )


def _outcome(verdict: GateVerdict, rule_id: str) -> str:
    for r in verdict.rule_results:
        if r.rule_id == rule_id:
            return r.outcome
    return "not run"
