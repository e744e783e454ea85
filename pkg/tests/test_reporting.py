from __future__ import annotations

import os
import random

import pytest

from designctl import provenance as prov
from designctl.gatekeeper import GateConfig, evaluate_gate
from designctl.ingest import load_card, load_pr_context, load_trace_items
from designctl.modelcard import card_from_dict
from designctl.reporting import (
    NONE,
    ConsiderationsMissing,
    ProfileInsufficient,
    ReportError,
    build_bundle,
    render_clinical_validation_report,
    render_model_card,
    render_risk_report,
    render_trace_matrix,
    verify_manifest,
    write_bundle,
)
from designctl.traceability import build_graph, check_completeness, trace_matrix

from conftest import FIXTURES
from fuzz import private_values, random_visibility, sentinel_card_dict

REPO = FIXTURES / "repo"
GOLDEN = FIXTURES / "golden"
CONFIG = GateConfig(metric_thresholds={"accuracy": 0.8, "auc": 0.85})


def inputs():
    graph = build_graph(load_trace_items(REPO / "trace"))
    card = load_card(REPO / "models" / "modelcard.json")
    verdicts = [evaluate_gate(load_pr_context(REPO / "prs" / n), graph, CONFIG)
                for n in ("pr_pass.json", "pr_overlap.json", "pr_locked.json")]
    store = prov.load_store(REPO / "provenance.jsonl")
    chain = prov.verify_chain(store, prov.digest_artifact((REPO / "models" / "modelcard.json").read_bytes(), "card"))
    return card, trace_matrix(graph), verdicts, chain, check_completeness(graph)


def renderings() -> dict[str, str]:
    card, matrix, verdicts, chain, findings = inputs()
    return {
        "model_card_internal.md": render_model_card(card, "internal"),
        "model_card_public.md": render_model_card(card, "public"),
        "risk_report.md": render_risk_report(card),
        "trace_matrix.md": render_trace_matrix(matrix),
        "clinical_validation.md": render_clinical_validation_report(card, matrix, verdicts, chain, findings,
                                                                    CONFIG.metric_thresholds),
    }


@pytest.mark.parametrize("name", ["model_card_internal.md", "model_card_public.md", "risk_report.md",
                                  "trace_matrix.md", "clinical_validation.md"])
def test_golden(name):
    text = renderings()[name]
    path = GOLDEN / name
    if os.environ.get("DESIGNCTL_UPDATE_GOLDEN"):
        path.parent.mkdir(exist_ok=True)
        path.write_bytes(text.encode())
    assert text.encode() == path.read_bytes()
    assert "\r" not in text and text.endswith("\n") and not text.endswith("\n\n")


def test_double_render_is_byte_identical():
    first, second = renderings(), renderings()
    assert first == second


def test_model_card_section_order(base_card):
    text = render_model_card(base_card)
    heads = [l for l in text.splitlines() if l.startswith("## ")]
    assert heads[:1] == ["## Model details"]
    order = ["## Model details", "## Intended use", "## Datasets", "## Parameters",
             "## Quantitative analysis", "## Considerations"]
    assert [h for h in heads if h in order] == order


def test_public_model_card_hides_private_sources(base_card):
    public = render_model_card(base_card, "public")
    for secret in ("src-registry", "src-ehr", "National arthroplasty registry extract", "EHR procedure"):
        assert secret not in public
    assert "src-registry" in render_model_card(base_card, "internal")


def test_empty_considerations_sentinel(base_dict):
    base_dict["considerations"] = {}
    text = render_model_card(card_from_dict(base_dict))
    section = text.split("## Considerations")[1]
    assert section.count(NONE) == 4


def test_model_card_needs_development_profile(base_dict):
    del base_dict["model_details"]["documentation"]
    with pytest.raises(ProfileInsufficient):
        render_model_card(card_from_dict(base_dict))
    with pytest.raises(ValueError):
        render_model_card(card_from_dict(base_dict), "press")


def test_risk_groups(base_card):
    text = render_risk_report(base_card)
    for title in ("## Input data", "## Algorithm design", "## Output decisions"):
        block = text.split(title)[1].split("## ")[0]
        rows = [l for l in block.splitlines() if l.startswith("| ") and not l.startswith("| risk")]
        assert len(rows) == 1
    assert "| Score read as a diagnosis | UI labels the output as a risk estimate | **unlinked** |" in text


def test_risk_report_requires_considerations(base_dict):
    del base_dict["considerations"]
    with pytest.raises(ConsiderationsMissing):
        render_risk_report(card_from_dict(base_dict))


def test_clinical_report_requirements(base_dict):
    card, matrix, verdicts, chain, _ = inputs()
    with pytest.raises(ReportError):
        render_clinical_validation_report(card, matrix, [], chain)
    del base_dict["x_regulatory"]["intended_use"]
    with pytest.raises(ProfileInsufficient):
        render_clinical_validation_report(card_from_dict(base_dict), matrix, verdicts, chain)


def test_failed_r3_verbatim_in_history():
    card, matrix, verdicts, chain, findings = inputs()
    text = render_clinical_validation_report(card, matrix, verdicts, chain, findings)
    assert "| PR-44 | fail | pass | pass | fail | skipped | pass | pass | skipped |" in text
    r3 = verdicts[1].result("R3").findings[0]
    assert f"- PR-44 R3 TT_OVERLAP (error): {r3.message}" in text


def test_bundle_write_and_verify(tmp_path, base_dict):
    card, matrix, verdicts, chain, findings = inputs()
    bundle = build_bundle(card, matrix, verdicts, chain, findings)
    out = write_bundle(bundle, tmp_path / "reports", "2.1.0")
    assert out == tmp_path / "reports" / "2.1.0"
    assert sorted(p.name for p in out.iterdir()) == [
        "clinical_validation.md", "manifest.json", "model_card.md", "risk_report.md", "trace_matrix.md"]
    assert verify_manifest(out) == []
    (out / "risk_report.md").write_text("tampered\n")
    assert verify_manifest(out) == ["risk_report.md"]
    (out / "model_card.md").unlink()
    assert verify_manifest(out) == ["model_card.md", "risk_report.md"]

    del base_dict["considerations"]
    partial = build_bundle(card_from_dict(base_dict), matrix)
    assert set(partial.skipped) == {"clinical_validation.md", "risk_report.md"}
    out = write_bundle(partial, tmp_path / "reports", "2.1.0")
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "model_card.md", "trace_matrix.md"]
    assert verify_manifest(out) == []


@pytest.mark.parametrize("seed", range(30))
def test_public_rendering_leaks_nothing(seed):
    rng = random.Random(1000 + seed)
    doc = sentinel_card_dict()
    doc["x_regulatory"]["visibility"] = random_visibility(rng, doc)
    card = card_from_dict(doc)
    text = render_model_card(card, "public")
    for value in private_values(doc):
        assert value not in text
