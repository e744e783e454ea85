from __future__ import annotations

import itertools

import pytest

from designctl.findings import Finding
from designctl.gatekeeper import (
    RULE_IDS,
    Approval,
    ConfigInvalid,
    GateConfig,
    GateVerdict,
    PullRequestContext,
    TestResult,
    UnknownRule,
    evaluate_gate,
    explain_rule,
    model_changed,
)
from designctl.ingest import load_trace_items
from designctl.modelcard import card_from_dict
from designctl.traceability import build_graph

from conftest import FIXTURES
from oracles import ALL_ROLES, ctx_for

GRAPH = build_graph(load_trace_items(FIXTURES / "repo" / "trace"))
CONFIG = GateConfig(metric_thresholds={"auc": 0.85})


def pr(base_card, **kw) -> PullRequestContext:
    defaults = dict(pr_id="PR-1", linked_requirements=["REQ-2"], approvals=ALL_ROLES, card_new=base_card)
    return PullRequestContext(**{**defaults, **kw})


def outcome(verdict, rid):
    return verdict.result(rid).outcome


def test_truth_table(base_dict):
    for bits in itertools.product([False, True], repeat=7):
        ctx = ctx_for(base_dict, bits)
        verdict = evaluate_gate(ctx, GRAPH, CONFIG)
        individual = {}
        for i, rid in enumerate(RULE_IDS):
            solo = evaluate_gate(ctx, GRAPH, GateConfig(enabled_rules=[rid], metric_thresholds=CONFIG.metric_thresholds))
            individual[rid] = solo.rule_results[0].outcome
            assert (individual[rid] == "fail") == bits[i], (bits, rid)
            assert solo.rule_results[0] == verdict.result(rid)
        assert verdict.status == ("fail" if any(o == "fail" for o in individual.values()) else "pass")
        assert [r.rule_id for r in verdict.rule_results] == list(RULE_IDS)


@pytest.mark.parametrize("disabled", RULE_IDS)
def test_rule_independence(base_dict, disabled):
    enabled = [r for r in RULE_IDS if r != disabled]
    cfg = GateConfig(enabled_rules=enabled, metric_thresholds=CONFIG.metric_thresholds)
    for bits in itertools.product([False, True], repeat=7):
        ctx = ctx_for(base_dict, bits)
        full = evaluate_gate(ctx, GRAPH, CONFIG)
        partial = evaluate_gate(ctx, GRAPH, cfg)
        assert partial.rule_results == [r for r in full.rule_results if r.rule_id != disabled]
        assert (partial.status == "fail") == any(b for b, r in zip(bits, RULE_IDS) if r != disabled)


def test_findings_carry_rule_id(base_dict):
    verdict = evaluate_gate(ctx_for(base_dict, (True,) * 7), GRAPH, CONFIG)
    got = {(r.rule_id, f.code) for r in verdict.rule_results for f in r.findings}
    assert got == {("R1", "REQ_UNKNOWN"), ("R2", "CARD_NOT_UPDATED"), ("R3", "TT_OVERLAP"),
                   ("R4", "METRIC_BELOW_THRESHOLD"), ("R5", "RISK_UNMITIGATED"), ("R6", "ROLE_MISSING"),
                   ("R7", "LOCKED_MODEL_CHANGED")}
    assert all(f.rule_id == r.rule_id for r in verdict.rule_results for f in r.findings)


def test_r1_cases(base_card):
    v = evaluate_gate(pr(base_card, linked_requirements=[]), GRAPH, GateConfig(enabled_rules=["R1"]))
    assert [f.code for f in v.rule_results[0].findings] == ["REQ_NOT_LINKED"]
    v = evaluate_gate(pr(base_card, test_results=[TestResult("TC-1", "fail")]), GRAPH, GateConfig(enabled_rules=["R1"]))
    assert [f.code for f in v.rule_results[0].findings] == ["TEST_FAILED"]


def test_r2_cases(base_card):
    cfg = GateConfig(enabled_rules=["R2"])
    assert outcome(evaluate_gate(pr(base_card, changed_paths=["docs/x.md"]), GRAPH, cfg), "R2") == "skipped"
    v = evaluate_gate(pr(base_card, changed_paths=["models/m.onnx"], card_new=None), GRAPH, cfg)
    assert v.rule_results[0].findings[0].code == "CARD_MISSING"
    v = evaluate_gate(pr(base_card, model_artifact_changed=True, card_old=base_card), GRAPH, cfg)
    assert v.rule_results[0].findings[0].code == "CARD_NOT_UPDATED"
    assert outcome(evaluate_gate(pr(base_card, model_artifact_changed=True), GRAPH, cfg), "R2") == "pass"


def test_r3_uncheckable(base_dict):
    del base_dict["model_parameters"]["data"][1]["record_digests"]
    v = evaluate_gate(pr(card_from_dict(base_dict)), GRAPH, GateConfig(enabled_rules=["R3"]))
    res = v.rule_results[0]
    assert res.outcome == "skipped" and [(f.code, f.severity) for f in res.findings] == [("TT_UNCHECKABLE", "warning")]
    assert v.status == "pass"


def test_r3_skipped_without_card(base_card):
    assert outcome(evaluate_gate(pr(base_card, card_new=None), GRAPH, GateConfig(enabled_rules=["R3"])), "R3") == "skipped"


def test_r4_cases(base_card, base_dict):
    cfg = GateConfig(enabled_rules=["R4"], metric_thresholds={"f1": 0.5})
    assert outcome(evaluate_gate(pr(base_card), GRAPH, cfg), "R4") == "skipped"
    v = evaluate_gate(pr(base_card, labels=["release"]), GRAPH, cfg)
    assert [f.code for f in v.rule_results[0].findings] == ["METRIC_MISSING"]
    del base_dict["quantitative_analysis"]
    v = evaluate_gate(pr(card_from_dict(base_dict), labels=["integration"]), GRAPH, cfg)
    assert [f.code for f in v.rule_results[0].findings] == ["QA_MISSING"]


def test_r5_unknown_reference(base_dict):
    base_dict["considerations"]["risks"][0]["requirement_ref"] = "REQ-404"
    v = evaluate_gate(pr(card_from_dict(base_dict)), GRAPH, GateConfig(enabled_rules=["R5"]))
    assert [(f.code, f.subject) for f in v.rule_results[0].findings] == [("RISK_REF_UNKNOWN", "Training population bias")]


def test_r6_missing_roles_sorted(base_card):
    v = evaluate_gate(pr(base_card, approvals=[]), GRAPH, GateConfig(enabled_rules=["R6"]))
    assert [f.subject for f in v.rule_results[0].findings] == ["data_scientist", "developer", "regulatory"]


def test_r7_post_market_without_model_change(base_card):
    v = evaluate_gate(pr(base_card, phase="post_market", changed_paths=["docs/a.md"]), GRAPH,
                      GateConfig(enabled_rules=["R7"]))
    assert outcome(v, "R7") == "pass"


def test_model_changed_by_glob_or_flag():
    cfg = GateConfig(model_path_globs=["models/**", "**/*.onnx"])
    assert model_changed(PullRequestContext("P", changed_paths=["a/b/c.onnx"]), cfg)
    assert not model_changed(PullRequestContext("P", changed_paths=["docs/models.md"]), cfg)
    assert model_changed(PullRequestContext("P", model_artifact_changed=True), cfg)


@pytest.mark.parametrize("kwargs", [
    {"enabled_rules": ["R8"]}, {"enabled_rules": ["R1", "R1"]},
    {"required_roles": set()}, {"required_roles": {"janitor"}},
])
def test_config_invalid(kwargs, base_card):
    with pytest.raises(ConfigInvalid):
        evaluate_gate(pr(base_card), GRAPH, GateConfig(**kwargs))


def test_empty_r6_roles_allowed_when_r6_disabled(base_card):
    evaluate_gate(pr(base_card), GRAPH, GateConfig(enabled_rules=["R1"], required_roles=set()))


def test_verdict_serialization_round_trip(base_dict):
    v = evaluate_gate(ctx_for(base_dict, (True, False, True, False, True, False, True)), GRAPH, CONFIG)
    again = GateVerdict.from_dict(v.to_dict())
    assert again == v and again.to_json() == v.to_json()
    with pytest.raises(UnknownRule):
        v.result("R9")


def test_context_validation():
    with pytest.raises(ValueError):
        PullRequestContext("")
    with pytest.raises(ValueError):
        PullRequestContext("P", phase="beta")
    with pytest.raises(ValueError):
        TestResult("TC", "flaky")
    with pytest.raises(ValueError):
        Approval("x", "manager")


def test_explain_rule():
    assert "both a train dataset and the test dataset" in explain_rule("R3")
    assert "locked" in explain_rule("R7")
    for rid in RULE_IDS:
        assert explain_rule(rid).startswith(rid + " ")
    with pytest.raises(UnknownRule):
        explain_rule("R0")


def test_finding_round_trip():
    f = Finding("X", "error", "s", "m", "R1")
    assert Finding.from_dict(f.to_dict()) == f
    assert "rule_id" not in Finding("X", "warning", "s", "m").to_dict()
