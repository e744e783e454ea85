from __future__ import annotations

import json
import random
from importlib import resources

import pytest
from jsonschema import Draft202012Validator

from designctl import provenance as prov
from designctl.cli import run
from designctl.ingest import load_trace_items

from oracles import step_stream


def schema(name: str) -> Draft202012Validator:
    text = resources.files("designctl").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    doc = json.loads(text)
    Draft202012Validator.check_schema(doc)
    return Draft202012Validator(doc)


@pytest.fixture
def cli(repo, monkeypatch, capsysbinary):
    """Run the CLI inside a private repo copy; returns (exit code, stdout bytes, stderr text)."""
    monkeypatch.chdir(repo)
    monkeypatch.delenv("DESIGNCTL_CONFIG", raising=False)

    def call(*argv: str):
        code = run(list(argv))
        out, err = capsysbinary.readouterr()
        return code, out, err.decode()
    return call


def payload(out: bytes):
    assert out.endswith(b"\n") and out.count(b"\n") == 1
    return json.loads(out)


def check(name: str, out: bytes):
    doc = payload(out)
    schema(name).validate(doc)
    return doc


def test_gate_pass_exits_zero(cli):
    code, out, _ = cli("gate", "prs/pr_pass.json")
    doc = check("gate", out)
    assert code == 0 and doc["status"] == "pass" and doc["pr_id"] == "PR-41"


@pytest.mark.parametrize("snapshot, rule", [("prs/pr_overlap.json", "R3"), ("prs/pr_locked.json", "R7")])
def test_gate_fail_exits_one(cli, snapshot, rule):
    code, out, _ = cli("gate", snapshot, "--out", "verdicts/verdict.json")
    doc = check("gate", out)
    assert code == 1 and doc["status"] == "fail"
    assert [r["rule_id"] for r in doc["rule_results"] if r["outcome"] == "fail"] == [rule]
    assert json.loads(open("verdicts/verdict.json").read()) == doc


def test_validate_bad_card_exits_one(cli):
    code, out, _ = cli("validate", "bad_card.json")
    doc = check("validate", out)
    assert code == 1 and not doc["passed"] and doc["findings"]
    assert all(f["severity"] in ("error", "warning") for f in doc["findings"])


def test_validate_release_card(cli):
    code, out, _ = cli("validate", "models/modelcard.json", "--profile", "release")
    assert code == 0 and check("validate", out)["profile"] == "release"


def test_missing_config_exits_two(cli):
    code, out, err = cli("gate", "--config", "nonexistent.toml", "prs/pr_pass.json")
    assert code == 2 and out == b"" and "nonexistent.toml" in err


def test_config_from_environment(cli, monkeypatch):
    monkeypatch.setenv("DESIGNCTL_CONFIG", "missing.toml")
    code, out, _ = cli("explain", "R1")
    assert code == 2 and out == b""


@pytest.mark.parametrize("argv", [(), ("frobnicate",), ("validate",), ("validate", "x.json", "--profile", "qa"),
                                  ("provenance",), ("explain", "R9")])
def test_usage_errors_exit_two(cli, argv):
    code, out, err = cli(*argv)
    assert code == 2 and out == b"" and err


def test_unwritable_output_exits_two(cli, repo):
    (repo / "blocker").write_text("a file, not a directory")
    code, out, err = cli("gate", "prs/pr_pass.json", "--out", "blocker/v.json")
    assert code == 2 and "blocker" in err


def test_unparseable_inputs_exit_two(cli):
    assert cli("validate", "cards/modelcard.json")[0] == 2
    assert cli("gate", "models/modelcard.json")[0] == 2
    assert cli("validate", "nope.json")[0] == 2


def test_trace_check_and_matrix(cli):
    code, out, _ = cli("trace", "check")
    doc = check("trace_check", out)
    assert code == 0 and all(f["severity"] != "error" for f in doc["findings"])
    code, out, _ = cli("trace", "matrix")
    doc = check("trace_matrix", out)
    assert [r["requirement"] for r in doc["rows"]] == ["REQ-1", "REQ-2", "REQ-3"]


def test_trace_check_reports_missing_links(cli, repo):
    (repo / "trace" / "REQ-4.md").write_text("---\nid: REQ-4\nkind: requirement\ntitle: Orphan\n---\n")
    code, out, _ = cli("trace", "check")
    doc = check("trace_check", out)
    assert code == 1
    assert {(f["code"], f["subject"]) for f in doc["findings"] if f["severity"] == "error"} == {
        ("REQ_UNRESOLVED", "REQ-4"), ("REQ_UNMAPPED", "REQ-4")}


def test_explain(cli):
    code, out, _ = cli("explain", "R3")
    doc = check("explain", out)
    assert code == 0 and doc["rule_id"] == "R3" and doc["text"]


def test_report_bundle(cli, repo):
    assert cli("gate", "prs/pr_pass.json", "--out", "v1.json")[0] == 0
    assert cli("gate", "prs/pr_overlap.json", "--out", "v2.json")[0] == 1
    code, out, err = cli("report", "models/modelcard.json", "--verdict", "v1.json", "--verdict", "v2.json")
    doc = check("report", out)
    assert code == 0 and doc["skipped"] == {}
    assert doc["directory"].endswith("reports/2.1.0")
    text = (repo / "reports" / "2.1.0" / "clinical_validation.md").read_text()
    assert "| PR-41 | pass |" in text and "| PR-44 | fail |" in text
    assert "_No provenance chain supplied._" not in text


def test_report_without_verdicts_skips_clinical(cli):
    code, out, err = cli("report", "models/modelcard.json", "--audience", "public", "--out-dir", "pub")
    doc = check("report", out)
    assert code == 0 and list(doc["skipped"]) == ["clinical_validation.md"]
    assert "clinical_validation.md not rendered" in err
    assert "src-registry" not in open("pub/2.1.0/model_card.md").read()


def test_redact(cli, repo):
    code, out, _ = cli("redact", "models/modelcard.json")
    doc = check("modelcard", out)
    assert code == 0
    assert all("x_sources" not in d for d in doc["model_parameters"]["data"])
    assert "model_parameters.data[*].x_sources" in doc["x_regulatory"]["redacted"]
    doc["x_regulatory"]["visibility"] = {"model_parameters.data[7]": "private"}
    (repo / "dangling.json").write_text(json.dumps(doc))
    code, out, err = cli("redact", "dangling.json")
    assert code == 2 and out == b"" and "data[7]" in err


def test_provenance_digest_and_verify(cli):
    code, out, _ = cli("provenance", "digest", "models/risk.onnx")
    digest = check("provenance_digest", out)
    code, out, _ = cli("provenance", "verify", "models/modelcard.json")
    doc = check("provenance_verify", out)
    assert code == 0 and doc["verified"]
    assert [r["kind"] for r in doc["chain"]] == ["data_source", "dataset", "model", "card"]
    assert doc["chain"][2]["subject"] == digest
    code, out, _ = cli("provenance", "verify", "0" * 64)
    doc = check("provenance_verify", out)
    assert code == 1 and doc == {"verified": False, "target": "0" * 64, "error": "UnknownDigest",
                                 "message": doc["message"]}


def test_provenance_record(cli, tmp_path):
    (tmp_path / "new.csv").write_text("a,b\n1,2\n")
    code, out, _ = cli("provenance", "record", str(tmp_path / "new.csv"), "--kind", "data_source",
                       "--created-at", "2026-10-01T00:00:00+00:00", "--store", "lineage.jsonl")
    rec = check("provenance_record", out)
    assert code == 0 and rec["parents"] == []
    code, out, _ = cli("provenance", "verify", rec["subject"]["hex"], "--store", "lineage.jsonl")
    assert code == 0 and len(payload(out)["chain"]) == 1
    code, out, err = cli("provenance", "record", "models/risk.onnx", "--kind", "model",
                       "--parent", "f" * 64, "--store", "lineage.jsonl")
    assert code == 2 and out == b""


def test_locked_model(cli, repo):
    code, out, _ = cli("provenance", "locked", "models/risk.onnx")
    assert code == 0 and check("provenance_locked", out) == {"locked": True, "findings": []}
    (repo / "models" / "retrained.onnx").write_bytes(b"other weights")
    code, out, _ = cli("provenance", "locked", "models/retrained.onnx")
    doc = check("provenance_locked", out)
    assert code == 1 and doc["findings"][0]["code"] == "LOCKED_VIOLATION"


def test_registry_flow(cli, repo):
    (repo / "models" / "v3.onnx").write_bytes(b"v3 weights")
    code, out, _ = cli("provenance", "register", "models/v3.onnx", "models/modelcard.json")
    reg = check("provenance_registry", out)
    assert code == 0 and [e["status"] for e in reg] == ["deployed_locked", "candidate"]
    new = reg[1]["model_digest"]["hex"]
    code, out, _ = cli("provenance", "promote", new, "deployed_locked")
    doc = check("provenance_registry", out)
    assert code == 1 and doc["promoted"] is False
    for status in ("approved", "deployed_locked"):
        code, out, _ = cli("provenance", "promote", new, status)
        assert code == 0
    assert [e["status"] for e in check("provenance_registry", out)] == ["deployed_locked", "deployed_locked"]


def write_events(path, dicts):
    path.write_text("".join(json.dumps(d) + "\n" for d in dicts))


def test_monitor_step_stream(cli, repo):
    write_events(repo / "events.jsonl", step_stream(random.Random(3)))
    code, out, _ = cli("monitor", "events.jsonl", "--card", "models/modelcard.json")
    doc = check("monitor", out)
    assert code == 1
    assert [d["kind"] for d in doc["deviations"]] == ["accuracy_drop"]
    assert 500 <= doc["deviations"][0]["window_end_seq"] <= 600
    assert len(doc["stubs"]) == 1
    stub_items = load_trace_items(repo / "trace" / "inbox")
    assert [i.kind for i in stub_items] == ["requirement"]


def test_monitor_null_stream(cli, repo):
    write_events(repo / "events.jsonl", step_stream(random.Random(4), after=9, confidence=0.9))
    code, out, _ = cli("monitor", "events.jsonl", "--card", "models/modelcard.json", "--no-stubs")
    doc = check("monitor", out)
    assert code == 0 and doc["deviations"] == [] and doc["stubs"] == []
    assert not (repo / "trace" / "inbox").exists()


def test_monitor_bad_events_exit_two(cli, repo):
    (repo / "events.jsonl").write_text('{"seq": "x"}\n')
    assert cli("monitor", "events.jsonl", "--card", "models/modelcard.json")[0] == 2


DETERMINISTIC = [
    ("validate", "models/modelcard.json", "--profile", "release"),
    ("validate", "bad_card.json"),
    ("trace", "check"),
    ("trace", "matrix"),
    ("gate", "prs/pr_pass.json"),
    ("gate", "prs/pr_locked.json"),
    ("explain", "R7"),
    ("redact", "models/modelcard.json"),
    ("report", "models/modelcard.json"),
    ("provenance", "digest", "models/modelcard.json", "--kind", "card"),
    ("provenance", "verify", "models/modelcard.json"),
    ("provenance", "locked", "models/risk.onnx"),
]


@pytest.mark.parametrize("argv", DETERMINISTIC, ids=lambda a: "-".join(a[:2]))
def test_stdout_is_deterministic(cli, argv):
    first = cli(*argv)
    second = cli(*argv)
    assert first[:2] == second[:2] and first[1]


def test_stdout_is_only_json(cli):
    for argv in DETERMINISTIC:
        _, out, _ = cli(*argv)
        payload(out)


def test_digest_matches_library(cli, repo):
    _, out, _ = cli("provenance", "digest", "models/risk.onnx")
    assert payload(out) == prov.digest_artifact((repo / "models" / "risk.onnx").read_bytes(), "model").to_dict()
