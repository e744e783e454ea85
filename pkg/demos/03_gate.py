"""Pull-request gate: every rule runs, every finding names its rule."""

from __future__ import annotations

from designctl.config import load_config
from designctl.gatekeeper import RULE_IDS, evaluate_gate, explain_rule
from designctl.ingest import load_pr_context, load_trace_items
from designctl.traceability import build_graph

from _repo import scratch_repo

root = scratch_repo()
cfg = load_config(root / "designctl.toml")
graph = build_graph(load_trace_items(root / "trace"))

# %% Gate each recorded pull request.
for path in sorted((root / "prs").glob("*.json")):
    verdict = evaluate_gate(load_pr_context(path, cfg.gate.model_path_globs), graph, cfg.gate)
    outcomes = " ".join(f"{r.rule_id}={r.outcome}" for r in verdict.rule_results)
    print(f"{verdict.pr_id} {verdict.status:<4} {outcomes}")
    for r in verdict.rule_results:
        for f in r.findings:
            print(f"    {f.rule_id} {f.code}: {f.message}")

# %% What each rule checks and where it comes from.
for rid in RULE_IDS:
    print(explain_rule(rid).splitlines()[0] + ": " + explain_rule(rid).splitlines()[2][:90])
