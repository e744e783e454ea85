"""Trace graph: needs to requirements to change requests, tests and software elements."""

from __future__ import annotations

from designctl.ingest import load_trace_items
from designctl.traceability import build_graph, check_completeness, check_decomposition, impact, trace_matrix

from _repo import scratch_repo

root = scratch_repo()
graph = build_graph(load_trace_items(root / "trace"))
print(f"{len(graph)} trace items loaded from Markdown front matter and a tracker export")

# %% The fixture graph is complete, so only warnings (if any) remain.
for f in check_completeness(graph) + check_decomposition(graph):
    print(f"  {f.severity:<8} {f.code:<18} {f.subject}")

# %% Matrix: one row per requirement.
for row in trace_matrix(graph).rows:
    print(f"  {row.requirement:<6} needs={list(row.user_needs)} crs={list(row.change_requests)} "
          f"tests={list(row.test_cases)} elements={list(row.software_elements)}")

# %% Everything connected to the model unit, in either direction.
print("impact of SU-model:", sorted(impact(graph, "SU-model")))

# %% Add a requirement that nobody has resolved or mapped yet.
(root / "trace" / "REQ-9.md").write_text("---\nid: REQ-9\nkind: requirement\ntitle: Explain the score\n---\n")
graph = build_graph(load_trace_items(root / "trace"))
print([(f.code, f.subject) for f in check_completeness(graph) if f.is_error])
