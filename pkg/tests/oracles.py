"""Independent reference implementations and generators used by the tests.

Nothing here imports the code under test except plain data types and the
card constructor, so the oracles share no logic with the implementations
they check.
"""

from __future__ import annotations

import copy
import hashlib
import random

from designctl.gatekeeper import Approval, PullRequestContext, TestResult
from designctl.modelcard import card_from_dict
from designctl.traceability import Link, TraceItem

RANK = {"system": 3, "item": 2, "unit": 1}


# -- traceability ------------------------------------------------------------------


def _targets(item, rel):
    return {l.target for l in item.links if l.rel == rel}


def completeness_oracle(items: list[TraceItem]) -> list[tuple[str, str, str]]:
    by_id = {i.id: i for i in items}
    out = []
    for it in items:
        if it.kind == "requirement":
            sub_reqs = [t for t in _targets(it, "decomposes_to") if by_id[t].kind == "requirement"]
            leaf = not sub_reqs
            crs = _targets(it, "resolved_by")
            if leaf and not crs:
                out.append(("REQ_UNRESOLVED", "error", it.id))
            if crs and all(not _targets(by_id[c], "verified_by") for c in crs):
                out.append(("REQ_UNVERIFIED", "error", it.id))
            if leaf and not _targets(it, "maps_to"):
                out.append(("REQ_UNMAPPED", "error", it.id))
        elif it.kind == "user_need":
            if not _targets(it, "decomposes_to"):
                out.append(("NEED_ORPHAN", "warning", it.id))
        elif it.kind == "software_element":
            mapped = any(it.id in _targets(o, "maps_to") for o in items)
            if not mapped and not _targets(it, "parent_of"):
                out.append(("SOFT_ELEM_UNUSED", "warning", it.id))
    return sorted(out)


def decomposition_oracle(items: list[TraceItem]) -> list[tuple[str, str, str]]:
    by_id = {i.id: i for i in items}
    out = []
    for it in items:
        if it.kind != "software_element":
            continue
        parents = [o.id for o in items if it.id in _targets(o, "parent_of")]
        if len(parents) > 1 or (not parents and it.level != "system"):
            out.append(("DECOMP_NOT_TREE", "error", it.id))
        children = _targets(it, "parent_of")
        if it.level == "unit" and children:
            out.append(("UNIT_HAS_CHILDREN", "error", it.id))
        for c in children:
            if RANK[it.level] <= RANK[by_id[c].level]:
                out.append(("LEVEL_ORDER", "error", it.id))
    return sorted(out)


def random_trace_items(rng: random.Random, max_nodes: int = 200) -> list[TraceItem]:
    """Legal, acyclic item sets with random shape (not necessarily complete)."""
    n = rng.randint(0, max_nodes)
    kinds = rng.choices(["user_need", "requirement", "change_request", "test_case", "software_element"], k=n)
    ids = [f"{k[:2].upper()}-{i}" for i, k in enumerate(kinds)]
    levels = {ids[i]: rng.choice(["system", "item", "unit"]) for i, k in enumerate(kinds) if k == "software_element"}
    pool = {k: [ids[i] for i, kk in enumerate(kinds) if kk == k] for k in set(kinds)}

    def pick(kind, p, after=None):
        cands = pool.get(kind, [])
        if after is not None:  # forward edges only keep decomposes_to/parent_of acyclic
            cands = [c for c in cands if int(c.split("-")[1]) > after]
        return sorted({c for c in cands if rng.random() < p})

    items = []
    for i, (iid, kind) in enumerate(zip(ids, kinds)):
        links: list[Link] = []
        if kind == "user_need":
            links += [Link("decomposes_to", t) for t in pick("requirement", 0.05)]
        elif kind == "requirement":
            links += [Link("decomposes_to", t) for t in pick("requirement", 0.02, after=i)]
            links += [Link("resolved_by", t) for t in pick("change_request", 0.04)]
            links += [Link("maps_to", t) for t in pick("software_element", 0.04)]
        elif kind == "change_request":
            links += [Link("verified_by", t) for t in pick("test_case", 0.04)]
        elif kind == "software_element":
            links += [Link("parent_of", t) for t in pick("software_element", 0.03, after=i)]
        items.append(TraceItem(iid, kind, f"title {iid}", levels.get(iid), tuple(links)))
    rng.shuffle(items)
    return items


def complete_trace_items(rng: random.Random) -> list[TraceItem]:
    """A graph with no error findings in which every governed edge is load-bearing."""
    items: list[TraceItem] = []
    elements: list[str] = []
    n_sys = rng.randint(1, 3)
    for s in range(n_sys):
        sys_id = f"SS-{s}"
        children = []
        for it in range(rng.randint(1, 3)):
            item_id = f"SI-{s}-{it}"
            units = [f"SU-{s}-{it}-{u}" for u in range(rng.randint(0, 3))]
            for u in units:
                items.append(TraceItem(u, "software_element", "", "unit"))
            items.append(TraceItem(item_id, "software_element", "", "item",
                                   tuple(Link("parent_of", u) for u in units)))
            children.append(item_id)
            elements += [item_id, *units]
        items.append(TraceItem(sys_id, "software_element", "", "system",
                               tuple(Link("parent_of", c) for c in children)))
        elements.append(sys_id)

    leaves = []
    for r in range(rng.randint(1, 12)):
        rid, cid, tid = f"REQ-{r}", f"CR-{r}", f"TC-{r}"
        items.append(TraceItem(tid, "test_case"))
        items.append(TraceItem(cid, "change_request", links=(Link("verified_by", tid),)))
        items.append(TraceItem(rid, "requirement", links=(
            Link("resolved_by", cid), Link("maps_to", rng.choice(elements)))))
        leaves.append(rid)
    # optional intermediate requirement layer, then needs on top
    tops = []
    rng.shuffle(leaves)
    while leaves:
        group = leaves[:rng.randint(1, 3)]
        leaves = leaves[len(group):]
        if rng.random() < 0.4:
            pid = f"REQ-P{len(tops)}"
            items.append(TraceItem(pid, "requirement", links=tuple(Link("decomposes_to", g) for g in group)))
            tops.append([pid])
        else:
            tops.append(group)
    for n, group in enumerate(tops):
        items.append(TraceItem(f"UN-{n}", "user_need", links=tuple(Link("decomposes_to", g) for g in group)))
    rng.shuffle(items)
    return items


def without_edge(items: list[TraceItem], source: str, link: Link) -> list[TraceItem]:
    out = []
    for it in items:
        if it.id == source:
            it = TraceItem(it.id, it.kind, it.title, it.level, tuple(l for l in it.links if l != link))
        out.append(it)
    return out


# -- digests and datasets -------------------------------------------------------------


def hx(token: str) -> str:
    return hashlib.sha256(token.encode()).hexdigest()


def digest_pair(rng: random.Random) -> tuple[list[str], list[str]]:
    """Two sorted, duplicate-free digest lists, often with planted shared records."""
    pool = [hx(f"r{rng.random()}") for _ in range(rng.randint(0, 300))]
    a = set(rng.sample(pool, rng.randint(0, len(pool))))
    rest = [p for p in pool if p not in a]
    b = set(rng.sample(rest, rng.randint(0, len(rest))))
    if a and rng.random() < 0.6:
        b |= set(rng.sample(sorted(a), rng.randint(1, min(len(a), 25))))
    return sorted(a), sorted(b)


# -- monitoring ------------------------------------------------------------------------


def step_stream(rng: random.Random, n: int = 1000, step_at: int = 500,
                before: int = 9, after: int = 6, confidence: float = 0.8) -> list[dict]:
    """Labeled events whose correctness rate is exactly before/10 then after/10 per block of ten."""
    events = []
    for block in range(0, n, 10):
        ok = before if block < step_at else after
        marks = [True] * ok + [False] * (10 - ok)
        rng.shuffle(marks)
        for k, correct in enumerate(marks):
            seq = block + k
            events.append({"seq": seq, "timestamp": f"2026-10-01T00:{seq // 60 % 60:02d}:{seq % 60:02d}Z",
                           "predicted": "revision", "confidence": confidence,
                           "actual": "revision" if correct else "no_revision"})
    return events


def rolling_accuracy_oracle(events: list[dict], window: int) -> list[tuple[int, float]]:
    out = []
    for end in range(window, len(events) + 1):
        chunk = events[end - window:end]
        labeled = [e for e in chunk if e.get("actual") is not None]
        ok = sum(1 for e in labeled if e["actual"] == e["predicted"])
        out.append((chunk[-1]["seq"], ok / len(labeled)))
    return out


def first_crossings(series: list[tuple[int, float]], baseline: float, tol: float) -> list[int]:
    """Window ends where the signal first falls more than ``tol`` below baseline (edge-triggered)."""
    hits, low = [], False
    for seq, value in series:
        below = baseline - value > tol
        if below and not low:
            hits.append(seq)
        low = below
    return hits


# -- gate ------------------------------------------------------------------------------


def gate_card_dict(base: dict, r2_fail: bool, r3_fail: bool, r4_fail: bool, r5_fail: bool) -> dict:
    card = copy.deepcopy(base)
    if not r2_fail:
        card["model_details"]["version"]["name"] = "9.9.9"
    test = card["model_parameters"]["data"][1]
    train = card["model_parameters"]["data"][0]
    if r3_fail:
        test["record_digests"] = sorted(set(test["record_digests"]) | {train["record_digests"][0]})
        test["record_count"] = len(test["record_digests"])
    if r4_fail:
        card["quantitative_analysis"]["performance_metrics"][0]["value"] = 0.5
    if r5_fail:
        del card["considerations"]["risks"][0]["mitigation"]
    return card


ALL_ROLES = [Approval("a", "developer"), Approval("b", "data_scientist"), Approval("c", "regulatory")]


def ctx_for(base: dict, bits: tuple[bool, ...]) -> PullRequestContext:
    """A PR in which rule R<i+1> is violated exactly when bits[i] is set."""
    r1, r2, r3, r4, r5, r6, r7 = bits
    return PullRequestContext(
        pr_id="PR-T",
        phase="post_market" if r7 else "pre_market",
        linked_requirements=["REQ-404"] if r1 else ["REQ-2"],
        changed_paths=["models/risk.onnx", "models/modelcard.json"],
        card_old=card_from_dict(base),
        card_new=card_from_dict(gate_card_dict(base, r2, r3, r4, r5)),
        test_results=[TestResult("TC-1", "pass")],
        approvals=ALL_ROLES[:2] if r6 else ALL_ROLES,
        labels=["integration"],
    )
