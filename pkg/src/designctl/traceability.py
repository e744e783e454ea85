"""Traceability graph: user needs, requirements, change requests, test cases
and the software decomposition they map onto.

Edges point "downwards" from need to requirement to change request to test
case, with requirements also mapped to software elements and software
elements decomposed via ``parent_of``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable

from .findings import ERROR, WARNING, Finding

KINDS = ("user_need", "requirement", "change_request", "test_case", "software_element")
LEVELS = ("system", "item", "unit")
RELATIONS = ("decomposes_to", "resolved_by", "verified_by", "maps_to", "parent_of")

LEGAL_RELATIONS = {
    ("user_need", "decomposes_to", "requirement"),
    ("requirement", "decomposes_to", "requirement"),
    ("requirement", "resolved_by", "change_request"),
    ("change_request", "verified_by", "test_case"),
    ("requirement", "maps_to", "software_element"),
    ("software_element", "parent_of", "software_element"),
}
ACYCLIC_RELATIONS = ("decomposes_to", "parent_of")

_LEVEL_RANK = {"system": 3, "item": 2, "unit": 1}

# Finding catalog, in reporting order.
FINDING_CODES = (
    "REQ_UNRESOLVED",
    "REQ_UNVERIFIED",
    "REQ_UNMAPPED",
    "NEED_ORPHAN",
    "SOFT_ELEM_UNUSED",
    "DECOMP_NOT_TREE",
    "UNIT_HAS_CHILDREN",
    "LEVEL_ORDER",
)
_CODE_ORDER = {c: i for i, c in enumerate(FINDING_CODES)}


class TraceError(ValueError):
    pass


class InvalidItem(TraceError):
    pass


class DuplicateId(TraceError):
    def __init__(self, item_id: str, detail: str = ""):
        super().__init__(f"duplicate item id {item_id!r}{': ' + detail if detail else ''}")
        self.item_id = item_id


class DanglingLink(TraceError):
    def __init__(self, source: str, target: str):
        super().__init__(f"{source} links to unknown item {target!r}")
        self.source = source
        self.target = target


class IllegalRelation(TraceError):
    def __init__(self, source_kind: str, rel: str, target_kind: str, source: str = "", target: str = ""):
        super().__init__(f"{source} ({source_kind}) -{rel}-> {target} ({target_kind}) is not allowed")
        self.source_kind = source_kind
        self.rel = rel
        self.target_kind = target_kind


class CycleDetected(TraceError):
    def __init__(self, rel: str, path: list[str]):
        super().__init__(f"{rel} cycle: {' -> '.join(path)}")
        self.rel = rel
        self.path = path


class UnknownId(TraceError, KeyError):
    def __init__(self, item_id: str):
        TraceError.__init__(self, f"unknown item id {item_id!r}")
        self.item_id = item_id

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class Link:
    rel: str
    target: str

    def __post_init__(self) -> None:
        if self.rel not in RELATIONS:
            raise InvalidItem(f"unknown relation {self.rel!r}")


@dataclass(frozen=True)
class TraceItem:
    id: str
    kind: str
    title: str = ""
    level: str | None = None
    links: tuple[Link, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidItem("item id must be non-empty")
        if self.kind not in KINDS:
            raise InvalidItem(f"{self.id}: unknown kind {self.kind!r}")
        if self.kind == "software_element":
            if self.level not in LEVELS:
                raise InvalidItem(f"{self.id}: software_element needs level in {LEVELS}")
        elif self.level is not None:
            raise InvalidItem(f"{self.id}: only software elements carry a level")
        object.__setattr__(self, "links", tuple(self.links))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "kind": self.kind, "title": self.title}
        if self.level is not None:
            out["level"] = self.level
        out["links"] = [{"rel": l.rel, "target": l.target} for l in self.links]
        return out

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> TraceItem:
        links = tuple(Link(l["rel"], l["target"]) for l in raw.get("links") or ())
        return cls(id=raw["id"], kind=raw["kind"], title=raw.get("title", ""), level=raw.get("level"), links=links)


@dataclass(frozen=True)
class TraceGraph:
    items: dict[str, TraceItem]
    _out: dict[str, dict[str, tuple[str, ...]]] = field(repr=False)
    _in: dict[str, dict[str, tuple[str, ...]]] = field(repr=False)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self.items

    def kind(self, item_id: str) -> str:
        return self.items[item_id].kind

    def of_kind(self, kind: str) -> list[TraceItem]:
        return [it for it in self.items.values() if it.kind == kind]

    def targets(self, item_id: str, rel: str) -> tuple[str, ...]:
        return self._out[rel].get(item_id, ())

    def sources(self, item_id: str, rel: str) -> tuple[str, ...]:
        return self._in[rel].get(item_id, ())


def _find_cycle(nodes: Iterable[str], succ: dict[str, tuple[str, ...]]) -> list[str] | None:
    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    for root in nodes:
        if root in state:
            continue
        stack = [(root, iter(succ.get(root, ())))]
        path = [root]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                state[node] = 2
            elif state.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(succ.get(nxt, ()))))
                path.append(nxt)
    return None


def build_graph(items: Iterable[TraceItem]) -> TraceGraph:
    """Index ``items`` and validate every link.

    Raises DuplicateId, DanglingLink, IllegalRelation or CycleDetected.
    """
    by_id: dict[str, TraceItem] = {}
    for it in items:
        if it.id in by_id:
            raise DuplicateId(it.id)
        by_id[it.id] = it
    ordered = {k: by_id[k] for k in sorted(by_id)}

    out: dict[str, dict[str, set[str]]] = {r: {} for r in RELATIONS}
    inc: dict[str, dict[str, set[str]]] = {r: {} for r in RELATIONS}
    for it in ordered.values():
        for link in it.links:
            target = ordered.get(link.target)
            if target is None:
                raise DanglingLink(it.id, link.target)
            if (it.kind, link.rel, target.kind) not in LEGAL_RELATIONS:
                raise IllegalRelation(it.kind, link.rel, target.kind, it.id, target.id)
            out[link.rel].setdefault(it.id, set()).add(target.id)
            inc[link.rel].setdefault(target.id, set()).add(it.id)

    frozen_out = {r: {k: tuple(sorted(v)) for k, v in sorted(m.items())} for r, m in out.items()}
    frozen_in = {r: {k: tuple(sorted(v)) for k, v in sorted(m.items())} for r, m in inc.items()}
    for rel in ACYCLIC_RELATIONS:
        cycle = _find_cycle(ordered, frozen_out[rel])
        if cycle:
            raise CycleDetected(rel, cycle)
    return TraceGraph(ordered, frozen_out, frozen_in)


def _sorted(findings: list[Finding]) -> list[Finding]:
    return sorted(findings, key=lambda f: (f.subject, _CODE_ORDER.get(f.code, 99), f.message))


def leaf_requirements(graph: TraceGraph) -> list[str]:
    return [
        r.id for r in graph.of_kind("requirement")
        if not any(graph.kind(t) == "requirement" for t in graph.targets(r.id, "decomposes_to"))
    ]


def check_completeness(graph: TraceGraph) -> list[Finding]:
    findings: list[Finding] = []
    leaves = set(leaf_requirements(graph))
    for req in graph.of_kind("requirement"):
        crs = graph.targets(req.id, "resolved_by")
        if req.id in leaves and not crs:
            findings.append(Finding("REQ_UNRESOLVED", ERROR, req.id, f"{req.id} has no change request resolving it"))
        if crs and not any(graph.targets(cr, "verified_by") for cr in crs):
            findings.append(Finding("REQ_UNVERIFIED", ERROR, req.id,
                                    f"no change request of {req.id} is verified by a test case"))
        if req.id in leaves and not graph.targets(req.id, "maps_to"):
            findings.append(Finding("REQ_UNMAPPED", ERROR, req.id, f"{req.id} is not mapped to a software element"))
    for need in graph.of_kind("user_need"):
        if not graph.targets(need.id, "decomposes_to"):
            findings.append(Finding("NEED_ORPHAN", WARNING, need.id, f"{need.id} is not decomposed into requirements"))
    for el in graph.of_kind("software_element"):
        if not graph.sources(el.id, "maps_to") and not graph.targets(el.id, "parent_of"):
            findings.append(Finding("SOFT_ELEM_UNUSED", WARNING, el.id,
                                    f"{el.id} has no requirement mapped to it and no children"))
    return _sorted(findings)


def check_decomposition(graph: TraceGraph) -> list[Finding]:
    findings: list[Finding] = []
    for el in graph.of_kind("software_element"):
        parents = graph.sources(el.id, "parent_of")
        children = graph.targets(el.id, "parent_of")
        if len(parents) > 1:
            findings.append(Finding("DECOMP_NOT_TREE", ERROR, el.id,
                                    f"{el.id} has {len(parents)} parents: {', '.join(parents)}"))
        elif not parents and el.level != "system":
            findings.append(Finding("DECOMP_NOT_TREE", ERROR, el.id,
                                    f"{el.id} ({el.level}) is a root but is not a system"))
        if el.level == "unit" and children:
            findings.append(Finding("UNIT_HAS_CHILDREN", ERROR, el.id, f"unit {el.id} has children: {', '.join(children)}"))
        for child in children:
            child_level = graph.items[child].level
            if _LEVEL_RANK[el.level] <= _LEVEL_RANK[child_level]:
                findings.append(Finding("LEVEL_ORDER", ERROR, el.id,
                                        f"{el.id} ({el.level}) is parent of {child} ({child_level})"))
    return _sorted(findings)


@dataclass(frozen=True)
class MatrixRow:
    requirement: str
    user_needs: tuple[str, ...]
    change_requests: tuple[str, ...]
    test_cases: tuple[str, ...]
    software_elements: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "requirement": self.requirement,
            "user_needs": list(self.user_needs),
            "change_requests": list(self.change_requests),
            "test_cases": list(self.test_cases),
            "software_elements": list(self.software_elements),
        }


@dataclass(frozen=True)
class TraceMatrix:
    rows: tuple[MatrixRow, ...] = ()
    titles: dict[str, str] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.rows)

    def row(self, requirement: str) -> MatrixRow:
        for r in self.rows:
            if r.requirement == requirement:
                return r
        raise UnknownId(requirement)

    def to_dict(self) -> dict[str, Any]:
        return {"rows": [r.to_dict() for r in self.rows]}


def _ancestor_needs(graph: TraceGraph, req_id: str) -> tuple[str, ...]:
    seen: set[str] = set()
    queue = deque([req_id])
    while queue:
        for parent in graph.sources(queue.popleft(), "decomposes_to"):
            if parent not in seen:
                seen.add(parent)
                queue.append(parent)
    return tuple(sorted(p for p in seen if graph.kind(p) == "user_need"))


def trace_matrix(graph: TraceGraph) -> TraceMatrix:
    rows = []
    for req in graph.of_kind("requirement"):
        crs = graph.targets(req.id, "resolved_by")
        tests = sorted({t for cr in crs for t in graph.targets(cr, "verified_by")})
        rows.append(MatrixRow(
            requirement=req.id,
            user_needs=_ancestor_needs(graph, req.id),
            change_requests=crs,
            test_cases=tuple(tests),
            software_elements=graph.targets(req.id, "maps_to"),
        ))
    rows.sort(key=lambda r: r.requirement)
    return TraceMatrix(tuple(rows), {i: it.title for i, it in graph.items.items()})


def impact(graph: TraceGraph, item_id: str) -> set[str]:
    """Every item connected to ``item_id`` through links of any direction."""
    if item_id not in graph:
        raise UnknownId(item_id)
    seen = {item_id}
    queue = deque([item_id])
    while queue:
        node = queue.popleft()
        for rel in RELATIONS:
            for nb in graph.targets(node, rel) + graph.sources(node, rel):
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
    seen.discard(item_id)
    return seen
