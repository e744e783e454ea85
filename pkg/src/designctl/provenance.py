"""Artifact digests, lineage records and the locked-model registry.

Lineage runs data_source -> dataset -> model -> card. The provenance store is
an append-only JSON-lines file and the registry a canonical JSON array;
both live in the repository next to the artifacts they describe.
"""

from __future__ import annotations

import contextlib
import fcntl
import heapq
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Iterator

from .findings import ERROR, Finding
from .modelcard import canonical
from .modelcard.model import Dataset

ALGORITHM = "sha-256"
KINDS = ("data_source", "dataset", "model", "card")
STATUSES = ("candidate", "approved", "deployed_locked")

# kind -> kinds allowed as direct parents
ALLOWED_PARENTS = {
    "data_source": frozenset(),
    "dataset": frozenset({"data_source", "dataset"}),
    "model": frozenset({"dataset"}),
    "card": frozenset({"model", "dataset"}),
}
TRANSITIONS = {("candidate", "approved"), ("approved", "deployed_locked")}

_HEX_RE = re.compile(r"^[0-9a-f]{64}$")


class ProvenanceError(ValueError):
    pass


class UnknownDigest(ProvenanceError, LookupError):
    def __init__(self, digest: Digest | str):
        super().__init__(f"digest {getattr(digest, 'hex', digest)} is not recorded")
        self.digest = digest


class BrokenChain(ProvenanceError):
    def __init__(self, child: Digest, missing: Digest):
        super().__init__(f"{child.hex} names parent {missing.hex}, which is not recorded")
        self.child = child
        self.missing = missing


class IllegalLineage(ProvenanceError):
    pass


class IllegalTransition(ProvenanceError):
    pass


class DigestsUnavailable(ProvenanceError):
    pass


@dataclass(frozen=True, order=True)
class Digest:
    hex: str
    algorithm: str = ALGORITHM

    def __post_init__(self) -> None:
        if self.algorithm != ALGORITHM:
            raise ValueError(f"unsupported digest algorithm {self.algorithm!r}")
        if not _HEX_RE.match(self.hex):
            raise ValueError(f"not a sha-256 hex digest: {self.hex!r}")

    def __str__(self) -> str:
        return self.hex

    def to_dict(self) -> dict[str, str]:
        return {"algorithm": self.algorithm, "hex": self.hex}

    @classmethod
    def parse(cls, value: Any) -> Digest:
        if isinstance(value, Digest):
            return value
        if isinstance(value, dict):
            return cls(value["hex"], value.get("algorithm", ALGORITHM))
        text = str(value)
        if text.startswith("sha256:"):
            text = text[len("sha256:"):]
        return cls(text)


def digest_artifact(data: bytes, kind: str) -> Digest:
    """SHA-256 of raw bytes; cards are hashed in canonical JSON form."""
    if kind not in KINDS:
        raise ValueError(f"unknown artifact kind {kind!r}")
    if kind == "card":
        data = canonical.canonicalize(data)
    return Digest(canonical.sha256_hex(data))


@dataclass(frozen=True)
class ProvenanceRecord:
    subject: Digest
    kind: str
    parents: tuple[Digest, ...] = ()
    created_at: str = ""
    note: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown record kind {self.kind!r}")
        object.__setattr__(self, "parents", tuple(self.parents))

    def to_dict(self) -> dict[str, Any]:
        return {
            "subject": self.subject.to_dict(),
            "kind": self.kind,
            "parents": [p.to_dict() for p in self.parents],
            "created_at": self.created_at,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ProvenanceRecord:
        return cls(
            subject=Digest.parse(raw["subject"]),
            kind=raw["kind"],
            parents=tuple(Digest.parse(p) for p in raw.get("parents", ())),
            created_at=raw.get("created_at", ""),
            note=raw.get("note", ""),
        )


Chain = list[ProvenanceRecord]


def _check_kinds(record: ProvenanceRecord, parent: ProvenanceRecord) -> None:
    if parent.kind not in ALLOWED_PARENTS[record.kind]:
        raise IllegalLineage(
            f"{record.kind} {record.subject.hex[:12]} cannot descend from {parent.kind} {parent.subject.hex[:12]}"
        )


def verify_chain(store: Iterable[ProvenanceRecord], target: Digest) -> Chain:
    """Ancestor closure of ``target`` (itself included), roots first.

    Every parent must be recorded and every parent/child kind pair must be
    legal. Ties in the topological order follow store order.
    """
    records = list(store)
    index: dict[Digest, int] = {}
    for i, rec in enumerate(records):
        index.setdefault(rec.subject, i)
    if target not in index:
        raise UnknownDigest(target)

    wanted: set[int] = set()
    pending = [index[target]]
    while pending:
        i = pending.pop()
        if i in wanted:
            continue
        wanted.add(i)
        rec = records[i]
        for p in rec.parents:
            if p not in index:
                raise BrokenChain(rec.subject, p)
            _check_kinds(rec, records[index[p]])
            pending.append(index[p])

    indegree = {i: len({index[p] for p in records[i].parents}) for i in wanted}
    children: dict[int, list[int]] = {i: [] for i in wanted}
    for i in wanted:
        for p in {index[p] for p in records[i].parents}:
            children[p].append(i)
    ready = [i for i, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    chain: Chain = []
    while ready:
        i = heapq.heappop(ready)
        chain.append(records[i])
        for c in children[i]:
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(ready, c)
    if len(chain) != len(wanted):
        raise IllegalLineage("lineage contains a cycle")
    return chain


# -- store file ----------------------------------------------------------------


@contextlib.contextmanager
def _locked(path: Path, mode: str) -> Iterator[Any]:
    with open(path, mode, encoding="utf-8") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX if "a" in mode or "w" in mode else fcntl.LOCK_SH)
        try:
            yield fh
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def load_store(path: str | Path) -> list[ProvenanceRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with _locked(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(ProvenanceRecord.from_dict(canonical.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ProvenanceError(f"{path}:{lineno}: {exc}") from None
    return out


def make_record(store: list[ProvenanceRecord], subject: Digest, kind: str,
                parents: Iterable[Digest] = (), note: str = "", created_at: str | None = None) -> ProvenanceRecord:
    """Build a record that may be appended to ``store``; parents must already be there."""
    known = {r.subject: r for r in store}
    if subject in known:
        raise ProvenanceError(f"{subject.hex} is already recorded")
    rec = ProvenanceRecord(
        subject=subject,
        kind=kind,
        parents=tuple(parents),
        created_at=created_at or datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
        note=note,
    )
    if kind == "data_source" and rec.parents:
        raise IllegalLineage("data sources have no parents")
    for p in rec.parents:
        if p not in known:
            raise BrokenChain(subject, p)
        _check_kinds(rec, known[p])
    return rec


def append_record(path: str | Path, record: ProvenanceRecord) -> None:
    """Append one canonical line; the file lock makes appends single-writer."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with _locked(path, "a") as fh:
        fh.write(canonical.dumps(record.to_dict()) + "\n")


# -- registry ------------------------------------------------------------------


@dataclass(frozen=True)
class ModelRegistryEntry:
    model_digest: Digest
    card_digest: Digest
    status: str = "candidate"

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown registry status {self.status!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_digest": self.model_digest.to_dict(),
            "card_digest": self.card_digest.to_dict(),
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ModelRegistryEntry:
        return cls(Digest.parse(raw["model_digest"]), Digest.parse(raw["card_digest"]), raw["status"])


def transition(entry: ModelRegistryEntry, status: str) -> ModelRegistryEntry:
    """Move ``entry`` one step along candidate -> approved -> deployed_locked."""
    if status not in STATUSES:
        raise ValueError(f"unknown registry status {status!r}")
    if entry.status == "deployed_locked":
        raise IllegalTransition(f"{entry.model_digest.hex[:12]} is deployed_locked and immutable")
    if (entry.status, status) not in TRANSITIONS:
        raise IllegalTransition(f"{entry.status} -> {status} is not allowed")
    return replace(entry, status=status)


def promote(registry: list[ModelRegistryEntry], model: Digest, status: str) -> list[ModelRegistryEntry]:
    out, hit = [], False
    for e in registry:
        if e.model_digest == model and not hit:
            out.append(transition(e, status))
            hit = True
        else:
            out.append(e)
    if not hit:
        raise UnknownDigest(model)
    return out


def register(registry: list[ModelRegistryEntry], model: Digest, card: Digest) -> list[ModelRegistryEntry]:
    if any(e.model_digest == model for e in registry):
        raise ProvenanceError(f"model {model.hex} is already registered")
    return [*registry, ModelRegistryEntry(model, card, "candidate")]


def load_registry(path: str | Path) -> list[ModelRegistryEntry]:
    path = Path(path)
    if not path.exists():
        return []
    raw = canonical.loads(path.read_bytes())
    if not isinstance(raw, list):
        raise ProvenanceError(f"{path}: registry must be a JSON array")
    return [ModelRegistryEntry.from_dict(e) for e in raw]


def save_registry(path: str | Path, registry: list[ModelRegistryEntry]) -> None:
    Path(path).write_bytes(canonical.canonical_bytes([e.to_dict() for e in registry]) + b"\n")


def check_locked(deployed_model: Digest, registry: Iterable[ModelRegistryEntry]) -> Finding | None:
    """``None`` when the deployed model is a locked registry entry, else a LOCKED_VIOLATION."""
    entries = list(registry)
    if any(e.status == "deployed_locked" and e.model_digest == deployed_model for e in entries):
        return None
    nearest = None
    for status in ("deployed_locked", "approved"):
        matches = [e for e in entries if e.status == status]
        if matches:
            nearest = matches[-1]
            break
    msg = f"deployed model {deployed_model.hex} is not a locked registry entry"
    if nearest is not None:
        msg += f"; nearest approved model is {nearest.model_digest.hex} ({nearest.status})"
    return Finding("LOCKED_VIOLATION", ERROR, deployed_model.hex, msg)


# -- dataset overlap -----------------------------------------------------------


@dataclass(frozen=True)
class Overlap:
    count: int
    sample: tuple[str, ...]


def dataset_overlap(a: Dataset, b: Dataset, sample_size: int = 10) -> Overlap:
    """Records shared by two datasets, from their sorted per-record digests."""
    for ds in (a, b):
        if ds.record_digests is None:
            raise DigestsUnavailable(f"dataset {ds.name!r} carries no record_digests")
    xs, ys = sorted(a.record_digests), sorted(b.record_digests)
    i = j = count = 0
    sample: list[str] = []
    prev = None
    while i < len(xs) and j < len(ys):
        if xs[i] < ys[j]:
            i += 1
        elif xs[i] > ys[j]:
            j += 1
        else:
            if xs[i] != prev:
                count += 1
                if len(sample) < sample_size:
                    sample.append(xs[i])
                prev = xs[i]
            i += 1
            j += 1
    return Overlap(count, tuple(sample))
