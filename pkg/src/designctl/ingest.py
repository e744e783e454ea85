"""Load repository-resident artifacts: trace item files, model cards and
pull-request snapshot exports.

Trace items come from Markdown files with a YAML front-matter block or from
JSON files holding an array of items. PR snapshots are JSON files exported
from the forge; card paths inside them are relative to the snapshot file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from . import pathglob
from .gatekeeper import PHASES, Approval, PullRequestContext, TestResult
from .modelcard import MalformedJson, ModelCard, SchemaViolation, parse_card, validate_card
from .traceability import DuplicateId, TraceError, TraceItem


class IngestError(ValueError):
    pass


class ParseError(IngestError):
    def __init__(self, path: str | Path, detail: str):
        super().__init__(f"{path}: {detail}")
        self.path = str(path)
        self.detail = detail


class SnapshotSchemaViolation(IngestError):
    def __init__(self, path: str | Path, field_path: str, detail: str):
        super().__init__(f"{path}: {field_path}: {detail}")
        self.path = str(path)
        self.field_path = field_path
        self.detail = detail


def _front_matter(text: str, path: Path) -> Any:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "---":
        raise ParseError(path, "line 1: missing YAML front-matter opening '---'")
    for end in range(1, len(lines)):
        if lines[end].strip() in ("---", "..."):
            break
    else:
        raise ParseError(path, "front-matter block is not closed")
    try:
        return yaml.safe_load("\n".join(lines[1:end]))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 2}: " if mark is not None else ""
        raise ParseError(path, f"{where}invalid YAML: {getattr(exc, 'problem', exc)}") from None


def _item(raw: Any, path: Path, where: str) -> TraceItem:
    if not isinstance(raw, dict):
        raise ParseError(path, f"{where}: trace item must be a mapping")
    for key in ("id", "kind"):
        if key not in raw:
            raise ParseError(path, f"{where}: missing field {key!r}")
    links = raw.get("links") or []
    if not isinstance(links, list) or not all(isinstance(l, dict) and {"rel", "target"} <= l.keys() for l in links):
        raise ParseError(path, f"{where}: links must be a list of {{rel, target}} mappings")
    try:
        return TraceItem.from_dict({**raw, "id": str(raw["id"]), "title": str(raw.get("title") or "")})
    except TraceError as exc:
        raise ParseError(path, f"{where}: {exc}") from None


def load_trace_file(path: Path) -> list[TraceItem]:
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".md":
        return [_item(_front_matter(text, path), path, "front matter")]
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, list):
        raise ParseError(path, "JSON trace export must be an array of items")
    return [_item(r, path, f"[{i}]") for i, r in enumerate(raw)]


def _trace_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.rglob("*") if p.is_file() and p.suffix in (".md", ".json"))


def load_trace_items(directory: str | Path) -> list[TraceItem]:
    """Every item under ``directory`` (recursively), ordered by id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ParseError(directory, "trace directory does not exist")
    seen: dict[str, Path] = {}
    items = []
    for path in _trace_files(directory):
        for item in load_trace_file(path):
            if item.id in seen:
                raise DuplicateId(item.id, f"defined in {seen[item.id]} and {path}")
            seen[item.id] = path
            items.append(item)
    return sorted(items, key=lambda it: it.id)


def load_card(path: str | Path) -> ModelCard:
    path = Path(path)
    try:
        return parse_card(path.read_bytes())
    except OSError as exc:
        raise ParseError(path, exc.strerror or str(exc)) from None
    except (MalformedJson, SchemaViolation) as exc:
        raise ParseError(path, str(exc)) from None


_SNAPSHOT_REQUIRED = ("pr_id", "phase", "linked_requirements", "changed_paths", "test_results", "approvals")


def _str_list(raw: dict[str, Any], key: str, path: Path) -> list[str]:
    value = raw.get(key, [])
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SnapshotSchemaViolation(path, key, "expected an array of strings")
    return list(value)


def load_pr_context(path: str | Path, model_path_globs: list[str] | tuple[str, ...] = ("models/**",)) -> PullRequestContext:
    """Read a PR snapshot and resolve its card references.

    ``model_artifact_changed`` is derived from ``changed_paths`` and the
    given globs.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(path, exc.strerror or str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ParseError(path, f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise SnapshotSchemaViolation(path, "$", "snapshot must be a JSON object")
    for key in _SNAPSHOT_REQUIRED:
        if key not in raw:
            raise SnapshotSchemaViolation(path, key, "required field missing")
    if not isinstance(raw["pr_id"], str) or not raw["pr_id"]:
        raise SnapshotSchemaViolation(path, "pr_id", "expected a non-empty string")
    if raw["phase"] not in PHASES:
        raise SnapshotSchemaViolation(path, "phase", f"expected one of {', '.join(PHASES)}")

    def records(key: str, fields: tuple[str, str], cls: type) -> list[Any]:
        value = raw[key]
        if not isinstance(value, list):
            raise SnapshotSchemaViolation(path, key, "expected an array")
        out = []
        for i, r in enumerate(value):
            if not isinstance(r, dict) or not all(isinstance(r.get(f), str) for f in fields):
                raise SnapshotSchemaViolation(path, f"{key}[{i}]", f"expected object with string fields {fields}")
            try:
                out.append(cls(*(r[f] for f in fields)))
            except ValueError as exc:
                raise SnapshotSchemaViolation(path, f"{key}[{i}]", str(exc)) from None
        return out

    changed = _str_list(raw, "changed_paths", path)
    cards: dict[str, ModelCard | None] = {}
    for key in ("card_old_path", "card_new_path"):
        ref = raw.get(key)
        if ref is None:
            cards[key] = None
        elif not isinstance(ref, str):
            raise SnapshotSchemaViolation(path, key, "expected a string path")
        else:
            cards[key] = load_card(path.parent / ref)

    return PullRequestContext(
        pr_id=raw["pr_id"],
        phase=raw["phase"],
        linked_requirements=_str_list(raw, "linked_requirements", path),
        changed_paths=changed,
        model_artifact_changed=any(pathglob.match_any(list(model_path_globs), p) for p in changed),
        card_old=cards["card_old_path"],
        card_new=cards["card_new_path"],
        test_results=records("test_results", ("test_case_id", "status"), TestResult),
        approvals=records("approvals", ("reviewer", "role"), Approval),
        labels=_str_list(raw, "labels", path),
    )


@dataclass
class ScanConfig:
    trace_dir: str = "trace"
    pr_dir: str = "prs"
    card_globs: list[str] = field(default_factory=lambda: ["**/modelcard.json", "**/*.modelcard.json"])
    model_path_globs: list[str] = field(default_factory=lambda: ["models/**"])
    exclude_dirs: list[str] = field(default_factory=lambda: ["reports", ".git"])


@dataclass
class RepoSnapshot:
    root: Path
    trace_items: list[TraceItem] = field(default_factory=list)
    cards: list[tuple[str, ModelCard]] = field(default_factory=list)
    pr_contexts: list[PullRequestContext] = field(default_factory=list)
    errors: list[IngestError | TraceError] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _rel(path: Path, root: Path) -> str:
    return path.relative_to(root).as_posix()


def scan_repo(root: str | Path, config: ScanConfig | None = None) -> RepoSnapshot:
    """Load everything under ``root``, collecting errors instead of stopping."""
    config = config or ScanConfig()
    root = Path(root)
    snap = RepoSnapshot(root=root)

    trace_dir = root / config.trace_dir
    if trace_dir.is_dir():
        seen: dict[str, Path] = {}
        for path in _trace_files(trace_dir):
            try:
                items = load_trace_file(path)
            except (IngestError, TraceError) as exc:
                snap.errors.append(exc)
                continue
            for item in items:
                if item.id in seen:
                    snap.errors.append(DuplicateId(item.id, f"defined in {seen[item.id]} and {path}"))
                    continue
                seen[item.id] = path
                snap.trace_items.append(item)
        snap.trace_items.sort(key=lambda it: it.id)
    else:
        snap.warnings.append(f"{config.trace_dir}/ not found under {root}; no trace items loaded")

    for path in sorted(p for p in root.rglob("*.json") if p.is_file()):
        rel = _rel(path, root)
        if any(part in config.exclude_dirs for part in Path(rel).parts[:-1]):
            continue
        if not pathglob.match_any(config.card_globs, rel):
            continue
        try:
            card = load_card(path)
        except ParseError as exc:
            snap.errors.append(exc)
            continue
        report = validate_card(card, "structural")
        if not report.passed:
            snap.errors.append(ParseError(path, "structural validation failed: " + ", ".join(report.codes("error"))))
            continue
        snap.cards.append((rel, card))

    pr_dir = root / config.pr_dir
    if pr_dir.is_dir():
        for path in sorted(pr_dir.glob("*.json")):
            try:
                snap.pr_contexts.append(load_pr_context(path, config.model_path_globs))
            except IngestError as exc:
                snap.errors.append(exc)
    return snap
