"""``designctl`` command line.

stdout carries one canonical JSON document per invocation; diagnostics go
to stderr. Exit codes: 0 success/pass, 1 gate or validation failure,
2 usage, configuration or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Sequence

from . import provenance as prov
from .config import ToolConfig, load_config
from .gatekeeper import ConfigInvalid, GateVerdict, UnknownRule, evaluate_gate, explain_rule
from .ingest import IngestError, load_card, load_pr_context, load_trace_items
from .modelcard import PROFILES, RedactionError, SelectorUnresolved, canonical, redact_card, validate_card
from .monitor import (
    BaselineMissing,
    MonitorError,
    detect_deviation,
    read_events,
    rolling_stats,
    to_feedback,
    write_feedback_stubs,
)
from .reporting import build_bundle, write_bundle
from .traceability import TraceError, TraceGraph, build_graph, check_completeness, check_decomposition, trace_matrix

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(payload: Any) -> None:
    sys.stdout.write(canonical.dumps(payload) + "\n")
    sys.stdout.flush()


def _warn(message: str) -> None:
    print(f"designctl: {message}", file=sys.stderr)


def _graph(directory: Path) -> TraceGraph:
    if not directory.is_dir():
        _warn(f"trace directory {directory} not found; using an empty trace graph")
        return build_graph([])
    return build_graph(load_trace_items(directory))


def _graph_error_code(exc: TraceError) -> str:
    name = type(exc).__name__
    return "".join("_" + c if c.isupper() and i else c for i, c in enumerate(name)).upper()


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args: argparse.Namespace, cfg: ToolConfig) -> int:
    card = load_card(args.card)
    report = validate_card(card, args.profile)
    _emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_trace_check(args: argparse.Namespace, cfg: ToolConfig) -> int:
    directory = Path(args.dir) if args.dir else cfg.trace_dir
    items = load_trace_items(directory)
    try:
        graph = build_graph(items)
    except TraceError as exc:
        _emit({"passed": False, "items": len(items), "findings": [{
            "code": _graph_error_code(exc), "severity": "error", "subject": str(directory), "message": str(exc)}]})
        return EXIT_FAIL
    findings = check_completeness(graph) + check_decomposition(graph)
    passed = not any(f.is_error for f in findings)
    _emit({"passed": passed, "items": len(graph), "findings": [f.to_dict() for f in findings]})
    return EXIT_OK if passed else EXIT_FAIL


def cmd_trace_matrix(args: argparse.Namespace, cfg: ToolConfig) -> int:
    directory = Path(args.dir) if args.dir else cfg.trace_dir
    graph = build_graph(load_trace_items(directory))
    _emit(trace_matrix(graph).to_dict())
    return EXIT_OK


def cmd_gate(args: argparse.Namespace, cfg: ToolConfig) -> int:
    ctx = load_pr_context(args.snapshot, cfg.gate.model_path_globs)
    graph = _graph(Path(args.trace_dir) if args.trace_dir else cfg.trace_dir)
    verdict = evaluate_gate(ctx, graph, cfg.gate)
    payload = verdict.to_json()
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(payload + b"\n")
    _emit(verdict.to_dict())
    return EXIT_OK if verdict.status == "pass" else EXIT_FAIL


def cmd_explain(args: argparse.Namespace, cfg: ToolConfig) -> int:
    _emit({"rule_id": args.rule, "text": explain_rule(args.rule)})
    return EXIT_OK


def _load_verdict(path: str) -> GateVerdict:
    try:
        return GateVerdict.from_dict(canonical.loads(Path(path).read_bytes()))
    except OSError as exc:
        raise UsageError(f"cannot read verdict {path}: {exc.strerror}") from None
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: not a gate verdict ({exc})") from None


def cmd_report(args: argparse.Namespace, cfg: ToolConfig) -> int:
    card = load_card(args.card)
    card_bytes = _read(args.card)
    graph = _graph(Path(args.trace_dir) if args.trace_dir else cfg.trace_dir)
    findings = check_completeness(graph) + check_decomposition(graph)
    verdicts = [_load_verdict(v) for v in args.verdict]

    store_path = Path(args.store) if args.store else cfg.provenance_store
    chain: prov.Chain = []
    if store_path.is_file():
        store = prov.load_store(store_path)
        target = prov.Digest.parse(args.chain_target) if args.chain_target else prov.digest_artifact(card_bytes, "card")
        try:
            chain = prov.verify_chain(store, target)
        except prov.UnknownDigest:
            _warn(f"{target.hex} not in {store_path}; report has no provenance chain")

    bundle = build_bundle(card, trace_matrix(graph), verdicts, chain, findings, args.audience,
                          cfg.gate.metric_thresholds)
    version = card.model_details.version.name if card.model_details.version else "unversioned"
    out_root = Path(args.out_dir) if args.out_dir else cfg.report_dir
    target_dir = write_bundle(bundle, out_root, version)
    for name, reason in sorted(bundle.skipped.items()):
        _warn(f"{name} not rendered: {reason}")
    _emit({
        "directory": target_dir.as_posix(),
        "manifest": {k: v.to_dict() for k, v in bundle.manifest.items()},
        "skipped": bundle.skipped,
    })
    return EXIT_OK


def cmd_redact(args: argparse.Namespace, cfg: ToolConfig) -> int:
    card = load_card(args.card)
    sys.stdout.write(redact_card(card).canonical_bytes().decode("utf-8") + "\n")
    return EXIT_OK


def _store(args: argparse.Namespace, cfg: ToolConfig) -> Path:
    return Path(args.store) if args.store else cfg.provenance_store


def _registry(args: argparse.Namespace, cfg: ToolConfig) -> Path:
    return Path(args.registry) if args.registry else cfg.registry


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _target(value: str, kind: str) -> prov.Digest:
    """A digest given literally, or the digest of an existing file."""
    if Path(value).is_file():
        return prov.digest_artifact(_read(value), kind)
    return prov.Digest.parse(value)


def cmd_prov_digest(args: argparse.Namespace, cfg: ToolConfig) -> int:
    _emit(prov.digest_artifact(_read(args.file), args.kind).to_dict())
    return EXIT_OK


def cmd_prov_record(args: argparse.Namespace, cfg: ToolConfig) -> int:
    path = _store(args, cfg)
    store = prov.load_store(path)
    rec = prov.make_record(
        store,
        prov.digest_artifact(_read(args.file), args.kind),
        args.kind,
        [prov.Digest.parse(p) for p in args.parent],
        note=args.note,
        created_at=args.created_at,
    )
    prov.append_record(path, rec)
    _emit(rec.to_dict())
    return EXIT_OK


def cmd_prov_verify(args: argparse.Namespace, cfg: ToolConfig) -> int:
    store = prov.load_store(_store(args, cfg))
    target = _target(args.digest, args.kind)
    try:
        chain = prov.verify_chain(store, target)
    except prov.ProvenanceError as exc:
        _emit({"verified": False, "target": target.hex, "error": type(exc).__name__, "message": str(exc)})
        return EXIT_FAIL
    _emit({"verified": True, "target": target.hex, "chain": [r.to_dict() for r in chain]})
    return EXIT_OK


def cmd_prov_locked(args: argparse.Namespace, cfg: ToolConfig) -> int:
    registry = prov.load_registry(_registry(args, cfg))
    finding = prov.check_locked(_target(args.digest, "model"), registry)
    _emit({"locked": finding is None, "findings": [] if finding is None else [finding.to_dict()]})
    return EXIT_OK if finding is None else EXIT_FAIL


def cmd_prov_register(args: argparse.Namespace, cfg: ToolConfig) -> int:
    path = _registry(args, cfg)
    model = prov.digest_artifact(_read(args.model), "model")
    card = prov.digest_artifact(_read(args.card), "card")
    registry = prov.register(prov.load_registry(path), model, card)
    prov.save_registry(path, registry)
    _emit([e.to_dict() for e in registry])
    return EXIT_OK


def cmd_prov_promote(args: argparse.Namespace, cfg: ToolConfig) -> int:
    path = _registry(args, cfg)
    try:
        registry = prov.promote(prov.load_registry(path), prov.Digest.parse(args.digest), args.status)
    except (prov.IllegalTransition, prov.UnknownDigest) as exc:
        _emit({"promoted": False, "message": str(exc)})
        return EXIT_FAIL
    prov.save_registry(path, registry)
    _emit([e.to_dict() for e in registry])
    return EXIT_OK


def cmd_monitor(args: argparse.Namespace, cfg: ToolConfig) -> int:
    card = load_card(args.card)
    if args.events == "-":
        events = read_events(sys.stdin)
    else:
        try:
            with open(args.events, encoding="utf-8") as fh:
                events = read_events(fh)
        except OSError as exc:
            raise UsageError(f"cannot read {args.events}: {exc.strerror}") from None
    deviations = detect_deviation(rolling_stats(events, cfg.drift.window), card.quantitative_analysis, cfg.drift)
    feedback = to_feedback(deviations)
    stubs: list[str] = []
    if feedback and not args.no_stubs:
        inbox = Path(args.inbox) if args.inbox else cfg.trace_dir / "inbox"
        stubs = [p.as_posix() for p in write_feedback_stubs(feedback, inbox)]
    _emit({
        "events": len(events),
        "deviations": [d.to_dict() for d in deviations],
        "feedback": [f.to_dict() for f in feedback],
        "stubs": stubs,
    })
    return EXIT_FAIL if deviations else EXIT_OK


# -- wiring --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="TOML config file (default: $DESIGNCTL_CONFIG or ./designctl.toml)")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output (always on)")

    p = _Parser(prog="designctl", description="Design-control gates for ML in regulated software.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="validate a model card")
    s.add_argument("card")
    s.add_argument("--profile", choices=PROFILES, default="development")
    s.set_defaults(func=cmd_validate)

    t = sub.add_parser("trace", parents=[common], help="traceability checks")
    tsub = t.add_subparsers(dest="trace_command", required=True, parser_class=_Parser)
    tc = tsub.add_parser("check", parents=[common], help="completeness and decomposition findings")
    tc.add_argument("--dir")
    tc.set_defaults(func=cmd_trace_check)
    tm = tsub.add_parser("matrix", parents=[common], help="traceability matrix")
    tm.add_argument("--dir")
    tm.set_defaults(func=cmd_trace_matrix)

    g = sub.add_parser("gate", parents=[common], help="evaluate the pull-request gate")
    g.add_argument("snapshot")
    g.add_argument("--trace-dir")
    g.add_argument("--out", help="also write the verdict to this file")
    g.set_defaults(func=cmd_gate)

    e = sub.add_parser("explain", parents=[common], help="describe a gate rule")
    e.add_argument("rule")
    e.set_defaults(func=cmd_explain)

    r = sub.add_parser("report", parents=[common], help="render the report bundle")
    r.add_argument("card")
    r.add_argument("--audience", choices=("internal", "public"), default="internal")
    r.add_argument("--out-dir")
    r.add_argument("--trace-dir")
    r.add_argument("--verdict", action="append", default=[], help="gate verdict JSON (repeatable)")
    r.add_argument("--store", help="provenance store (JSON lines)")
    r.add_argument("--chain-target", help="digest whose lineage is reported (default: the card)")
    r.set_defaults(func=cmd_report)

    pv = sub.add_parser("provenance", parents=[common], help="lineage and locked-model registry")
    psub = pv.add_subparsers(dest="provenance_command", required=True, parser_class=_Parser)
    pd = psub.add_parser("digest", parents=[common])
    pd.add_argument("file")
    pd.add_argument("--kind", choices=prov.KINDS, default="model")
    pd.set_defaults(func=cmd_prov_digest)
    pr = psub.add_parser("record", parents=[common])
    pr.add_argument("file")
    pr.add_argument("--kind", choices=prov.KINDS, required=True)
    pr.add_argument("--parent", action="append", default=[])
    pr.add_argument("--note", default="")
    pr.add_argument("--created-at")
    pr.add_argument("--store")
    pr.set_defaults(func=cmd_prov_record)
    pvv = psub.add_parser("verify", parents=[common])
    pvv.add_argument("digest", help="digest, or a file to digest")
    pvv.add_argument("--kind", choices=prov.KINDS, default="card", help="how a file argument is hashed")
    pvv.add_argument("--store")
    pvv.set_defaults(func=cmd_prov_verify)
    pl = psub.add_parser("locked", parents=[common])
    pl.add_argument("digest", help="deployed model digest, or the model file")
    pl.add_argument("--registry")
    pl.set_defaults(func=cmd_prov_locked)
    prg = psub.add_parser("register", parents=[common])
    prg.add_argument("model")
    prg.add_argument("card")
    prg.add_argument("--registry")
    prg.set_defaults(func=cmd_prov_register)
    pp = psub.add_parser("promote", parents=[common])
    pp.add_argument("digest")
    pp.add_argument("status", choices=prov.STATUSES)
    pp.add_argument("--registry")
    pp.set_defaults(func=cmd_prov_promote)

    m = sub.add_parser("monitor", parents=[common], help="detect post-market deviations")
    m.add_argument("events", help="JSON-lines events file, or - for stdin")
    m.add_argument("--card", required=True)
    m.add_argument("--inbox", help="where feedback stubs go (default: <trace_dir>/inbox)")
    m.add_argument("--no-stubs", action="store_true")
    m.set_defaults(func=cmd_monitor)

    d = sub.add_parser("redact", parents=[common], help="print the public (redacted) card")
    d.add_argument("card")
    d.set_defaults(func=cmd_redact)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(getattr(args, "config", None))
        return args.func(args, cfg)
    except UsageError as exc:
        _warn(str(exc))
    except (ConfigInvalid, IngestError, UnknownRule, TraceError, MonitorError, BaselineMissing,
            prov.ProvenanceError, RedactionError, SelectorUnresolved, ValueError) as exc:
        _warn(str(exc))
    except OSError as exc:
        _warn(f"{exc.filename or 'i/o'}: {exc.strerror or exc}")
    return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
