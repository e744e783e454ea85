"""Deterministic Markdown documents rendered from the model card, the trace
matrix, gate verdicts and provenance chains."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..findings import Finding
from ..gatekeeper import GateVerdict
from ..modelcard import ModelCard, canonical
from ..provenance import Chain, Digest
from ..traceability import TraceMatrix
from .render import (
    NONE,
    ConsiderationsMissing,
    ProfileInsufficient,
    ReportError,
    render_clinical_validation_report,
    render_model_card,
    render_risk_report,
    render_trace_matrix,
)

DOCUMENTS = {
    "model_card_md": "model_card.md",
    "clinical_validation_md": "clinical_validation.md",
    "risk_report_md": "risk_report.md",
    "trace_matrix_md": "trace_matrix.md",
}
MANIFEST = "manifest.json"


@dataclass
class ReportBundle:
    model_card_md: str
    trace_matrix_md: str
    clinical_validation_md: str | None = None
    risk_report_md: str | None = None
    skipped: dict[str, str] = field(default_factory=dict)

    def documents(self) -> dict[str, bytes]:
        out = {}
        for attr, filename in DOCUMENTS.items():
            text = getattr(self, attr)
            if text is not None:
                out[filename] = text.encode("utf-8")
        return dict(sorted(out.items()))

    @property
    def manifest(self) -> dict[str, Digest]:
        return {name: Digest(canonical.sha256_hex(data)) for name, data in self.documents().items()}

    def manifest_json(self) -> bytes:
        return canonical.canonical_bytes({k: v.to_dict() for k, v in self.manifest.items()}) + b"\n"


def build_bundle(
    card: ModelCard,
    matrix: TraceMatrix,
    verdicts: Sequence[GateVerdict] = (),
    chain: Chain = (),
    findings: Sequence[Finding] = (),
    audience: str = "internal",
    thresholds: dict[str, float] | None = None,
) -> ReportBundle:
    """Render every document that the inputs support.

    The clinical validation report needs a release-profile card and at least
    one verdict, the risk report needs considerations; documents that cannot
    be produced are listed in ``skipped`` with the reason.
    """
    bundle = ReportBundle(
        model_card_md=render_model_card(card, audience),
        trace_matrix_md=render_trace_matrix(matrix),
    )
    try:
        bundle.clinical_validation_md = render_clinical_validation_report(
            card, matrix, verdicts, list(chain), findings, thresholds)
    except ReportError as exc:
        bundle.skipped["clinical_validation.md"] = str(exc)
    try:
        bundle.risk_report_md = render_risk_report(card)
    except ConsiderationsMissing as exc:
        bundle.skipped["risk_report.md"] = str(exc)
    return bundle


def _safe_dirname(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("._") or "unversioned"


def write_bundle(bundle: ReportBundle, out_root: str | Path, card_version: str) -> Path:
    """Write ``<out_root>/<card_version>/{*.md, manifest.json}``; returns that directory."""
    target = Path(out_root) / _safe_dirname(card_version)
    target.mkdir(parents=True, exist_ok=True)
    for name, data in bundle.documents().items():
        (target / name).write_bytes(data)
    for filename in DOCUMENTS.values():
        if filename not in bundle.documents() and (target / filename).exists():
            (target / filename).unlink()
    (target / MANIFEST).write_bytes(bundle.manifest_json())
    return target


def verify_manifest(directory: str | Path) -> list[str]:
    """Names whose bytes do not match the manifest (missing files included)."""
    directory = Path(directory)
    manifest = canonical.loads((directory / MANIFEST).read_bytes())
    bad = []
    for name, digest in sorted(manifest.items()):
        path = directory / name
        if not path.is_file() or canonical.sha256_hex(path.read_bytes()) != Digest.parse(digest).hex:
            bad.append(name)
    return bad


__all__ = [
    "NONE", "DOCUMENTS", "MANIFEST",
    "ReportBundle", "ReportError", "ProfileInsufficient", "ConsiderationsMissing",
    "build_bundle", "write_bundle", "verify_manifest",
    "render_model_card", "render_clinical_validation_report", "render_risk_report", "render_trace_matrix",
]
