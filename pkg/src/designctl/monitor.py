"""Post-market monitoring of a locked model.

Rolling accuracy and mean confidence over a fixed window of prediction
events are compared against the baseline recorded in the model card's
quantitative analysis. Threshold crossings are edge-triggered: one
deviation per excursion, re-armed only after the signal recovers.
Deviations become feedback items, which serialize as requirement stubs
for the trace inbox. Nothing here touches the card or the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Iterable

import numpy as np
import yaml

from .modelcard import QuantitativeAnalysis
from .traceability import TraceItem

ACCURACY_METRIC = "accuracy"
CONFIDENCE_METRIC = "mean_confidence"


class MonitorError(ValueError):
    pass


class InvalidEvent(MonitorError):
    pass


class BaselineMissing(MonitorError):
    pass


@dataclass(frozen=True)
class PredictionEvent:
    seq: int
    timestamp: str
    predicted: str
    confidence: float
    actual: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.seq, bool) or not isinstance(self.seq, int) or self.seq < 0:
            raise InvalidEvent(f"seq must be a non-negative integer, got {self.seq!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidEvent(f"seq {self.seq}: confidence {self.confidence} outside [0, 1]")

    @property
    def labeled(self) -> bool:
        return self.actual is not None

    @property
    def correct(self) -> bool:
        return self.actual is not None and self.actual == self.predicted

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> PredictionEvent:
        try:
            return cls(
                seq=raw["seq"],
                timestamp=str(raw.get("timestamp", "")),
                predicted=str(raw["predicted"]),
                confidence=float(raw["confidence"]),
                actual=None if raw.get("actual") is None else str(raw["actual"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidEvent):
                raise
            raise InvalidEvent(f"bad event {raw!r}: {exc}") from None


def read_events(stream: IO[str]) -> list[PredictionEvent]:
    events = []
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidEvent(f"line {lineno}: {exc.msg}") from None
        try:
            events.append(PredictionEvent.from_dict(raw))
        except InvalidEvent as exc:
            raise InvalidEvent(f"line {lineno}: {exc}") from None
    return events


@dataclass(frozen=True)
class DriftConfig:
    window: int = 100
    accuracy_tolerance: float = 0.05
    confidence_tolerance: float = 0.05
    min_labeled: int = 30

    def __post_init__(self) -> None:
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.min_labeled <= 0 or self.min_labeled > self.window:
            raise ValueError("min_labeled must be in [1, window]")
        for name in ("accuracy_tolerance", "confidence_tolerance"):
            tol = getattr(self, name)
            if not 0.0 < tol <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")


@dataclass(frozen=True)
class WindowStats:
    end_seq: int
    accuracy: float | None  # None when the window holds no labeled event
    mean_confidence: float
    labeled_count: int

    def to_dict(self) -> dict[str, Any]:
        return {"end_seq": self.end_seq, "accuracy": self.accuracy,
                "mean_confidence": self.mean_confidence, "labeled_count": self.labeled_count}


def rolling_stats(events: list[PredictionEvent], window: int) -> list[WindowStats]:
    """One point per full trailing window; a window longer than the stream yields ``[]``."""
    if window <= 0:
        raise ValueError("window must be positive")
    for prev, cur in zip(events, events[1:]):
        if cur.seq <= prev.seq:
            raise InvalidEvent(f"seq must strictly increase: {prev.seq} then {cur.seq}")
    n = len(events)
    if window > n:
        return []
    conf = np.fromiter((e.confidence for e in events), dtype=float, count=n)
    labeled = np.concatenate(([0], np.cumsum([e.labeled for e in events])))
    correct = np.concatenate(([0], np.cumsum([e.correct for e in events])))
    means = np.clip(np.lib.stride_tricks.sliding_window_view(conf, window).mean(axis=1), 0.0, 1.0)
    out = []
    for k, end in enumerate(range(window, n + 1)):
        n_lab = int(labeled[end] - labeled[end - window])
        n_ok = int(correct[end] - correct[end - window])
        out.append(WindowStats(
            end_seq=events[end - 1].seq,
            accuracy=n_ok / n_lab if n_lab else None,
            mean_confidence=float(means[k]),
            labeled_count=n_lab,
        ))
    return out


@dataclass(frozen=True)
class Deviation:
    kind: str  # accuracy_drop | confidence_drop
    window_end_seq: int
    observed: float
    baseline: float

    @property
    def delta(self) -> float:
        return self.baseline - self.observed

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "window_end_seq": self.window_end_seq,
                "observed": self.observed, "baseline": self.baseline, "delta": self.delta}


def _baseline(qa: QuantitativeAnalysis | None, mtype: str) -> float | None:
    if qa is None:
        return None
    m = qa.metric(mtype)
    if m is None:
        m = next((m for m in qa.performance_metrics if m.type == mtype), None)
    return None if m is None else float(m.value)


def detect_deviation(series: Iterable[WindowStats], baseline: QuantitativeAnalysis | None,
                     config: DriftConfig) -> list[Deviation]:
    """Edge-triggered drops of rolling accuracy/confidence below the card baseline.

    The accuracy reference is the card's ``accuracy`` metric; confidence is
    only monitored when the card also records ``mean_confidence``. Points
    with fewer than ``min_labeled`` labels leave the accuracy state as is.
    """
    acc_base = _baseline(baseline, ACCURACY_METRIC)
    if acc_base is None:
        raise BaselineMissing("model card records no accuracy metric")
    conf_base = _baseline(baseline, CONFIDENCE_METRIC)

    out: list[Deviation] = []
    acc_low = conf_low = False
    for point in series:
        if point.accuracy is not None and point.labeled_count >= config.min_labeled:
            below = acc_base - point.accuracy > config.accuracy_tolerance
            if below and not acc_low:
                out.append(Deviation("accuracy_drop", point.end_seq, point.accuracy, acc_base))
            acc_low = below
        if conf_base is not None:
            below = conf_base - point.mean_confidence > config.confidence_tolerance
            if below and not conf_low:
                out.append(Deviation("confidence_drop", point.end_seq, point.mean_confidence, conf_base))
            conf_low = below
    return out


_FEEDBACK_KIND = {"accuracy_drop": "model_drift", "confidence_drop": "concept_drift_suspect"}
_SIGNAL = {"accuracy_drop": "accuracy", "confidence_drop": "mean confidence"}


@dataclass(frozen=True)
class FeedbackItem:
    id: str
    kind: str  # model_drift | concept_drift_suspect
    evidence: tuple[Deviation, ...]
    proposed_requirement_title: str

    def to_trace_item(self) -> TraceItem:
        return TraceItem(id=self.id, kind="requirement", title=self.proposed_requirement_title)

    def to_markdown(self) -> str:
        front = {"id": self.id, "kind": "requirement", "title": self.proposed_requirement_title, "links": []}
        lines = [
            "---",
            yaml.safe_dump(front, sort_keys=True, allow_unicode=True).rstrip("\n"),
            "---",
            "",
            f"Post-market feedback ({self.kind}). Root-cause analysis pending.",
            "",
            "| signal | window end seq | observed | baseline | delta |",
            "|---|---|---|---|---|",
        ]
        for d in self.evidence:
            lines.append(f"| {_SIGNAL[d.kind]} | {d.window_end_seq} | {d.observed:.4f} | {d.baseline:.4f} | {d.delta:.4f} |")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "kind": self.kind, "evidence": [d.to_dict() for d in self.evidence],
                "proposed_requirement_title": self.proposed_requirement_title}


def to_feedback(deviations: Iterable[Deviation], prefix: str = "FB") -> list[FeedbackItem]:
    """Group runs of same-kind deviations into one feedback item each."""
    groups: list[list[Deviation]] = []
    for d in deviations:
        if groups and groups[-1][0].kind == d.kind:
            groups[-1].append(d)
        else:
            groups.append([d])
    items = []
    for group in groups:
        first = group[0]
        worst = min(group, key=lambda d: d.observed)
        kind = _FEEDBACK_KIND[first.kind]
        title = (f"Investigate {kind.replace('_', ' ')}: {_SIGNAL[first.kind]} {worst.observed:.4f} "
                 f"below baseline {first.baseline:.4f} (from seq {first.window_end_seq})")
        items.append(FeedbackItem(
            id=f"{prefix}-{kind.upper().replace('_', '-')}-{first.window_end_seq}",
            kind=kind,
            evidence=tuple(group),
            proposed_requirement_title=title,
        ))
    return items


def write_feedback_stubs(items: Iterable[FeedbackItem], inbox: str | Path) -> list[Path]:
    inbox = Path(inbox)
    inbox.mkdir(parents=True, exist_ok=True)
    written = []
    for item in items:
        path = inbox / f"{item.id}.md"
        path.write_text(item.to_markdown(), encoding="utf-8")
        written.append(path)
    return written
