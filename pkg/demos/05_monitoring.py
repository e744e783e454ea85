"""Post-market monitoring: rolling accuracy, edge-triggered drops, feedback stubs."""

from __future__ import annotations

import random

from designctl.ingest import load_card, load_trace_items
from designctl.monitor import DriftConfig, PredictionEvent, detect_deviation, rolling_stats, to_feedback
from designctl.monitor import write_feedback_stubs

from _repo import scratch_repo

root = scratch_repo()
card = load_card(root / "models" / "modelcard.json")
rng = random.Random(0)

# %% A synthetic stream: 90% correct, then 60% from seq 500 on.
events = []
for seq in range(1000):
    p = 0.9 if seq < 500 else 0.6
    actual = "revision" if rng.random() < p else "no_revision"
    events.append(PredictionEvent(seq, f"2026-10-01T{seq // 3600:02d}:{seq // 60 % 60:02d}:{seq % 60:02d}Z",
                                  "revision", 0.82, actual))

# %% Rolling windows and deviations against the card's baseline metrics.
cfg = DriftConfig(window=100, accuracy_tolerance=0.10, min_labeled=50)
series = rolling_stats(events, cfg.window)
print("accuracy every 100 events:", [round(s.accuracy, 2) for s in series[::100]])
deviations = detect_deviation(series, card.quantitative_analysis, cfg)
for d in deviations:
    print(f"{d.kind} at window ending {d.window_end_seq}: observed {d.observed:.2f}, baseline {d.baseline:.2f}")

# %% Deviations become requirement stubs that the trace loader reads back.
stubs = write_feedback_stubs(to_feedback(deviations), root / "trace" / "inbox")
print([p.name for p in stubs])
print([(i.id, i.kind) for i in load_trace_items(root / "trace" / "inbox")])
