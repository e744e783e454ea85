"""Model cards: parse, validate per profile, diff versions, redact for the public."""

from __future__ import annotations

from designctl.ingest import load_card
from designctl.modelcard import PROFILES, diff_cards, redact_card, validate_card

from _repo import scratch_repo

root = scratch_repo()
card = load_card(root / "models" / "modelcard.json")
old = load_card(root / "cards" / "modelcard-2.0.0.json")

# %% One card, three profiles. Each profile adds rules to the one before.
for profile in PROFILES:
    report = validate_card(card, profile)
    print(f"{profile:<12} passed={report.passed} findings={len(report.findings)}")

# %% A card with known defects.
bad = validate_card(load_card(root / "bad_card.json"), "release")
for f in bad.findings:
    print(f"  {f.severity:<8} {f.code:<20} {f.path}")

# %% What changed between the released card and its predecessor.
diff = diff_cards(old, card)
print("version changed:", diff.version_changed, "| metrics changed:", diff.metrics_changed)
for path in diff.changed_paths[:8]:
    print("  ", path)

# %% Public copy: private selectors are removed and listed as redacted.
public = redact_card(card)
print("redacted:", public.x_regulatory.redacted)
print("sources left on datasets:", [d.x_sources for d in public.model_parameters.data])
