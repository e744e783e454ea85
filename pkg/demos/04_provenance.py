"""Lineage and the locked-model registry."""

from __future__ import annotations

from designctl import provenance as prov
from designctl.ingest import load_card

from _repo import scratch_repo

root = scratch_repo()
card_bytes = (root / "models" / "modelcard.json").read_bytes()
model_bytes = (root / "models" / "risk.onnx").read_bytes()

# %% Walk the card's lineage back to its data source, roots first.
store = prov.load_store(root / "provenance.jsonl")
for rec in prov.verify_chain(store, prov.digest_artifact(card_bytes, "card")):
    print(f"  {rec.kind:<12} {rec.subject.hex[:16]}  {rec.note}")

# %% Train/test overlap by record digest.
leaky = load_card(root / "cards" / "leaky.modelcard.json")
train, test = leaky.model_parameters.data[:2]
overlap = prov.dataset_overlap(train, test, sample_size=3)
print(f"shared records: {overlap.count}; first: {[d[:12] for d in overlap.sample]}")

# %% Registry: register a retrained model, then promote it step by step.
registry = prov.load_registry(root / "registry.json")
retrained = prov.digest_artifact(model_bytes + b"retrained", "model")
registry = prov.register(registry, retrained, prov.digest_artifact(card_bytes, "card"))
try:
    prov.promote(registry, retrained, "deployed_locked")
except prov.IllegalTransition as exc:
    print("refused:", exc)
print("deployed model locked:", prov.check_locked(prov.digest_artifact(model_bytes, "model"), registry) is None)
finding = prov.check_locked(retrained, registry)
print("retrained model:", finding.code, "-", finding.message)
