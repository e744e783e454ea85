"""Extended model-card metadata: parsing, validation, diffing, redaction."""

from .canonical import MalformedJson, canonical_bytes, canonicalize
from .diff import CardDiff, diff_cards
from .model import (
    RISK_CATEGORIES,
    SCHEMA_VERSION,
    Considerations,
    DataSource,
    Dataset,
    Metric,
    ModelCard,
    ModelDetails,
    ModelParameters,
    Owner,
    Parameter,
    ParseWarning,
    QuantitativeAnalysis,
    RegulatoryExtension,
    Risk,
    SchemaViolation,
    Version,
    card_from_dict,
    parse_card,
    serialize_card,
)
from .redact import RedactionError, redact_card
from .selectors import SelectorError, SelectorUnresolved
from .validate import PROFILES, RULES, CardFinding, ValidationReport, validate_card

__all__ = [
    "MalformedJson", "canonical_bytes", "canonicalize",
    "CardDiff", "diff_cards",
    "RISK_CATEGORIES", "SCHEMA_VERSION",
    "Considerations", "DataSource", "Dataset", "Metric", "ModelCard", "ModelDetails",
    "ModelParameters", "Owner", "Parameter", "ParseWarning", "QuantitativeAnalysis",
    "RegulatoryExtension", "Risk", "SchemaViolation", "Version",
    "card_from_dict", "parse_card", "serialize_card",
    "RedactionError", "redact_card",
    "SelectorError", "SelectorUnresolved",
    "PROFILES", "RULES", "CardFinding", "ValidationReport", "validate_card",
]
