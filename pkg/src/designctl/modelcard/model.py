"""Model-card document types and the JSON parser/serializer.

The field inventory follows the TensorFlow model-card schema names
(``model_details``, ``model_parameters.data[]``, ``quantitative_analysis``,
``considerations``) plus the regulatory extensions ``x_sources``,
``x_parameters`` and ``x_regulatory``. Unknown ``x_``-prefixed keys are kept
verbatim on the object that carried them; other unknown keys are dropped and
reported through :attr:`ModelCard.warnings`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Callable

from . import canonical
from .canonical import MalformedJson

SCHEMA_VERSION = "1.0.0"

DATASET_ROLES = ("train", "test")
SOURCE_KINDS = ("clinical_registry", "export_file", "database", "other")
RISK_CATEGORIES = ("input_data", "algorithm_design", "output_decisions")
VISIBILITY_LEVELS = ("public", "private")

_SEMVER_RE = re.compile(r"^(0|[1-9]\d*)\.(0|[1-9]\d*)\.(0|[1-9]\d*)$")
_HEX64_RE = re.compile(r"^[0-9a-f]{64}$")


class SchemaViolation(ValueError):
    """A required field is missing, has the wrong type, or breaks an invariant."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class ParseWarning:
    code: str
    path: str
    message: str


@dataclass
class Owner:
    name: str
    role: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class Version:
    name: str
    date: str | None = None
    diff: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class ModelDetails:
    name: str
    documentation: str | None = None
    version: Version | None = None
    owners: list[Owner] | None = None
    license: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class DataSource:
    id: str
    kind: str
    description: str | None = None
    digest: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class Dataset:
    name: str
    role: str
    description: str | None = None
    x_sources: list[DataSource] | None = None
    digest: str | None = None
    record_digests: list[str] | None = None
    record_count: int | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class Parameter:
    name: str
    value: float | int | str
    valid_range: tuple[float, float] | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class ModelParameters:
    data: list[Dataset]
    model_format: str | None = None
    x_parameters: list[Parameter] | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def datasets(self, role: str) -> list[Dataset]:
        return [d for d in self.data if d.role == role]


@dataclass
class Metric:
    type: str
    value: float
    slice: str | None = None
    threshold: float | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class QuantitativeAnalysis:
    performance_metrics: list[Metric]
    evaluation_context: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def metric(self, type_: str, slice_: str | None = None) -> Metric | None:
        for m in self.performance_metrics:
            if m.type == type_ and m.slice == slice_:
                return m
        return None


@dataclass
class Risk:
    name: str
    category: str
    mitigation: str | None = None
    requirement_ref: str | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class Considerations:
    limitations: list[str] | None = None
    tradeoffs: list[str] | None = None
    ethical_considerations: list[str] | None = None
    risks: list[Risk] | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class RegulatoryExtension:
    intended_use: str | None = None
    clinical_evaluation: str | None = None
    resource_requirements: list[str] | None = None
    visibility: dict[str, str] | None = None
    redacted: list[str] | None = None
    extras: dict[str, Any] = field(default_factory=dict)


@dataclass
class ModelCard:
    schema_version: str
    model_details: ModelDetails
    model_parameters: ModelParameters
    quantitative_analysis: QuantitativeAnalysis | None = None
    considerations: Considerations | None = None
    x_regulatory: RegulatoryExtension | None = None
    extras: dict[str, Any] = field(default_factory=dict)
    warnings: list[ParseWarning] = field(default_factory=list, compare=False)

    def to_dict(self) -> dict[str, Any]:
        return _card_to_dict(self)

    def canonical_bytes(self) -> bytes:
        return canonical.canonical_bytes(self.to_dict())


# -- reading -----------------------------------------------------------------


class _Obj:
    """Typed accessor over one JSON object that tracks which keys were used."""

    def __init__(self, raw: Any, path: str, warnings: list[ParseWarning]):
        if not isinstance(raw, dict):
            raise SchemaViolation(path or "$", f"expected object, got {_jtype(raw)}")
        self.raw = raw
        self.path = path
        self.warnings = warnings
        self.known: set[str] = set()

    def sub(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, check: Callable[[Any, str], Any], required: bool = False) -> Any:
        self.known.add(key)
        if key not in self.raw:
            if required:
                raise SchemaViolation(self.sub(key), "required field missing")
            return None
        return check(self.raw[key], self.sub(key))

    def obj(self, key: str, required: bool = False) -> _Obj | None:
        self.known.add(key)
        if key not in self.raw:
            if required:
                raise SchemaViolation(self.sub(key), "required field missing")
            return None
        return _Obj(self.raw[key], self.sub(key), self.warnings)

    def objs(self, key: str, required: bool = False) -> list[_Obj] | None:
        items = self.get(key, _list, required)
        if items is None:
            return None
        return [_Obj(v, f"{self.sub(key)}[{i}]", self.warnings) for i, v in enumerate(items)]

    def extras(self) -> dict[str, Any]:
        out = {}
        for key, value in self.raw.items():
            if key in self.known:
                continue
            if key.startswith("x_"):
                out[key] = value
            else:
                self.warnings.append(
                    ParseWarning("UNKNOWN_FIELD", self.sub(key), f"unknown field {key!r} ignored")
                )
        return out


def _jtype(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "array"
    return "object"


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaViolation(path, f"expected string, got {_jtype(value)}")
    return value


def _nonempty_str(value: Any, path: str) -> str:
    if not _str(value, path):
        raise SchemaViolation(path, "must be a non-empty string")
    return value


def _number(value: Any, path: str) -> float | int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(path, f"expected number, got {_jtype(value)}")
    if isinstance(value, float) and not math.isfinite(value):
        raise SchemaViolation(path, "number must be finite")
    return value


def _count(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise SchemaViolation(path, "expected non-negative integer")
    return value


def _list(value: Any, path: str) -> list[Any]:
    if not isinstance(value, list):
        raise SchemaViolation(path, f"expected array, got {_jtype(value)}")
    return value


def _str_list(value: Any, path: str) -> list[str]:
    return [_str(v, f"{path}[{i}]") for i, v in enumerate(_list(value, path))]


def _enum(choices: tuple[str, ...]) -> Callable[[Any, str], str]:
    def check(value: Any, path: str) -> str:
        if value not in choices:
            raise SchemaViolation(path, f"expected one of {', '.join(choices)}; got {value!r}")
        return value

    return check


def _semver(value: Any, path: str) -> str:
    if not _SEMVER_RE.match(_str(value, path)):
        raise SchemaViolation(path, f"not a MAJOR.MINOR.PATCH version: {value!r}")
    return value


def _iso_date(value: Any, path: str) -> str:
    try:
        date.fromisoformat(_str(value, path))
    except ValueError:
        raise SchemaViolation(path, f"not an ISO-8601 date: {value!r}") from None
    return value


def _hex64(value: Any, path: str) -> str:
    if not _HEX64_RE.match(_str(value, path)):
        raise SchemaViolation(path, "expected 64-char lowercase hex digest")
    return value


def _visibility(value: Any, path: str) -> dict[str, str]:
    if not isinstance(value, dict):
        raise SchemaViolation(path, f"expected object, got {_jtype(value)}")
    check = _enum(VISIBILITY_LEVELS)
    return {k: check(v, f"{path}[{k!r}]") for k, v in value.items()}


def _read_source(o: _Obj) -> DataSource:
    src = DataSource(
        id=o.get("id", _nonempty_str, required=True),
        kind=o.get("kind", _enum(SOURCE_KINDS), required=True),
        description=o.get("description", _str),
        digest=o.get("digest", _hex64),
    )
    src.extras = o.extras()
    return src


def _read_dataset(o: _Obj) -> Dataset:
    sources = o.objs("x_sources")
    ds = Dataset(
        name=o.get("name", _nonempty_str, required=True),
        role=o.get("role", _enum(DATASET_ROLES), required=True),
        description=o.get("description", _str),
        x_sources=None if sources is None else [_read_source(s) for s in sources],
        digest=o.get("digest", _hex64),
        record_digests=None,
        record_count=o.get("record_count", _count),
    )
    digests = o.get("record_digests", _list)
    if digests is not None:
        ds.record_digests = [_hex64(d, f"{o.sub('record_digests')}[{i}]") for i, d in enumerate(digests)]
        for i in range(1, len(digests)):
            if digests[i - 1] >= digests[i]:
                raise SchemaViolation(
                    o.sub("record_digests"), f"must be sorted and duplicate-free (index {i})"
                )
        if ds.record_count is not None and ds.record_count != len(digests):
            raise SchemaViolation(
                o.sub("record_count"),
                f"record_count {ds.record_count} != {len(digests)} record_digests",
            )
    ds.extras = o.extras()
    return ds


def _read_parameter(o: _Obj) -> Parameter:
    def value_check(value: Any, path: str) -> float | int | str:
        if isinstance(value, str):
            return value
        return _number(value, path)

    def range_check(value: Any, path: str) -> tuple[float, float]:
        items = _list(value, path)
        if len(items) != 2:
            raise SchemaViolation(path, "valid_range must be [min, max]")
        return (_number(items[0], f"{path}[0]"), _number(items[1], f"{path}[1]"))

    p = Parameter(
        name=o.get("name", _nonempty_str, required=True),
        value=o.get("value", value_check, required=True),
        valid_range=o.get("valid_range", range_check),
    )
    p.extras = o.extras()
    return p


def _read_metric(o: _Obj) -> Metric:
    m = Metric(
        type=o.get("type", _nonempty_str, required=True),
        value=o.get("value", _number, required=True),
        slice=o.get("slice", _str),
        threshold=o.get("threshold", _number),
    )
    m.extras = o.extras()
    return m


def _read_risk(o: _Obj) -> Risk:
    r = Risk(
        name=o.get("name", _nonempty_str, required=True),
        category=o.get("category", _enum(RISK_CATEGORIES), required=True),
        mitigation=o.get("mitigation", _str),
        requirement_ref=o.get("requirement_ref", _str),
    )
    r.extras = o.extras()
    return r


def _read_details(o: _Obj) -> ModelDetails:
    version = o.obj("version")
    owners = o.objs("owners")
    d = ModelDetails(
        name=o.get("name", _nonempty_str, required=True),
        documentation=o.get("documentation", _str),
        license=o.get("license", _str),
    )
    if version is not None:
        d.version = Version(
            name=version.get("name", _nonempty_str, required=True),
            date=version.get("date", _iso_date),
            diff=version.get("diff", _str),
        )
        d.version.extras = version.extras()
    if owners is not None:
        d.owners = []
        for ow in owners:
            owner = Owner(name=ow.get("name", _nonempty_str, required=True), role=ow.get("role", _str))
            owner.extras = ow.extras()
            d.owners.append(owner)
    d.extras = o.extras()
    return d


def _read_card(o: _Obj) -> ModelCard:
    card = ModelCard(
        schema_version=o.get("schema_version", _semver, required=True),
        model_details=_read_details(o.obj("model_details", required=True)),
        model_parameters=ModelParameters(data=[]),
    )
    mp = o.obj("model_parameters", required=True)
    card.model_parameters = ModelParameters(
        data=[_read_dataset(d) for d in mp.objs("data", required=True)],
        model_format=mp.get("model_format", _str),
    )
    params = mp.objs("x_parameters")
    if params is not None:
        card.model_parameters.x_parameters = [_read_parameter(p) for p in params]
    card.model_parameters.extras = mp.extras()

    qa = o.obj("quantitative_analysis")
    if qa is not None:
        card.quantitative_analysis = QuantitativeAnalysis(
            performance_metrics=[_read_metric(m) for m in qa.objs("performance_metrics", required=True)],
            evaluation_context=qa.get("evaluation_context", _str),
        )
        card.quantitative_analysis.extras = qa.extras()

    cons = o.obj("considerations")
    if cons is not None:
        risks = cons.objs("risks")
        card.considerations = Considerations(
            limitations=cons.get("limitations", _str_list),
            tradeoffs=cons.get("tradeoffs", _str_list),
            ethical_considerations=cons.get("ethical_considerations", _str_list),
            risks=None if risks is None else [_read_risk(r) for r in risks],
        )
        card.considerations.extras = cons.extras()

    reg = o.obj("x_regulatory")
    if reg is not None:
        card.x_regulatory = RegulatoryExtension(
            intended_use=reg.get("intended_use", _str),
            clinical_evaluation=reg.get("clinical_evaluation", _str),
            resource_requirements=reg.get("resource_requirements", _str_list),
            visibility=reg.get("visibility", _visibility),
            redacted=reg.get("redacted", _str_list),
        )
        card.x_regulatory.extras = reg.extras()

    card.extras = o.extras()
    card.warnings = list(o.warnings)
    return card


def parse_card(data: bytes | str) -> ModelCard:
    """Parse a UTF-8 JSON model-card document.

    Raises :class:`MalformedJson` when the bytes are not JSON and
    :class:`SchemaViolation` (with ``.path``) when the document does not fit
    the card schema.
    """
    raw = canonical.loads(data)
    return card_from_dict(raw)


def card_from_dict(raw: Any) -> ModelCard:
    return _read_card(_Obj(raw, "", []))


# -- writing -----------------------------------------------------------------


def _put(out: dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        out[key] = value


def _source_to_dict(s: DataSource) -> dict[str, Any]:
    out: dict[str, Any] = {"id": s.id, "kind": s.kind}
    _put(out, "description", s.description)
    _put(out, "digest", s.digest)
    out.update(s.extras)
    return out


def _dataset_to_dict(d: Dataset) -> dict[str, Any]:
    out: dict[str, Any] = {"name": d.name, "role": d.role}
    _put(out, "description", d.description)
    if d.x_sources is not None:
        out["x_sources"] = [_source_to_dict(s) for s in d.x_sources]
    _put(out, "digest", d.digest)
    if d.record_digests is not None:
        out["record_digests"] = list(d.record_digests)
    _put(out, "record_count", d.record_count)
    out.update(d.extras)
    return out


def _parameter_to_dict(p: Parameter) -> dict[str, Any]:
    out: dict[str, Any] = {"name": p.name, "value": p.value}
    if p.valid_range is not None:
        out["valid_range"] = list(p.valid_range)
    out.update(p.extras)
    return out


def _metric_to_dict(m: Metric) -> dict[str, Any]:
    out: dict[str, Any] = {"type": m.type, "value": m.value}
    _put(out, "slice", m.slice)
    _put(out, "threshold", m.threshold)
    out.update(m.extras)
    return out


def _risk_to_dict(r: Risk) -> dict[str, Any]:
    out: dict[str, Any] = {"name": r.name, "category": r.category}
    _put(out, "mitigation", r.mitigation)
    _put(out, "requirement_ref", r.requirement_ref)
    out.update(r.extras)
    return out


def _card_to_dict(card: ModelCard) -> dict[str, Any]:
    md = card.model_details
    details: dict[str, Any] = {"name": md.name}
    _put(details, "documentation", md.documentation)
    if md.version is not None:
        version: dict[str, Any] = {"name": md.version.name}
        _put(version, "date", md.version.date)
        _put(version, "diff", md.version.diff)
        version.update(md.version.extras)
        details["version"] = version
    if md.owners is not None:
        details["owners"] = []
        for o in md.owners:
            owner: dict[str, Any] = {"name": o.name}
            _put(owner, "role", o.role)
            owner.update(o.extras)
            details["owners"].append(owner)
    _put(details, "license", md.license)
    details.update(md.extras)

    mp = card.model_parameters
    params: dict[str, Any] = {"data": [_dataset_to_dict(d) for d in mp.data]}
    _put(params, "model_format", mp.model_format)
    if mp.x_parameters is not None:
        params["x_parameters"] = [_parameter_to_dict(p) for p in mp.x_parameters]
    params.update(mp.extras)

    out: dict[str, Any] = {
        "schema_version": card.schema_version,
        "model_details": details,
        "model_parameters": params,
    }
    qa = card.quantitative_analysis
    if qa is not None:
        q: dict[str, Any] = {"performance_metrics": [_metric_to_dict(m) for m in qa.performance_metrics]}
        _put(q, "evaluation_context", qa.evaluation_context)
        q.update(qa.extras)
        out["quantitative_analysis"] = q
    cons = card.considerations
    if cons is not None:
        c: dict[str, Any] = {}
        _put(c, "limitations", cons.limitations)
        _put(c, "tradeoffs", cons.tradeoffs)
        _put(c, "ethical_considerations", cons.ethical_considerations)
        if cons.risks is not None:
            c["risks"] = [_risk_to_dict(r) for r in cons.risks]
        c.update(cons.extras)
        out["considerations"] = c
    reg = card.x_regulatory
    if reg is not None:
        r: dict[str, Any] = {}
        _put(r, "intended_use", reg.intended_use)
        _put(r, "clinical_evaluation", reg.clinical_evaluation)
        _put(r, "resource_requirements", reg.resource_requirements)
        _put(r, "visibility", reg.visibility)
        _put(r, "redacted", reg.redacted)
        r.update(reg.extras)
        out["x_regulatory"] = r
    out.update(card.extras)
    return out


def serialize_card(card: ModelCard) -> bytes:
    """Canonical JSON bytes for ``card``."""
    return card.canonical_bytes()


__all__ = [
    "SCHEMA_VERSION",
    "DATASET_ROLES",
    "SOURCE_KINDS",
    "RISK_CATEGORIES",
    "MalformedJson",
    "SchemaViolation",
    "ParseWarning",
    "Owner",
    "Version",
    "ModelDetails",
    "DataSource",
    "Dataset",
    "Parameter",
    "ModelParameters",
    "Metric",
    "QuantitativeAnalysis",
    "Risk",
    "Considerations",
    "RegulatoryExtension",
    "ModelCard",
    "parse_card",
    "card_from_dict",
    "serialize_card",
]
