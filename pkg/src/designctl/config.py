"""Tool configuration from a TOML file.

Lookup order: explicit path, ``$DESIGNCTL_CONFIG``, ``designctl.toml`` in
the working directory, built-in defaults. Relative paths in a config file
resolve against the file's directory.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .gatekeeper import ConfigInvalid, GateConfig
from .monitor import DriftConfig

ENV_VAR = "DESIGNCTL_CONFIG"
DEFAULT_NAME = "designctl.toml"

_TOP_KEYS = {"trace_dir", "report_dir", "pr_dir", "provenance_store", "registry",
             "model_path_globs", "card_globs", "gate", "drift"}
_GATE_KEYS = {"enabled_rules", "required_roles", "model_path_globs", "metric_thresholds", "qa_labels"}
_DRIFT_KEYS = {"window", "accuracy_tolerance", "confidence_tolerance", "min_labeled"}


@dataclass
class ToolConfig:
    gate: GateConfig = field(default_factory=GateConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    model_path_globs: list[str] = field(default_factory=lambda: ["models/**"])
    card_globs: list[str] = field(default_factory=lambda: ["**/modelcard.json", "**/*.modelcard.json"])
    report_dir: Path = Path("reports")
    trace_dir: Path = Path("trace")
    pr_dir: Path = Path("prs")
    provenance_store: Path = Path("provenance.jsonl")
    registry: Path = Path("registry.json")
    source: Path | None = None


def _unknown(section: str, raw: dict[str, Any], allowed: set[str]) -> None:
    extra = sorted(set(raw) - allowed)
    if extra:
        raise ConfigInvalid(f"unknown {section} key(s): {', '.join(extra)}")


def _str_list(raw: dict[str, Any], key: str, default: list[str]) -> list[str]:
    value = raw.get(key, default)
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigInvalid(f"{key} must be a list of strings")
    return list(value)


def parse_config(raw: dict[str, Any], base: Path) -> ToolConfig:
    _unknown("top-level", raw, _TOP_KEYS)
    gate_raw = raw.get("gate", {})
    drift_raw = raw.get("drift", {})
    if not isinstance(gate_raw, dict) or not isinstance(drift_raw, dict):
        raise ConfigInvalid("[gate] and [drift] must be tables")
    _unknown("[gate]", gate_raw, _GATE_KEYS)
    _unknown("[drift]", drift_raw, _DRIFT_KEYS)

    defaults = GateConfig()
    globs = _str_list(raw, "model_path_globs", defaults.model_path_globs)
    thresholds = gate_raw.get("metric_thresholds", {})
    if not isinstance(thresholds, dict) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in thresholds.values()):
        raise ConfigInvalid("[gate.metric_thresholds] values must be numbers")
    gate = GateConfig(
        enabled_rules=_str_list(gate_raw, "enabled_rules", defaults.enabled_rules),
        required_roles=set(_str_list(gate_raw, "required_roles", sorted(defaults.required_roles))),
        model_path_globs=_str_list(gate_raw, "model_path_globs", globs),
        metric_thresholds={k: float(v) for k, v in thresholds.items()},
        qa_labels=_str_list(gate_raw, "qa_labels", defaults.qa_labels),
    )
    gate.check()
    try:
        drift = DriftConfig(**drift_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"[drift]: {exc}") from None

    def path(key: str, default: str) -> Path:
        value = raw.get(key, default)
        if not isinstance(value, str):
            raise ConfigInvalid(f"{key} must be a string path")
        p = Path(value)
        return p if p.is_absolute() else base / p

    return ToolConfig(
        gate=gate,
        drift=drift,
        model_path_globs=globs,
        card_globs=_str_list(raw, "card_globs", ToolConfig().card_globs),
        report_dir=path("report_dir", "reports"),
        trace_dir=path("trace_dir", "trace"),
        pr_dir=path("pr_dir", "prs"),
        provenance_store=path("provenance_store", "provenance.jsonl"),
        registry=path("registry", "registry.json"),
    )


def load_config(path: str | Path | None = None, cwd: Path | None = None) -> ToolConfig:
    """Resolve and parse the configuration; ConfigInvalid on any problem."""
    cwd = cwd or Path.cwd()
    if path is None and os.environ.get(ENV_VAR):
        path = os.environ[ENV_VAR]
    if path is None and (cwd / DEFAULT_NAME).is_file():
        path = cwd / DEFAULT_NAME
    if path is None:
        cfg = parse_config({}, cwd)
        return cfg
    path = Path(path)
    if not path.is_absolute():
        path = cwd / path
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid(f"config file {path} not found") from None
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    cfg = parse_config(raw, path.parent)
    cfg.source = path
    return cfg
