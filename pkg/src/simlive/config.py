"""Instance configuration: JSON file plus command-line overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .netsim import RadioState, SimParams

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "port": {"type": "integer", "minimum": 0, "maximum": 65535},
        "protocol": {"enum": ["csma", "tdma"]},
        "preset": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "pace": {"type": "number", "exclusiveMinimum": 0},
        "mean_interval_s": {"type": "number", "exclusiveMinimum": 0},
        "label": {"type": "string"},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "queue_capacity": {"type": "integer", "minimum": 1},
                "range_m": {"type": "number", "exclusiveMinimum": 0},
                "airtime_s": {"type": "number", "exclusiveMinimum": 0},
                "tdma_slot_s": {"type": "number", "exclusiveMinimum": 0},
                "power_mw": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "tx": {"type": "number", "minimum": 0},
                        "rx": {"type": "number", "minimum": 0},
                        "sleep": {"type": "number", "minimum": 0},
                    },
                },
            },
        },
    },
}


class ConfigError(Exception):
    pass


@dataclass
class InstanceConfig:
    port: int = 9002
    protocol: str = "csma"
    preset: str = "star"
    seed: int = 1
    pace: float = 1.0
    mean_interval_s: float = 0.5
    label: str | None = None
    param_overrides: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "InstanceConfig":
        doc = {
            "port": self.port, "protocol": self.protocol, "preset": self.preset,
            "seed": self.seed, "pace": self.pace,
            "mean_interval_s": self.mean_interval_s,
        }
        if self.label is not None:
            doc["label"] = self.label
        if self.param_overrides:
            doc["params"] = self.param_overrides
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = ".".join(str(p) for p in exc.absolute_path) or "(top level)"
            raise ConfigError(f"invalid configuration: at {path}: {exc.message}") from exc
        return self

    def sim_params(self) -> SimParams:
        params = SimParams(mean_interval_s=self.mean_interval_s)
        over = self.param_overrides
        for name in ("queue_capacity", "range_m", "airtime_s", "tdma_slot_s"):
            if name in over:
                setattr(params, name, over[name])
        if "power_mw" in over:
            table = dict(params.power_mw)
            mapping = {"tx": RadioState.TX, "rx": RadioState.RX,
                       "sleep": RadioState.SLEEP}
            for key, value in over["power_mw"].items():
                table[mapping[key]] = float(value)
            params.power_mw = table
        return params.validate()

    @property
    def effective_label(self) -> str:
        return self.label if self.label is not None else self.protocol.upper()


def config_from_dict(doc: dict, origin: str = "<config>") -> InstanceConfig:
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise ConfigError(f"{origin}: at {path}: {exc.message}") from exc
    return InstanceConfig(
        port=doc.get("port", 9002),
        protocol=doc.get("protocol", "csma"),
        preset=doc.get("preset", "star"),
        seed=doc.get("seed", 1),
        pace=doc.get("pace", 1.0),
        mean_interval_s=doc.get("mean_interval_s", 0.5),
        label=doc.get("label"),
        param_overrides=doc.get("params", {}),
    )


def load_config(path: str | Path) -> InstanceConfig:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: configuration must be a JSON object")
    return config_from_dict(doc, str(path))
