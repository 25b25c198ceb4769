"""Versioned JSON schemas for every published topic payload."""

from __future__ import annotations

import jsonschema

SCHEMA_VERSION = 1

_DROP_REASONS = ["QUEUE_OVERFLOW", "CHANNEL_ACCESS_FAILURE",
                 "RETRY_EXHAUSTED", "NO_ROUTE"]

POWER_SCHEMA = {
    "type": "object",
    "required": ["window", "total_mw", "per_node"],
    "additionalProperties": False,
    "properties": {
        "window": {"type": "integer", "minimum": 0},
        "total_mw": {"type": "number", "minimum": 0},
        "per_node": {
            "type": "object",
            "patternProperties": {r"^\d+$": {"type": "number", "minimum": 0}},
            "additionalProperties": False,
        },
    },
}

PACKETS_SCHEMA = {
    "type": "object",
    "required": ["window", "generated", "delivered", "drops"],
    "additionalProperties": False,
    "properties": {
        "window": {"type": "integer", "minimum": 0},
        "generated": {"type": "integer", "minimum": 0},
        "delivered": {"type": "integer", "minimum": 0},
        "drops": {
            "type": "object",
            "required": _DROP_REASONS,
            "additionalProperties": False,
            "properties": {r: {"type": "integer", "minimum": 0}
                           for r in _DROP_REASONS},
        },
    },
}

DROPS_LOCATED_SCHEMA = {
    "type": "object",
    "required": ["window", "drops"],
    "additionalProperties": False,
    "properties": {
        "window": {"type": "integer", "minimum": 0},
        "drops": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["t", "node", "x", "y", "reason"],
                "additionalProperties": False,
                "properties": {
                    "t": {"type": "number", "minimum": 0},
                    "node": {"type": "integer"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                    "reason": {"enum": _DROP_REASONS},
                },
            },
        },
    },
}

TOPOLOGY_SCHEMA = {
    "type": "object",
    "required": ["name", "preset", "nodes"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "preset": {"type": "string"},
        "nodes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "x", "y", "sink"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer"},
                    "x": {"type": "number"},
                    "y": {"type": "number"},
                    "sink": {"type": "boolean"},
                },
            },
        },
    },
}

TOPIC_SCHEMAS = {
    "stats.power": POWER_SCHEMA,
    "stats.packets": PACKETS_SCHEMA,
    "stats.drops.located": DROPS_LOCATED_SCHEMA,
    "topology.changed": TOPOLOGY_SCHEMA,
}

# compiled once: validation runs on the simulation thread every second
_VALIDATORS = {topic: jsonschema.Draft202012Validator(schema)
               for topic, schema in TOPIC_SCHEMAS.items()}


def validate_payload(topic: str, payload: dict) -> None:
    """Raises jsonschema.ValidationError when a payload breaks its contract."""
    error = next(_VALIDATORS[topic].iter_errors(payload), None)
    if error is not None:
        raise error
