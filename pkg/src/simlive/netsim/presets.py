"""Topology presets: built-in layouts plus user-supplied JSON files.

File schema: {"name": str, "nodes": [{"id": int, "x": num, "y": num,
"sink": bool}]}.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .model import InvalidTopology, Topology, TopologyNode, UnknownPreset

_BUILTIN = ("line", "grid", "star")


def builtin_preset_names() -> tuple[str, ...]:
    return _BUILTIN


def _parse(doc: dict, origin: str) -> Topology:
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise InvalidTopology(f"{origin}: expected an object with a 'nodes' list")
    name = doc.get("name", origin)
    nodes = []
    for i, raw in enumerate(doc["nodes"]):
        try:
            nodes.append(TopologyNode(int(raw["id"]), float(raw["x"]),
                                      float(raw["y"]), bool(raw.get("sink", False))))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidTopology(f"{origin}: bad node entry #{i}: {exc}") from exc
    return Topology(str(name), nodes).validate()


def load_preset(name: str) -> Topology:
    """Load a built-in preset by name."""
    if name not in _BUILTIN:
        raise UnknownPreset(name)
    text = resources.files("simlive").joinpath(f"presets/{name}.json").read_text("utf-8")
    return _parse(json.loads(text), name)


def load_topology_file(path: str | Path) -> Topology:
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except FileNotFoundError:
        raise UnknownPreset(str(path)) from None
    except json.JSONDecodeError as exc:
        raise InvalidTopology(f"{path}: not valid JSON: {exc}") from exc
    return _parse(doc, path.stem)


def resolve_topology(name_or_path: str) -> Topology:
    """Accept a built-in preset name or a path to a topology JSON file."""
    if name_or_path in _BUILTIN:
        return load_preset(name_or_path)
    if name_or_path.endswith(".json") or "/" in name_or_path:
        return load_topology_file(name_or_path)
    raise UnknownPreset(name_or_path)
