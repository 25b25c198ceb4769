"""Demonstration network model: sensor traffic toward a sink over CSMA or TDMA."""

from .model import (
    DropReason, DropRecord, InvalidParams, InvalidTopology, InvalidInterval,
    Packet, RadioState, SimParams, StatsWindow, Topology, TopologyNode,
    UnknownNode, UnknownPreset,
)
from .presets import builtin_preset_names, load_preset, load_topology_file
from .routing import RoutingTree, compute_routes, link_delivered
from .sim import (
    MoveNode, Reset, SetMeanInterval, SetPreset, Simulation, SimCommand,
)

__all__ = [
    "DropReason", "DropRecord", "InvalidParams", "InvalidTopology",
    "InvalidInterval", "MoveNode", "Packet", "RadioState", "Reset",
    "RoutingTree", "SetMeanInterval", "SetPreset", "SimCommand", "SimParams",
    "Simulation", "StatsWindow", "Topology", "TopologyNode", "UnknownNode",
    "UnknownPreset", "builtin_preset_names", "compute_routes",
    "link_delivered", "load_preset", "load_topology_file",
]
