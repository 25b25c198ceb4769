"""Binds a simulation to its endpoint: RPC catalogue plus stats publishing.

Procedure handlers run on endpoint I/O threads but only inject a command
into the kernel and wait for the simulation thread to apply it, so a RESULT
always means the command took effect (read-after-write works from the UI).
Publishing happens on the simulation thread at window boundaries, gated per
topic on current subscriber counts; with no stats subscribers at all the
simulation records nothing.
"""

from __future__ import annotations

import logging
import threading
from typing import Any, Callable

from .endpoint import DomainError, Endpoint
from .netsim import (
    DropReason, InvalidInterval, InvalidTopology, MoveNode, Reset,
    SetMeanInterval, SetPreset, Simulation, StatsWindow, UnknownNode,
    UnknownPreset,
)
from .schemas import validate_payload

log = logging.getLogger(__name__)

TOPIC_POWER = "stats.power"
TOPIC_PACKETS = "stats.packets"
TOPIC_DROPS = "stats.drops.located"
TOPIC_TOPOLOGY = "topology.changed"
STATS_TOPICS = (TOPIC_POWER, TOPIC_PACKETS, TOPIC_DROPS)

ERR_INVALID_ARGUMENT = "sim.error.invalid_argument"
ERR_UNKNOWN_NODE = "sim.error.unknown_node"
ERR_UNKNOWN_PRESET = "sim.error.unknown_preset"
ERR_UNAVAILABLE = "sim.error.unavailable"

COMMAND_APPLY_TIMEOUT = 5.0


def _arg(args: list, kwargs: dict, index: int, name: str) -> Any:
    if name in kwargs:
        return kwargs[name]
    if index < len(args):
        return args[index]
    raise DomainError(ERR_INVALID_ARGUMENT, f"missing argument {name!r}")


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DomainError(ERR_INVALID_ARGUMENT, f"{name} must be a number")
    return float(value)


class ControlSurface:
    """One simulation's remote control and statistics publisher."""

    def __init__(self, sim: Simulation, endpoint: Endpoint):
        self.sim = sim
        self.endpoint = endpoint
        self._bound = False

    def bind(self) -> "ControlSurface":
        """Register the procedure catalogue and install the stats hooks."""
        ep = self.endpoint
        ep.register("sim.info", self._h_info)
        ep.register("sim.control.reset", self._h_reset)
        ep.register("sim.traffic.set_interval", self._h_set_interval)
        ep.register("sim.topology.move_node", self._h_move_node)
        ep.register("sim.topology.set_preset", self._h_set_preset)
        ep.register("sim.topology.get", self._h_topology_get)
        self.sim.on_window = self.on_window_boundary
        self.sim.on_topology_changed = self._publish_topology
        ep.on_subscription_change = self._on_subscription_change
        self._bound = True
        return self

    # -- command plumbing ---------------------------------------------------------

    def _run_on_sim(self, fn: Callable[[], Any]) -> Any:
        """Inject fn into the kernel and block until it has been applied."""
        done = threading.Event()
        box: dict[str, Any] = {}

        def wrapped():
            try:
                box["value"] = fn()
            except Exception as exc:   # carried back to the calling thread
                box["error"] = exc
            finally:
                done.set()

        self.sim.kernel.inject(wrapped)
        if not done.wait(COMMAND_APPLY_TIMEOUT):
            raise DomainError(ERR_UNAVAILABLE, "simulation loop not responding")
        if "error" in box:
            raise box["error"]
        return box["value"]

    def _apply(self, cmd) -> dict[str, Any]:
        try:
            return self._run_on_sim(lambda: self.sim.apply_command(cmd))
        except UnknownNode as exc:
            raise DomainError(ERR_UNKNOWN_NODE, str(exc)) from exc
        except UnknownPreset as exc:
            raise DomainError(ERR_UNKNOWN_PRESET, str(exc)) from exc
        except (InvalidInterval, InvalidTopology) as exc:
            raise DomainError(ERR_INVALID_ARGUMENT, str(exc)) from exc

    # -- procedure handlers ----------------------------------------------------------

    def _h_info(self, args, kwargs):
        return [self._run_on_sim(self.sim.info)]

    def _h_reset(self, args, kwargs):
        return [self._apply(Reset())]

    def _h_set_interval(self, args, kwargs):
        mean = _number(_arg(args, kwargs, 0, "mean_seconds"), "mean_seconds")
        return [self._apply(SetMeanInterval(mean))]

    def _h_move_node(self, args, kwargs):
        node = _arg(args, kwargs, 0, "id")
        if isinstance(node, bool) or not isinstance(node, int):
            raise DomainError(ERR_INVALID_ARGUMENT, "id must be an integer")
        x = _number(_arg(args, kwargs, 1, "x"), "x")
        y = _number(_arg(args, kwargs, 2, "y"), "y")
        return [self._apply(MoveNode(node, x, y))]

    def _h_set_preset(self, args, kwargs):
        name = _arg(args, kwargs, 0, "name")
        if not isinstance(name, str):
            raise DomainError(ERR_INVALID_ARGUMENT, "name must be a string")
        return [self._apply(SetPreset(name))]

    def _h_topology_get(self, args, kwargs):
        return [self._run_on_sim(self.sim.topology_payload)]

    # -- publishing -------------------------------------------------------------------

    def on_window_boundary(self, window: StatsWindow) -> None:
        """Publish each stats topic that currently has subscribers."""
        ep = self.endpoint
        if ep.subscriber_count(TOPIC_POWER) > 0:
            payload = {
                "window": window.index,
                "total_mw": window.total_mw,
                "per_node": {str(nid): mw
                             for nid, mw in sorted(window.per_node_mw.items())},
            }
            self._publish(TOPIC_POWER, payload)
        if ep.subscriber_count(TOPIC_PACKETS) > 0:
            payload = {
                "window": window.index,
                "generated": window.generated,
                "delivered": window.delivered,
                "drops": {reason.value: window.drops[reason]
                          for reason in DropReason},
            }
            self._publish(TOPIC_PACKETS, payload)
        if ep.subscriber_count(TOPIC_DROPS) > 0:
            payload = {
                "window": window.index,
                "drops": [{"t": r.t, "node": r.node, "x": r.x, "y": r.y,
                           "reason": r.reason.value}
                          for r in window.drop_records],
            }
            self._publish(TOPIC_DROPS, payload)

    def _publish_topology(self, snapshot: dict) -> None:
        self._publish(TOPIC_TOPOLOGY, snapshot)

    def _publish(self, topic: str, payload: dict) -> None:
        validate_payload(topic, payload)
        self.endpoint.publish(topic, [payload])

    # -- recording gate ----------------------------------------------------------------

    def _on_subscription_change(self, topic: str) -> None:
        if topic not in STATS_TOPICS:
            return

        def update():
            stats = any(self.endpoint.subscriber_count(t) > 0
                        for t in STATS_TOPICS)
            drops = self.endpoint.subscriber_count(TOPIC_DROPS) > 0
            self.sim.set_recording(stats, drops)

        self.sim.kernel.inject(update)


def bind(sim: Simulation, endpoint: Endpoint) -> ControlSurface:
    return ControlSurface(sim, endpoint).bind()
