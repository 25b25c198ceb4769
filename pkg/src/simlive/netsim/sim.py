"""The steerable simulation: traffic, MAC service, power, stats windows.

All state is owned by the kernel loop thread.  External control arrives as
commands injected through the kernel and applied between events; statistics
leave through the on_window callback at whole-second boundaries while
recording is enabled.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Union

from .. import __version__
from ..kernel import Kernel, NS_PER_SEC
from . import presets as presets_mod
from .model import (
    DropReason, DropRecord, InvalidInterval, InvalidTopology, Packet,
    RadioState, SimParams, StatsWindow, TimeRegression, Topology, UnknownNode,
)
from .routing import compute_routes, neighbour_sets

MAC_VARIANTS = ("csma", "tdma")


@dataclass(frozen=True)
class Reset:
    pass


@dataclass(frozen=True)
class SetMeanInterval:
    seconds: float


@dataclass(frozen=True)
class MoveNode:
    node: int
    x: float
    y: float


@dataclass(frozen=True)
class SetPreset:
    name: str


SimCommand = Union[Reset, SetMeanInterval, MoveNode, SetPreset]


class _Node:
    __slots__ = (
        "id", "x", "y", "is_sink", "queue", "radio", "state_entry_ns",
        "win_energy_mj", "win_accounted_ns", "parent", "routed",
        "mean_interval_s", "gen_handle", "traffic_stream", "mac_stream",
        "held", "nb", "be", "slot",
    )

    def __init__(self, nid: int, x: float, y: float, is_sink: bool, entry_ns: int):
        self.id = nid
        self.x = x
        self.y = y
        self.is_sink = is_sink
        self.queue: deque[Packet] = deque()
        self.radio = RadioState.SLEEP
        self.state_entry_ns = entry_ns
        self.win_energy_mj = 0.0
        self.win_accounted_ns = 0
        self.parent: int | None = None
        self.routed = False
        self.mean_interval_s = 0.0
        self.gen_handle = None
        self.traffic_stream = None
        self.mac_stream = None
        self.held: Packet | None = None
        self.nb = 0
        self.be = 0
        self.slot = 0


class _Tx:
    __slots__ = ("sender", "receiver", "corrupted")

    def __init__(self, sender: int, receiver: int):
        self.sender = sender
        self.receiver = receiver
        self.corrupted = False


class Channel:
    """Active transmissions plus the mutual-interference bookkeeping."""

    def __init__(self, sim: "Simulation"):
        self._sim = sim
        self.active: dict[int, _Tx] = {}

    def begin(self, sender: int, receiver: int) -> _Tx:
        tx = _Tx(sender, receiver)
        near = self._sim._neighbours
        for other in self.active.values():
            if other.sender == receiver or other.sender in near[receiver]:
                tx.corrupted = True
            if sender == other.receiver or sender in near[other.receiver]:
                other.corrupted = True
        self.active[sender] = tx
        return tx

    def end(self, sender: int) -> _Tx:
        return self.active.pop(sender)

    def busy_for(self, node_id: int) -> bool:
        near = self._sim._neighbours[node_id]
        return any(tx.sender in near for tx in self.active.values())

    def clear(self) -> None:
        self.active.clear()


class CsmaMac:
    """Unslotted CSMA/CA: random backoff, CCA, turnaround, ACK-less retry."""

    variant = "CSMA"

    def __init__(self, sim: "Simulation"):
        self.sim = sim

    def on_build(self) -> None:
        # contention radios idle in listen; the sink always listens
        for node in self.sim._nodes_sorted:
            self.sim._set_radio(node, RadioState.RX)

    def on_routes_changed(self) -> None:
        pass

    def notify_enqueue(self, node: _Node) -> None:
        if node.held is None:
            self._service(node)

    def _service(self, node: _Node) -> None:
        sim = self.sim
        while node.held is None and node.queue:
            if not node.routed:
                node.queue.popleft()
                sim._drop(node, DropReason.NO_ROUTE)
                continue
            node.held = node.queue.popleft()
            node.nb = 0
            node.be = sim.params.min_be
            self._schedule_backoff(node)

    def _schedule_backoff(self, node: _Node) -> None:
        sim = self.sim
        periods = node.mac_stream.randint(0, (1 << node.be) - 1)
        delay = periods * sim.params.backoff_period_ns
        sim.kernel.schedule(sim.kernel.now() + delay, partial(self._cca, node))

    def _cca(self, node: _Node) -> None:
        sim = self.sim
        if sim.channel.busy_for(node.id):
            node.nb += 1
            if node.nb >= sim.params.max_csma_backoffs:
                self._give_up(node, DropReason.CHANNEL_ACCESS_FAILURE)
            else:
                node.be = min(node.be + 1, sim.params.max_be)
                self._schedule_backoff(node)
            return
        # clear channel: transmission starts after the rx/tx turnaround,
        # which is the window in which two contenders can still collide
        sim.kernel.schedule(sim.kernel.now() + sim.params.turnaround_ns,
                            partial(self._begin_tx, node))

    def _begin_tx(self, node: _Node) -> None:
        sim = self.sim
        if not node.routed:
            self._give_up(node, DropReason.NO_ROUTE)
            return
        sim._set_radio(node, RadioState.TX)
        tx = sim.channel.begin(node.id, node.parent)
        sim.kernel.schedule(sim.kernel.now() + sim.params.airtime_ns,
                            partial(self._end_tx, node, tx))

    def _end_tx(self, node: _Node, tx: _Tx) -> None:
        sim = self.sim
        sim.channel.end(node.id)
        sim._set_radio(node, RadioState.RX)
        delivered = not tx.corrupted and tx.receiver in sim._neighbours[node.id]
        if delivered:   # instantaneous, lossless ACK
            pkt = node.held
            node.held = None
            sim._arrive(pkt, tx.receiver)
            self._service(node)
        elif node.held.retries >= sim.params.max_retries:
            self._give_up(node, DropReason.RETRY_EXHAUSTED)
        else:
            node.held.retries += 1
            node.nb = 0
            node.be = sim.params.min_be
            self._schedule_backoff(node)

    def _give_up(self, node: _Node, reason: DropReason) -> None:
        node.held = None
        self.sim._drop(node, reason)
        self._service(node)


class TdmaMac:
    """Dedicated-slot TDMA: one slot per node id in a repeating superframe.

    A node transmits only inside its own slot (bursting while frames fit),
    sleeps otherwise, and listens during the slots of its routing children.
    Single-transmitter slots make the schedule collision-free.
    """

    variant = "TDMA"

    def __init__(self, sim: "Simulation"):
        self.sim = sim
        self.order: list[int] = []
        self.listen: dict[int, set[int]] = {}

    def on_build(self) -> None:
        self.order = [n.id for n in self.sim._nodes_sorted]
        for index, nid in enumerate(self.order):
            self.sim._nodes[nid].slot = index
        self.on_routes_changed()
        self.sim.kernel.schedule(self.sim.epoch_ns, self._tick)

    def on_routes_changed(self) -> None:
        sim = self.sim
        listen: dict[int, set[int]] = {nid: set() for nid in self.order}
        for node in sim._nodes_sorted:
            if node.routed and node.parent is not None:
                listen[node.parent].add(node.slot)
        self.listen = listen

    def _slot_geometry(self) -> tuple[int, int, int]:
        sim = self.sim
        slot_ns = sim.params.tdma_slot_ns
        gslot = (sim.kernel.now() - sim.epoch_ns) // slot_ns
        s = gslot % len(self.order)
        slot_end = sim.epoch_ns + (gslot + 1) * slot_ns
        return s, slot_end, slot_ns

    def _baseline(self, node: _Node, s: int) -> RadioState:
        return RadioState.RX if s in self.listen[node.id] else RadioState.SLEEP

    def _tick(self) -> None:
        sim = self.sim
        s, slot_end, _ = self._slot_geometry()
        owner_id = self.order[s]
        for node in sim._nodes_sorted:
            if node.held is not None:
                continue    # a transmission ending exactly now settles itself
            want = self._baseline(node, s)
            if node.radio is not want:
                sim._set_radio(node, want)
        self._try_send(sim._nodes[owner_id], slot_end)
        sim.kernel.schedule(slot_end, self._tick)

    def _try_send(self, node: _Node, slot_end: int) -> None:
        sim = self.sim
        if node.held is not None:
            return
        while node.queue and not node.routed:
            node.queue.popleft()
            sim._drop(node, DropReason.NO_ROUTE)
        if not node.queue:
            return
        now = sim.kernel.now()
        if now + sim.params.airtime_ns >= slot_end:
            return      # strict fit keeps slot boundaries transmission-free
        node.held = node.queue.popleft()
        sim._set_radio(node, RadioState.TX)
        tx = sim.channel.begin(node.id, node.parent)
        sim.kernel.schedule(now + sim.params.airtime_ns,
                            partial(self._end_tx, node, tx, slot_end))

    def _end_tx(self, node: _Node, tx: _Tx, slot_end: int) -> None:
        sim = self.sim
        sim.channel.end(node.id)
        s, _, _ = self._slot_geometry()
        sim._set_radio(node, self._baseline(node, s))
        pkt = node.held
        node.held = None
        if not tx.corrupted and tx.receiver in sim._neighbours[node.id]:
            sim._arrive(pkt, tx.receiver)
        else:
            # the route moved away mid-flight; schedule stays collision-free
            sim._drop(node, DropReason.NO_ROUTE)
        self._try_send(node, slot_end)

    def notify_enqueue(self, node: _Node) -> None:
        s, slot_end, _ = self._slot_geometry()
        if node.slot == s:
            self._try_send(node, slot_end)


class Simulation:
    """One live simulation instance bound to a kernel."""

    def __init__(self, topology: Topology, mac_variant: str, params: SimParams,
                 seed: int, kernel: Kernel | None = None, label: str | None = None):
        topology.validate()
        params.validate()
        if mac_variant not in MAC_VARIANTS:
            raise InvalidTopology(f"unknown MAC variant {mac_variant!r}")
        self.initial_topology = topology
        self.mac_variant = mac_variant
        self.params = params
        self.seed = seed
        self.kernel = kernel if kernel is not None else Kernel(seed)
        self.label = label if label is not None else mac_variant.upper()
        self.preset_name = topology.name

        self.on_window: Callable[[StatsWindow], None] | None = None
        self.on_topology_changed: Callable[[dict], None] | None = None
        self.trace_generation: Callable[[int, int], None] | None = None
        self.trace_delivery: Callable[[Packet, int], None] | None = None

        self._record_stats = False
        self._record_drops = False
        self.last_window_durations_ns: dict[int, int] = {}
        self._initialise()

    # -- construction / reset ---------------------------------------------------

    def _initialise(self) -> None:
        self.epoch_ns = self.kernel.now()
        self._power = dict(self.params.power_mw)
        self._packet_seq = 0
        self._tot_generated = 0
        self._tot_delivered = 0
        self._tot_drops = {r: 0 for r in DropReason}
        self._win_generated = 0
        self._win_delivered = 0
        self._win_drops = {r: 0 for r in DropReason}
        self._win_drop_records: list[DropRecord] = []

        self._nodes: dict[int, _Node] = {}
        for tn in sorted(self.initial_topology.nodes, key=lambda n: n.id):
            self._nodes[tn.id] = _Node(tn.id, tn.x, tn.y, tn.sink, self.epoch_ns)
        self._nodes_sorted = list(self._nodes.values())
        self.sink_id = self.initial_topology.sink_id
        self.preset_name = self.initial_topology.name

        self.channel = Channel(self)
        self._recompute_routes()

        for node in self._nodes_sorted:
            node.traffic_stream = self.kernel.stream(f"traffic.{node.id}")
            node.mac_stream = self.kernel.stream(f"mac.{node.id}")
            node.mean_interval_s = self.params.mean_interval_s

        self.mac = CsmaMac(self) if self.mac_variant == "csma" else TdmaMac(self)
        self.mac.on_build()

        for node in self._nodes_sorted:
            if not node.is_sink:
                self._schedule_generation(node)
        self.kernel.schedule(self.epoch_ns + NS_PER_SEC, self._heartbeat)

    def _recompute_routes(self) -> None:
        positions = {n.id: (n.x, n.y) for n in self._nodes_sorted}
        self._neighbours = neighbour_sets(positions, self.params.range_m)
        tree = compute_routes(positions, self.sink_id, self.params.range_m,
                              self._neighbours)
        for node in self._nodes_sorted:
            node.parent = tree.parent.get(node.id)
            node.routed = node.is_sink or tree.has_route(node.id)
        mac = getattr(self, "mac", None)
        if mac is not None:
            mac.on_routes_changed()

    # -- power accounting ----------------------------------------------------------

    def _account(self, node: _Node, at_ns: int) -> None:
        dt = at_ns - node.state_entry_ns
        if dt < 0:
            raise TimeRegression(f"node {node.id}: {at_ns} < {node.state_entry_ns}")
        if dt:
            node.win_energy_mj += self._power[node.radio] * (dt / NS_PER_SEC)
            node.win_accounted_ns += dt
            node.state_entry_ns = at_ns

    def _set_radio(self, node: _Node, state: RadioState) -> None:
        self._account(node, self.kernel.now())
        node.radio = state

    # -- traffic ---------------------------------------------------------------------

    def _schedule_generation(self, node: _Node) -> None:
        # the current mean is read here, when the next event is scheduled
        dt = node.traffic_stream.exponential_ns(node.mean_interval_s)
        node.gen_handle = self.kernel.schedule(self.kernel.now() + dt,
                                               partial(self._generate, node))

    def _generate(self, node: _Node) -> None:
        now = self.kernel.now()
        self._packet_seq += 1
        pkt = Packet(self._packet_seq, node.id, now, node.id)
        self._tot_generated += 1
        self._win_generated += 1
        if self.trace_generation is not None:
            self.trace_generation(node.id, now)
        if len(node.queue) >= self.params.queue_capacity:
            self._drop(node, DropReason.QUEUE_OVERFLOW)
        else:
            node.queue.append(pkt)
            self.mac.notify_enqueue(node)
        self._schedule_generation(node)

    def _arrive(self, pkt: Packet, rx_id: int) -> None:
        rx = self._nodes[rx_id]
        if rx.is_sink:
            self._tot_delivered += 1
            self._win_delivered += 1
            if self.trace_delivery is not None:
                self.trace_delivery(pkt, self.kernel.now())
            return
        pkt.hop = rx_id
        if len(rx.queue) >= self.params.queue_capacity:
            self._drop(rx, DropReason.QUEUE_OVERFLOW)
        else:
            rx.queue.append(pkt)
            self.mac.notify_enqueue(rx)

    def _drop(self, node: _Node, reason: DropReason) -> None:
        self._tot_drops[reason] += 1
        self._win_drops[reason] += 1
        if self._record_drops:
            t = (self.kernel.now() - self.epoch_ns) / NS_PER_SEC
            self._win_drop_records.append(
                DropRecord(t, node.id, node.x, node.y, reason))

    # -- statistics windows --------------------------------------------------------

    def set_recording(self, stats: bool, drops: bool = False) -> None:
        """Gate statistics retention on subscriber presence.

        Enabling starts a fresh window at the current instant; with recording
        off, no window objects or drop records are kept at all.
        """
        drops = drops and stats
        if stats and not self._record_stats:
            now = self.kernel.now()
            for node in self._nodes_sorted:
                node.state_entry_ns = now
                node.win_energy_mj = 0.0
                node.win_accounted_ns = 0
            self._win_generated = 0
            self._win_delivered = 0
            self._win_drops = {r: 0 for r in DropReason}
        if not drops:
            self._win_drop_records = []
        self._record_stats = stats
        self._record_drops = drops

    @property
    def recording(self) -> tuple[bool, bool]:
        return self._record_stats, self._record_drops

    def _heartbeat(self) -> None:
        if self._record_stats:
            window = self._roll_window()
            if self.on_window is not None:
                self.on_window(window)
        self.kernel.schedule(self.kernel.now() + NS_PER_SEC, self._heartbeat)

    def _roll_window(self) -> StatsWindow:
        now = self.kernel.now()
        index = (now - self.epoch_ns) // NS_PER_SEC - 1
        per_node: dict[int, float] = {}
        durations: dict[int, int] = {}
        for node in self._nodes_sorted:
            self._account(node, now)
            per_node[node.id] = node.win_energy_mj   # 1 s window: mJ == mW
            durations[node.id] = node.win_accounted_ns
            node.win_energy_mj = 0.0
            node.win_accounted_ns = 0
        window = StatsWindow(
            index=index,
            generated=self._win_generated,
            delivered=self._win_delivered,
            drops=dict(self._win_drops),
            per_node_mw=per_node,
            total_mw=sum(per_node[nid] for nid in sorted(per_node)),
            drop_records=self._win_drop_records if self._record_drops else [],
        )
        self.last_window_durations_ns = durations
        self._win_generated = 0
        self._win_delivered = 0
        self._win_drops = {r: 0 for r in DropReason}
        self._win_drop_records = []
        return window

    # -- control ------------------------------------------------------------------------

    def apply_command(self, cmd: SimCommand) -> dict[str, Any]:
        if isinstance(cmd, Reset):
            self.kernel.clear_pending()
            self.channel.clear()
            self._initialise()
            self._notify_topology()
            return {"ok": True}
        if isinstance(cmd, SetMeanInterval):
            if not (isinstance(cmd.seconds, (int, float))
                    and math.isfinite(cmd.seconds) and cmd.seconds > 0):
                raise InvalidInterval(f"mean interval must be > 0, got {cmd.seconds}")
            for node in self._nodes_sorted:
                node.mean_interval_s = float(cmd.seconds)
            return {"mean_interval_s": float(cmd.seconds)}
        if isinstance(cmd, MoveNode):
            node = self._nodes.get(cmd.node)
            if node is None:
                raise UnknownNode(str(cmd.node))
            if not (math.isfinite(cmd.x) and math.isfinite(cmd.y)):
                raise InvalidTopology("coordinates must be finite")
            node.x = float(cmd.x)
            node.y = float(cmd.y)
            self._recompute_routes()
            self._notify_topology()
            return {"ok": True}
        if isinstance(cmd, SetPreset):
            topo = presets_mod.load_preset(cmd.name)
            wanted = {n.id: n for n in topo.nodes}
            if set(wanted) != set(self._nodes) or topo.sink_id != self.sink_id:
                raise InvalidTopology(
                    f"preset {cmd.name!r} does not match this instance's nodes")
            for node in self._nodes_sorted:
                node.x = wanted[node.id].x
                node.y = wanted[node.id].y
            self.preset_name = cmd.name
            self._recompute_routes()
            self._notify_topology()
            return {"ok": True}
        raise TypeError(f"unknown command {cmd!r}")

    def _notify_topology(self) -> None:
        if self.on_topology_changed is not None:
            self.on_topology_changed(self.topology_payload())

    # -- inspection -----------------------------------------------------------------------

    def topology_payload(self) -> dict[str, Any]:
        return {
            "name": self.preset_name,
            "preset": self.preset_name,
            "nodes": [{"id": n.id, "x": n.x, "y": n.y, "sink": n.is_sink}
                      for n in self._nodes_sorted],
        }

    def info(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "protocol": self.mac.variant,
            "version": __version__,
            "seed": self.seed,
            "mean_interval_s": self._nodes_sorted[0].mean_interval_s,
        }

    def totals(self) -> dict[str, Any]:
        return {
            "generated": self._tot_generated,
            "delivered": self._tot_delivered,
            "drops": {r: n for r, n in self._tot_drops.items()},
            "queued": sum(len(n.queue) for n in self._nodes_sorted),
            "in_flight": sum(1 for n in self._nodes_sorted if n.held is not None),
        }

    def drop_record_buffer_len(self) -> int:
        return len(self._win_drop_records)

    def node_position(self, nid: int) -> tuple[float, float]:
        node = self._nodes[nid]
        return node.x, node.y

    def node_radio(self, nid: int) -> RadioState:
        return self._nodes[nid].radio


def build(topology: Topology, mac_variant: str, params: SimParams | None = None,
          seed: int = 1, **kwargs) -> Simulation:
    return Simulation(topology, mac_variant, params or SimParams(), seed, **kwargs)
