"""Value types and tunables for the network model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from ..kernel import ns


class InvalidTopology(Exception):
    pass


class InvalidParams(Exception):
    pass


class UnknownNode(Exception):
    pass


class UnknownPreset(Exception):
    pass


class InvalidInterval(Exception):
    pass


class TimeRegression(Exception):
    pass


class RadioState(Enum):
    TX = "tx"
    RX = "rx"       # listening counts the same as receiving
    SLEEP = "sleep"


class DropReason(str, Enum):
    QUEUE_OVERFLOW = "QUEUE_OVERFLOW"
    CHANNEL_ACCESS_FAILURE = "CHANNEL_ACCESS_FAILURE"
    RETRY_EXHAUSTED = "RETRY_EXHAUSTED"
    NO_ROUTE = "NO_ROUTE"


@dataclass(frozen=True)
class TopologyNode:
    id: int
    x: float
    y: float
    sink: bool = False


@dataclass
class Topology:
    name: str
    nodes: list[TopologyNode]

    def validate(self) -> "Topology":
        ids = [n.id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise InvalidTopology("node ids must be unique")
        if not self.nodes:
            raise InvalidTopology("topology has no nodes")
        sinks = [n.id for n in self.nodes if n.sink]
        if len(sinks) != 1:
            raise InvalidTopology(f"expected exactly one sink, found {len(sinks)}")
        for n in self.nodes:
            if not (math.isfinite(n.x) and math.isfinite(n.y)):
                raise InvalidTopology(f"node {n.id} has non-finite coordinates")
        return self

    @property
    def sink_id(self) -> int:
        return next(n.id for n in self.nodes if n.sink)

    def positions(self) -> dict[int, tuple[float, float]]:
        return {n.id: (n.x, n.y) for n in self.nodes}

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "nodes": [{"id": n.id, "x": n.x, "y": n.y, "sink": n.sink}
                      for n in self.nodes],
        }


@dataclass
class Packet:
    id: int
    origin: int
    created_ns: int
    hop: int
    retries: int = 0


@dataclass(frozen=True)
class DropRecord:
    t: float            # seconds since the current run epoch
    node: int
    x: float
    y: float
    reason: DropReason


@dataclass
class StatsWindow:
    """One completed simulated second of counters and power."""

    index: int
    generated: int
    delivered: int
    drops: dict[DropReason, int]
    per_node_mw: dict[int, float]
    total_mw: float
    drop_records: list[DropRecord] = field(default_factory=list)


def _default_power_table() -> dict[RadioState, float]:
    # Representative low-power radio draws; configuration, not ground truth.
    return {RadioState.TX: 36.0, RadioState.RX: 19.0, RadioState.SLEEP: 0.02}


@dataclass
class SimParams:
    queue_capacity: int = 8
    range_m: float = 30.0
    airtime_s: float = 0.004
    mean_interval_s: float = 0.5
    power_mw: dict[RadioState, float] = field(default_factory=_default_power_table)
    # contention MAC (values from the referenced 802.15.4 defaults)
    backoff_period_s: float = 320e-6
    turnaround_s: float = 192e-6
    min_be: int = 3
    max_be: int = 5
    max_csma_backoffs: int = 4
    max_retries: int = 3
    # slotted MAC
    tdma_slot_s: float = 0.005

    def validate(self) -> "SimParams":
        if self.queue_capacity < 1:
            raise InvalidParams("queue_capacity must be >= 1")
        if self.range_m <= 0:
            raise InvalidParams("range_m must be > 0")
        if self.airtime_s <= 0:
            raise InvalidParams("airtime_s must be > 0")
        if self.mean_interval_s <= 0:
            raise InvalidParams("mean_interval_s must be > 0")
        if self.backoff_period_s <= 0 or self.turnaround_s < 0:
            raise InvalidParams("backoff timing must be positive")
        if not (0 < self.min_be <= self.max_be):
            raise InvalidParams("need 0 < min_be <= max_be")
        if self.max_csma_backoffs < 1 or self.max_retries < 0:
            raise InvalidParams("attempt limits out of range")
        if self.tdma_slot_s < self.airtime_s:
            raise InvalidParams("tdma_slot_s must fit one transmission")
        for state in RadioState:
            if self.power_mw.get(state, -1) < 0:
                raise InvalidParams(f"power draw missing/negative for {state}")
        return self

    @property
    def airtime_ns(self) -> int:
        return ns(self.airtime_s)

    @property
    def backoff_period_ns(self) -> int:
        return ns(self.backoff_period_s)

    @property
    def turnaround_ns(self) -> int:
        return ns(self.turnaround_s)

    @property
    def tdma_slot_ns(self) -> int:
        return ns(self.tdma_slot_s)
