"""Disc-graph routing toward the sink and the link delivery rule."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable


def in_range(a: tuple[float, float], b: tuple[float, float], range_m: float) -> bool:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return dx * dx + dy * dy <= range_m * range_m


def neighbour_sets(positions: dict[int, tuple[float, float]],
                   range_m: float) -> dict[int, set[int]]:
    ids = list(positions)
    sets: dict[int, set[int]] = {i: set() for i in ids}
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if in_range(positions[a], positions[b], range_m):
                sets[a].add(b)
                sets[b].add(a)
    return sets


@dataclass
class RoutingTree:
    sink: int
    parent: dict[int, int | None]   # routeless nodes map to None
    hops: dict[int, int]            # only reachable nodes appear

    def has_route(self, node: int) -> bool:
        return node in self.hops

    def children(self, node: int) -> list[int]:
        return sorted(c for c, p in self.parent.items() if p == node)


def compute_routes(positions: dict[int, tuple[float, float]], sink: int,
                   range_m: float,
                   neighbours: dict[int, set[int]] | None = None) -> RoutingTree:
    """Hop-count shortest-path tree toward the sink over the disc graph.

    Parent ties break toward the lowest node id; disconnected nodes get a
    None parent and are absent from hops.
    """
    if neighbours is None:
        neighbours = neighbour_sets(positions, range_m)
    hops: dict[int, int] = {sink: 0}
    frontier = deque([sink])
    while frontier:
        current = frontier.popleft()
        for nxt in neighbours[current]:
            if nxt not in hops:
                hops[nxt] = hops[current] + 1
                frontier.append(nxt)
    parent: dict[int, int | None] = {sink: None}
    for node in positions:
        if node == sink:
            continue
        if node not in hops:
            parent[node] = None
            continue
        want = hops[node] - 1
        parent[node] = min(n for n in neighbours[node]
                           if hops.get(n, -1) == want)
    return RoutingTree(sink, parent, hops)


def link_delivered(tx: int, rx: int, positions: dict[int, tuple[float, float]],
                   range_m: float, concurrent: Iterable[int]) -> bool:
    """A frame arrives iff rx is in range of tx and nothing else in range of
    rx (the receiver itself included) transmitted during the overlap."""
    if not in_range(positions[tx], positions[rx], range_m):
        return False
    for other in concurrent:
        if other == tx:
            continue
        if other == rx or in_range(positions[other], positions[rx], range_m):
            return False
    return True
