"""Deterministic discrete-event kernel with an optional wall-clock paced mode.

Simulation time is integer nanoseconds from 0, so long runs accumulate no
floating-point drift.  Events are totally ordered by (fire-time, schedule
sequence); commands injected from other threads are stamped with the sim
time current at injection and run before any later-timed event.  The event
loop itself is single-threaded: all simulation state belongs to whichever
thread calls run_until/run_paced.
"""

from __future__ import annotations

import hashlib
import heapq
import random
import threading
import time
from typing import Callable

NS_PER_SEC = 1_000_000_000


def ns(seconds: float) -> int:
    """Convert seconds to integer nanoseconds."""
    return round(seconds * NS_PER_SEC)


def seconds(t_ns: int) -> float:
    return t_ns / NS_PER_SEC


class SchedulingInPast(Exception):
    """Attempt to schedule an event before the current sim time."""


class NonPositiveMean(ValueError):
    """Exponential draws require a strictly positive mean."""


class RngStream:
    """Named random stream, reproducible from (base seed, name).

    Distinct names yield independent streams; constructing the same
    (seed, name) pair again restarts the stream at draw index zero.
    """

    def __init__(self, base_seed: int, name: str):
        self.name = name
        digest = hashlib.sha256(f"{base_seed}\x1f{name}".encode()).digest()
        self._rng = random.Random(int.from_bytes(digest[:16], "big"))

    def exponential(self, mean_s: float) -> float:
        """Draw Exp-distributed seconds with the given mean."""
        if mean_s <= 0:
            raise NonPositiveMean(f"mean must be > 0, got {mean_s}")
        return self._rng.expovariate(1.0 / mean_s)

    def exponential_ns(self, mean_s: float) -> int:
        return ns(self.exponential(mean_s))

    def randint(self, low: int, high: int) -> int:
        return self._rng.randint(low, high)

    def random(self) -> float:
        return self._rng.random()


class EventHandle:
    """Scheduled-event token; lets the owner cancel a pending event."""

    __slots__ = ("time", "seq", "fn", "cancelled", "fired")

    def __init__(self, time_ns: int, seq: int, fn: Callable[[], None]):
        self.time = time_ns
        self.seq = seq
        self.fn = fn
        self.cancelled = False
        self.fired = False

    def __lt__(self, other: "EventHandle") -> bool:
        return (self.time, self.seq) < (other.time, other.seq)


class Kernel:
    """Event queue, clock, and named RNG streams for one simulation."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._now = 0
        self._seq = 0
        self._heap: list[EventHandle] = []
        self._injected: list[Callable[[], None]] = []
        self._cond = threading.Condition()

    def now(self) -> int:
        return self._now

    def stream(self, name: str) -> RngStream:
        return RngStream(self.seed, name)

    def schedule(self, t_ns: int, fn: Callable[[], None]) -> EventHandle:
        if t_ns < self._now:
            raise SchedulingInPast(f"t={t_ns} < now={self._now}")
        self._seq += 1
        handle = EventHandle(t_ns, self._seq, fn)
        heapq.heappush(self._heap, handle)
        return handle

    def schedule_in(self, dt_ns: int, fn: Callable[[], None]) -> EventHandle:
        return self.schedule(self._now + dt_ns, fn)

    def cancel(self, handle: EventHandle) -> bool:
        """True iff the event was still pending and is now removed."""
        if handle.cancelled or handle.fired:
            return False
        handle.cancelled = True
        return True

    def clear_pending(self) -> int:
        """Drop every pending event (the queue owner is rebuilding itself)."""
        dropped = sum(1 for h in self._heap if not h.cancelled)
        for h in self._heap:
            h.cancelled = True
        self._heap.clear()
        return dropped

    def inject(self, fn: Callable[[], None]) -> None:
        """Thread-safe: queue fn to run at the loop's current sim time."""
        with self._cond:
            self._injected.append(fn)
            self._cond.notify_all()

    def pending_count(self) -> int:
        return sum(1 for h in self._heap if not h.cancelled)

    def _pop_injected(self) -> Callable[[], None] | None:
        with self._cond:
            if self._injected:
                return self._injected.pop(0)
        return None

    def _fire(self, handle: EventHandle) -> None:
        self._now = handle.time
        handle.fired = True
        handle.fn()

    def run_until(self, t_end_ns: int) -> None:
        """Execute every event with fire-time <= t_end as fast as possible."""
        if t_end_ns < self._now:
            raise SchedulingInPast(f"t_end={t_end_ns} < now={self._now}")
        while True:
            fn = self._pop_injected()
            if fn is not None:
                fn()
                continue
            while self._heap and self._heap[0].cancelled:
                heapq.heappop(self._heap)
            if not self._heap or self._heap[0].time > t_end_ns:
                break
            self._fire(heapq.heappop(self._heap))
        self._now = t_end_ns

    def run_paced(self, factor: float, stop: threading.Event) -> None:
        """Run so the event at sim time t fires no earlier than start + t/factor.

        When event handling overruns, the loop catches up without skipping
        events.  Returns promptly once stop is set, leaving the queue intact.
        """
        if factor <= 0:
            raise ValueError(f"pacing factor must be > 0, got {factor}")
        wall_start = time.monotonic()
        sim_start = self._now
        while not stop.is_set():
            fn = self._pop_injected()
            if fn is not None:
                fn()
                continue
            while self._heap and self._heap[0].cancelled:
                heapq.heappop(self._heap)
            if not self._heap:
                with self._cond:
                    if not self._injected and not stop.is_set():
                        self._cond.wait(0.05)
                continue
            head = self._heap[0]
            deadline = wall_start + (head.time - sim_start) / (factor * NS_PER_SEC)
            lag = deadline - time.monotonic()
            if lag > 0:
                with self._cond:
                    if not self._injected and not stop.is_set():
                        self._cond.wait(min(lag, 0.05))
                continue
            heapq.heappop(self._heap)
            self._fire(head)
