"""Discrete-event simulation core.

Virtual time is a float in microseconds.  Events fire in (time, sequence)
order, where the sequence number is assigned at scheduling time, so ties
resolve in scheduling order and a run is a pure function of the scenario
and the seed.  Cancellation is lazy: a cancelled handle stays in the heap
and is skipped when popped.
"""

import heapq
from typing import Callable, Optional

import numpy as np


class EventHandle:
    __slots__ = ("fire_at", "seq", "fn", "kind", "cancelled")

    def __init__(self, fire_at: float, seq: int, fn: Callable, kind: str):
        self.fire_at = fire_at
        self.seq = seq
        self.fn = fn
        self.kind = kind
        self.cancelled = False

    def __lt__(self, other):
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)


class Simulator:
    def __init__(self):
        self.now = 0.0
        self._heap = []
        self._seq = 0
        self._processed = 0

    def schedule(self, delay_us: float, fn: Callable, kind: str = "") -> EventHandle:
        return self.schedule_at(self.now + delay_us, fn, kind)

    def schedule_at(self, fire_at: float, fn: Callable, kind: str = "") -> EventHandle:
        if fire_at < self.now:
            raise ValueError(f"cannot schedule at {fire_at} before now {self.now}")
        handle = EventHandle(fire_at, self._seq, fn, kind)
        self._seq += 1
        heapq.heappush(self._heap, handle)
        return handle

    @staticmethod
    def cancel(handle: Optional[EventHandle]):
        if handle is not None:
            handle.cancelled = True

    def run_until(self, t_end_us: float):
        """Process events with fire_at <= t_end_us, then advance the clock."""
        while self._heap and self._heap[0].fire_at <= t_end_us:
            handle = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.now = handle.fire_at
            self._processed += 1
            handle.fn()
        self.now = t_end_us

    @property
    def events_processed(self) -> int:
        return self._processed


# Stable stream indices; adding purposes must never renumber existing ones.
_PURPOSES = {"backoff": 0, "noise": 1, "traffic": 2}


class RngStreams:
    """Independent random substreams per (node, purpose).

    Streams are derived from a single root seed through spawn keys, so
    draws consumed for one purpose on one node never shift the sequence
    seen by any other consumer.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams = {}

    def get(self, node_id: int, purpose: str) -> np.random.Generator:
        key = (node_id, purpose)
        if key not in self._streams:
            seq = np.random.SeedSequence(
                entropy=self.seed, spawn_key=(node_id, _PURPOSES[purpose]))
            self._streams[key] = np.random.Generator(np.random.PCG64(seq))
        return self._streams[key]
