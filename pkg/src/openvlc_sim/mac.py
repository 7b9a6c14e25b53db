"""CSMA/CD medium access for the half-duplex LED front end.

One node serves one frame at a time from a FIFO queue.  Channel access is
carrier sense over a window of whole symbols; a busy window draws a random
backoff counter that only counts down on clear windows, and every failed
delivery attempt doubles the contention window up to its cap.  While
transmitting, the node exploits the line code: during its own LOW symbols
the LED is dark anyway, so it can briefly switch to receive and look for
foreign light.  Enough consecutive busy looks abort the transmission as a
detected collision.

Received DATA frames are acknowledged with a zero-length frame after the
receive-side processing delay; the sender retransmits on ACK timeout and
drops the frame after max_retx retries.  Acknowledgement emission takes
priority over the node's own contention, which resumes afterwards with
its backoff counter intact.

Timing note: sensing windows and collision looks are evaluated lazily at
their deadlines against the registered emissions, and provably-busy
windows during a foreign frame are skipped in bulk, so simulated cost
scales with frames rather than symbols.  The arithmetic is identical to
evaluating every window.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np

from . import channel as channel_mod
from . import frame as frame_mod
from . import phy
from .errors import (BadCrc, HalfDuplexViolation, InvalidPayload,
                     PayloadTooLarge, QueueFull, ScenarioError)


class MacPhase(Enum):
    IDLE = "idle"
    RX = "rx"
    BASIC_SENSE = "basic_sense"
    BACKOFF = "backoff"
    TX_DATA = "tx_data"
    AWAIT_ACK = "await_ack"
    TX_ACK = "tx_ack"


@dataclass
class MacParams:
    symbol_period_us: float = 20.0
    cw_min: int = 4
    cw_max: int = 64
    basic_sense_symbols: int = 16
    collision_busy_symbols: int = 4
    ack_timeout_us: Optional[float] = None  # None: derived from frame size
    max_retx: int = 3
    max_payload: int = 1500
    queue_capacity: int = 64
    proc_overhead_a_us: float = 0.0
    proc_overhead_b_us: float = 0.0  # per coded byte

    def validate(self):
        def pow2(x):
            return x >= 1 and (x & (x - 1)) == 0
        if not (pow2(self.cw_min) and pow2(self.cw_max)):
            raise ScenarioError("cw_min and cw_max must be powers of two")
        if not 2 <= self.cw_min <= self.cw_max:
            raise ScenarioError("need 2 <= cw_min <= cw_max")
        if self.symbol_period_us <= 0:
            raise ScenarioError("symbol period must be positive")
        if self.basic_sense_symbols < 1 or self.collision_busy_symbols < 1:
            raise ScenarioError("sensing windows must span at least one symbol")
        if self.max_retx < 0 or self.queue_capacity < 1:
            raise ScenarioError("max_retx must be >= 0 and queue_capacity >= 1")
        if not 1 <= self.max_payload <= frame_mod.MAX_FIELD:
            raise ScenarioError("max_payload outside 1..65535")
        if self.proc_overhead_a_us < 0 or self.proc_overhead_b_us < 0:
            raise ScenarioError("processing overhead cannot be negative")

    def proc_us(self, coded_bytes: int) -> float:
        return self.proc_overhead_a_us + self.proc_overhead_b_us * coded_bytes


@dataclass
class MacCounters:
    tx_data: int = 0
    tx_ack: int = 0
    retx: int = 0
    drops: int = 0
    collisions_detected: int = 0
    rx_ok: int = 0
    rx_crc_fail: int = 0
    rx_rs_fail: int = 0
    rx_unknown_proto: int = 0
    duplicates: int = 0
    frames_submitted: int = 0
    frames_delivered: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def draw_backoff(rng: np.random.Generator, cw: int) -> int:
    """Uniform integer from [1, cw - 1]."""
    if cw < 2:
        raise ValueError("contention window must be at least 2")
    return int(rng.integers(1, cw))


def build_ack(received: frame_mod.MacFrame, own_address: int) -> frame_mod.MacFrame:
    """Zero-length reply to the sender, protocol copied from the data frame."""
    return frame_mod.MacFrame(dst=received.src, src=own_address,
                              protocol=received.protocol, payload=b"")


class MacNode:
    def __init__(self, node_id: int, address: int, sim, channel, params: MacParams,
                 rngs, trace):
        params.validate()
        if channel.params.switch_latency_us >= params.symbol_period_us:
            raise ScenarioError("switch latency must be below one symbol period")
        if 2 * channel.params.switch_latency_us > params.symbol_period_us:
            raise ScenarioError(
                "collision looks need two mode switches within one symbol")
        self.node_id = node_id
        self.address = address
        self.sim = sim
        self.channel = channel
        self.params = params
        self.rng_backoff = rngs.get(node_id, "backoff")
        self.trace = trace
        self.counters = MacCounters()
        self.phase = MacPhase.IDLE
        self.queue = deque()
        self.handlers: Dict[int, Callable] = {}
        self.on_queue_space: Optional[Callable] = None

        self.current: Optional[frame_mod.MacFrame] = None
        self.current_symbols: Optional[np.ndarray] = None
        self.current_coded = 0
        self.retx_count = 0
        self.cw = params.cw_min

        self._sense_handle = None
        self._sense_anchor = 0.0
        self._backoff_counter = 0

        self._tx: Optional[channel_mod.Transmission] = None
        self._low_indices: Optional[np.ndarray] = None
        self._collision_run = 0
        self._scan_from = 0
        self._abort_handle = None

        self._ack_handle = None
        self._ack_queue = deque()
        self._ack_tx: Optional[channel_mod.Transmission] = None
        self._resume_state = None
        self._watched_rx: Optional[channel_mod.Transmission] = None

        channel.attach_receiver(node_id, self._on_capture)
        channel.add_activity_listener(self._on_channel_activity)

    # ------------------------------------------------------------------
    # host interface

    def host_send(self, dst: int, protocol: int, payload: bytes):
        if len(payload) == 0:
            raise InvalidPayload("zero-length payloads are reserved for ACKs")
        if len(payload) > self.params.max_payload:
            raise PayloadTooLarge(
                f"{len(payload)} bytes exceeds max_payload {self.params.max_payload}")
        if len(self.queue) >= self.params.queue_capacity:
            raise QueueFull(f"queue at capacity {self.params.queue_capacity}")
        outgoing = frame_mod.MacFrame(dst=dst, src=self.address,
                                      protocol=protocol, payload=payload)
        self.queue.append(outgoing)
        self.counters.frames_submitted += 1
        self._trace("submit", dst=dst, protocol=protocol, bits=8 * len(payload))
        if self.current is None and self.phase in (MacPhase.IDLE, MacPhase.RX):
            self._start_service()

    def register_handler(self, protocol: int, handler: Callable):
        self.handlers[protocol] = handler

    @property
    def queue_depth(self) -> int:
        return len(self.queue) + (1 if self.current is not None else 0)

    # ------------------------------------------------------------------
    # carrier sensing

    def _sense_threshold(self) -> float:
        # mid-scale, not the per-frame decode threshold: sensing runs with
        # no preamble in hand, and a stale threshold inflated by an
        # interfered preamble would blind the carrier sense
        return ((1 << self.channel.params.adc_bits) - 1) / 2.0

    def _window_instants(self, start: float, n: int) -> np.ndarray:
        ts = self.params.symbol_period_us
        return start + (np.arange(n) + 0.5) * ts

    def basic_sense(self, start: Optional[float] = None) -> bool:
        """Sense one window of basic_sense_symbols symbols; True means busy.

        Evaluates against the emissions registered at call time; the
        driver calls it for windows that have already elapsed.
        """
        if self._tx is not None or self._ack_tx is not None:
            raise HalfDuplexViolation("cannot carrier-sense while transmitting")
        t0 = self.sim.now if start is None else start
        counts = self.channel.sense_counts(
            self.node_id, self._window_instants(t0, self.params.basic_sense_symbols))
        return bool((counts >= self._sense_threshold()).any())

    def fast_sense(self) -> bool:
        """One mid-symbol look during an own LOW symbol; True means busy."""
        tx = self._tx
        now = self.sim.now
        if tx is None or not (tx.start <= now < tx.end):
            raise HalfDuplexViolation("fast sensing requires an own transmission")
        ts = self.params.symbol_period_us
        idx = int((now - tx.start) // ts)
        if tx.symbols[idx] != phy.Symbol.LOW:
            raise HalfDuplexViolation("own symbol is HIGH; the LED is emitting")
        instant = tx.start + (idx + 0.5) * ts
        count = self.channel.sense_counts(self.node_id, np.array([instant]))[0]
        return bool(count >= self._sense_threshold())

    # ------------------------------------------------------------------
    # service pipeline

    def _start_service(self):
        if self._ack_queue and self._ack_tx is None:
            self._serve_ack_duty()  # pending ACK outranks own traffic
            return
        if not self.queue:
            if self.phase not in (MacPhase.RX,):
                self.phase = MacPhase.IDLE
            return
        self.current = self.queue.popleft()
        self.current_symbols = frame_mod.frame_to_symbols(self.current)
        self.current_coded = frame_mod.coded_bytes(self.current.length)
        self.retx_count = 0
        if self.on_queue_space is not None:
            self.on_queue_space(self)
        delay = self.params.proc_us(self.current_coded)
        self._schedule_begin(self.sim.now + delay)

    def _schedule_begin(self, at: float):
        self.sim.cancel(self._sense_handle)
        self._sense_handle = self.sim.schedule_at(at, self._begin_sensing,
                                                  kind="sense_begin")

    def _begin_sensing(self):
        self.phase = MacPhase.BASIC_SENSE
        if self._ack_queue and self._ack_tx is None:
            self._serve_ack_duty()  # suspends; sensing restarts afterwards
            return
        self._sense_anchor = self.sim.now
        self._schedule_round(self.sim.now + self._round_us())

    def _round_us(self) -> float:
        return self.params.basic_sense_symbols * self.params.symbol_period_us

    def _schedule_round(self, fire_at: float):
        self.sim.cancel(self._sense_handle)
        self._sense_handle = self.sim.schedule_at(
            fire_at, self._sense_round_end, kind="sense_round")

    def _sense_round_end(self):
        now = self.sim.now
        busy = self.basic_sense(start=now - self._round_us())
        if self.phase == MacPhase.BASIC_SENSE:
            if not busy:
                self._start_data_tx()
                return
            self._backoff_counter = draw_backoff(self.rng_backoff, self.cw)
            self.phase = MacPhase.BACKOFF
            self._trace("backoff", cw=self.cw, draw=self._backoff_counter)
        elif self.phase == MacPhase.BACKOFF and not busy:
            self._backoff_counter -= 1
            if self._backoff_counter <= 0:
                self._start_data_tx()
                return
        self._schedule_round(self._next_round_end(now))

    def _next_round_end(self, now: float) -> float:
        """Next window worth evaluating; skips windows a frame provably fills."""
        round_us = self._round_us()
        nxt = now + round_us
        if self.phase == MacPhase.BACKOFF:
            cover = self.channel.covering_end(now)
            if cover is not None and cover >= nxt:
                skipped = int((cover - now) // round_us)
                nxt = now + (skipped + 1) * round_us
        return nxt

    # ------------------------------------------------------------------
    # data transmission and collision detection

    def _start_data_tx(self):
        self.phase = MacPhase.TX_DATA
        effective = self.channel.set_mode(self.node_id, channel_mod.TX)
        self.sim.schedule_at(effective, self._emit_current, kind="tx_switch")

    def _emit_current(self):
        self._tx = self.channel.begin_transmission(
            self.node_id, self.current_symbols, self.params.symbol_period_us,
            label="data")
        self.counters.tx_data += 1
        self._trace("tx_start", frame="data", dst=self.current.dst,
                    bits=8 * self.current.length, attempt=self.retx_count + 1,
                    n_symbols=int(self.current_symbols.size))
        self._low_indices = np.nonzero(self.current_symbols == 0)[0]
        self._collision_run = 0
        self._scan_from = 0
        self._update_collision_outlook()

    def _update_collision_outlook(self):
        """Re-derive the collision verdict after channel activity changed.

        Committed looks (instants already in the past) are folded into the
        run counter; future looks are predicted against the current set of
        emissions and the abort is scheduled where the run would reach the
        limit.  Past looks never change retroactively because an emission
        contributes nothing before the instant it registers.
        """
        tx = self._tx
        if tx is None:
            return
        self.sim.cancel(self._abort_handle)
        self._abort_handle = None
        lows = self._low_indices[self._scan_from:]
        if not lows.size:
            return
        ts = self.params.symbol_period_us
        instants = tx.start + (lows + 0.5) * ts
        counts = self.channel.sense_counts(self.node_id, instants)
        busy = counts >= self._sense_threshold()
        now = self.sim.now
        run = self._collision_run
        limit = self.params.collision_busy_symbols
        for k in range(lows.size):
            run = run + 1 if busy[k] else 0
            if instants[k] < now:
                # already happened: commit
                self._collision_run = run
                self._scan_from += 1
            if run >= limit:
                # the verdict lands mid-symbol; the driver reacts at the
                # following boundary, so one extra symbol is emitted.  That
                # reaction time also lets two colliding transmitters both
                # commit their verdicts before either light goes out.
                abort_at = tx.start + (int(lows[k]) + 2) * ts
                self._abort_handle = self.sim.schedule_at(
                    abort_at, self._abort_tx, kind="collision_abort")
                return

    def _abort_tx(self):
        tx = self._tx
        ts = self.params.symbol_period_us
        n_emitted = int(round((self.sim.now - tx.start) / ts))
        self._tx = None
        self._abort_handle = None
        self.counters.collisions_detected += 1
        self._trace("tx_abort", n_symbols=n_emitted)
        self.channel.abort_transmission(tx, n_emitted)
        rx_at = self.channel.set_mode(self.node_id, channel_mod.RX)
        self._failed_attempt(resume_at=rx_at)

    def _on_own_tx_end(self):
        self.sim.cancel(self._abort_handle)
        self._abort_handle = None
        self._tx = None
        self._trace("tx_end")
        self.channel.set_mode(self.node_id, channel_mod.RX)
        if self.current.dst == frame_mod.BROADCAST:
            self._complete_current(delivered=True)
            return
        self.phase = MacPhase.AWAIT_ACK
        timeout = self.params.ack_timeout_us
        if timeout is None:
            # covers the peer's processing delay plus the ACK flight with
            # one extra ACK airtime and switch as margin
            t_ack = frame_mod.frame_symbols(0) * self.params.symbol_period_us
            timeout = (2 * t_ack + 2 * self.channel.params.switch_latency_us
                       + self.params.proc_us(self.current_coded))
        self._ack_handle = self.sim.schedule(timeout, self._on_ack_timeout,
                                             kind="ack_timeout")
        self._serve_ack_duty()

    def _on_ack_timeout(self):
        self._ack_handle = None
        self._trace("ack_timeout", attempt=self.retx_count + 1)
        if self._in_ack_duty():
            self._resume_state = ("failed", None)  # settle after the ACK is out
            return
        self._failed_attempt(resume_at=self.sim.now)

    def _in_ack_duty(self) -> bool:
        return self.phase == MacPhase.TX_ACK or self._ack_tx is not None

    def _failed_attempt(self, resume_at: float):
        self.retx_count += 1
        self.cw = min(self.cw * 2, self.params.cw_max)
        if self.retx_count > self.params.max_retx:
            self.counters.drops += 1
            self._trace("drop", attempts=self.retx_count)
            self._complete_current(delivered=False)
            return
        self.counters.retx += 1
        self.phase = MacPhase.BASIC_SENSE
        self._schedule_begin(max(resume_at, self.sim.now))

    def _complete_current(self, delivered: bool):
        if delivered:
            self.counters.frames_delivered += 1
        self.current = None
        self.current_symbols = None
        self.cw = self.params.cw_min
        self.retx_count = 0
        self.phase = MacPhase.IDLE
        self._start_service()

    # ------------------------------------------------------------------
    # reception

    def _on_capture(self, tx: channel_mod.Transmission, counts: np.ndarray):
        try:
            sync = self._locate(counts)
        except phy.NoSync:
            self._trace("rx_frame", result="no_sync", n_symbols=int(counts.size))
            return
        body = phy.slice_symbols(counts[sync.start:], sync.threshold)
        try:
            decoded, corrected = frame_mod.symbols_to_frame(body)
        except BadCrc:
            self.counters.rx_crc_fail += 1
            self._trace("rx_frame", result="crc_fail")
            return
        except Exception as exc:  # symbol or block level corruption
            self.counters.rx_rs_fail += 1
            self._trace("rx_frame", result="rs_fail", reason=type(exc).__name__)
            return
        self._trace("rx_frame", result="ok", frame="ack" if decoded.is_ack else "data",
                    src=decoded.src, corrected=corrected)
        if decoded.is_ack:
            self._on_ack(decoded)
            return
        # processing overhead sits between reception and the ACK going out
        delay = self.params.proc_us(frame_mod.coded_bytes(decoded.length))
        self.sim.schedule(delay, lambda: self._on_frame_processed(decoded),
                          kind="rx_proc")

    @staticmethod
    def _locate(counts: np.ndarray) -> phy.SyncResult:
        # Clean captures sync at offset zero; try that cheaply before the scan.
        if counts.size >= phy.SYNC_SYMBOLS:
            try:
                return phy.locate_frame(counts[:phy.SYNC_SYMBOLS])
            except phy.NoSync:
                pass
        return phy.locate_frame(counts)

    def _on_frame_processed(self, decoded: frame_mod.MacFrame):
        addressed = decoded.dst == self.address
        if not addressed and decoded.dst != frame_mod.BROADCAST:
            return  # overheard unicast for somebody else
        if addressed:
            self._ack_queue.append(build_ack(decoded, self.address))
        self._deliver_up(decoded)
        if addressed:
            self._serve_ack_duty()

    def _on_ack(self, ack: frame_mod.MacFrame):
        awaiting = self.phase == MacPhase.AWAIT_ACK or (
            self._resume_state is not None and self._resume_state[0] == "await_ack")
        if (not awaiting or ack.dst != self.address
                or self.current is None or ack.src != self.current.dst):
            return
        self.sim.cancel(self._ack_handle)
        self._ack_handle = None
        self._trace("ack_rx", src=ack.src)
        if self.phase != MacPhase.AWAIT_ACK:
            self._resume_state = ("complete", None)  # mid ACK duty; settle after
            return
        self._complete_current(delivered=True)

    def _deliver_up(self, decoded: frame_mod.MacFrame):
        handler = self.handlers.get(decoded.protocol)
        if handler is None:
            self.counters.rx_unknown_proto += 1
            return
        self.counters.rx_ok += 1
        self._trace("deliver", src=decoded.src, protocol=decoded.protocol,
                    bits=8 * decoded.length)
        handler(self, decoded)

    def note_duplicate(self):
        self.counters.duplicates += 1
        self._trace("duplicate")

    # ------------------------------------------------------------------
    # acknowledgement duty

    def _serve_ack_duty(self):
        if not self._ack_queue or self._ack_tx is not None or self._tx is not None:
            return
        if self.phase in (MacPhase.TX_DATA, MacPhase.TX_ACK):
            return  # LED busy or switch under way; retried when it frees up
        self._suspend_contention()
        self.phase = MacPhase.TX_ACK
        effective = self.channel.set_mode(self.node_id, channel_mod.TX)
        self.sim.schedule_at(effective, self._emit_ack, kind="ack_switch")

    def _emit_ack(self):
        ack = self._ack_queue.popleft()
        self._ack_tx = self.channel.begin_transmission(
            self.node_id, frame_mod.frame_to_symbols(ack),
            self.params.symbol_period_us, label="ack")
        self.counters.tx_ack += 1
        self._trace("tx_start", frame="ack", dst=ack.dst)

    def _on_own_ack_end(self):
        self._ack_tx = None
        if self._ack_queue:
            self._emit_ack()  # LED already in transmit mode; no gap needed
            return
        rx_at = self.channel.set_mode(self.node_id, channel_mod.RX)
        self._resume_contention(rx_at)

    def _suspend_contention(self):
        if self.phase == MacPhase.BASIC_SENSE:
            self.sim.cancel(self._sense_handle)
            self._sense_handle = None
            self._resume_state = ("sense", None)
        elif self.phase == MacPhase.BACKOFF:
            self.sim.cancel(self._sense_handle)
            self._sense_handle = None
            self._resume_state = ("backoff", self._backoff_counter)
        elif self.phase == MacPhase.AWAIT_ACK:
            self._resume_state = ("await_ack", None)  # timer keeps running
        else:
            self._resume_state = ("idle", None)

    def _resume_contention(self, at: float):
        state, value = self._resume_state or ("idle", None)
        self._resume_state = None
        if state == "sense":
            self.phase = MacPhase.BASIC_SENSE
            self._schedule_begin(at)
        elif state == "backoff":
            self.phase = MacPhase.BACKOFF
            self._backoff_counter = value
            self.sim.schedule_at(at, self._resume_backoff, kind="resume_backoff")
        elif state == "await_ack":
            self.phase = MacPhase.AWAIT_ACK
        elif state == "failed":
            self._failed_attempt(resume_at=at)
        elif state == "complete":
            self._complete_current(delivered=True)
        else:
            self.phase = MacPhase.IDLE
            self._start_service()

    def _resume_backoff(self):
        self._sense_anchor = self.sim.now
        self._schedule_round(self.sim.now + self._round_us())

    # ------------------------------------------------------------------
    # channel activity

    def _on_channel_activity(self, kind: str, tx: channel_mod.Transmission):
        if tx.node == self.node_id:
            if kind == "end":
                if tx is self._tx:
                    self._on_own_tx_end()
                elif tx is self._ack_tx:
                    self._on_own_ack_end()
            return
        if self._tx is not None:
            self._update_collision_outlook()
            return
        if kind == "abort" and self.phase == MacPhase.BACKOFF and self._sense_handle:
            # a skipped-ahead schedule may now be too far out; pull it in
            round_us = self._round_us()
            elapsed = self.sim.now - self._sense_anchor
            boundary = self._sense_anchor + (int(elapsed // round_us) + 1) * round_us
            if self._sense_handle.fire_at > boundary:
                self._schedule_round(boundary)
        self._note_passive_rx(kind, tx)

    def _note_passive_rx(self, kind: str, tx: channel_mod.Transmission):
        if kind == "start" and self.phase == MacPhase.IDLE \
                and self.channel.gains[tx.node, self.node_id] > 0:
            self.phase = MacPhase.RX
            self._watched_rx = tx
        elif kind in ("end", "abort") and tx is self._watched_rx:
            self._watched_rx = None
            if self.phase == MacPhase.RX:
                self.phase = MacPhase.IDLE
                if self.current is None and self.queue:
                    self._start_service()

    # ------------------------------------------------------------------

    def _trace(self, kind: str, **detail):
        self.trace.emit(self.sim.now, self.node_id, kind, detail)
