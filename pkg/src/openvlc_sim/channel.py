"""Optical medium shared by the LED front ends.

Light from every transmitting node superposes linearly at every receiver:
received intensity is the emitter intensity scaled by a pairwise gain,
plus a per-node ambient offset and Gaussian front-end noise, quantized by
an ADC.  A node owns a single LED used for both directions, so it is
either transmitting or receiving, with a fixed latency to switch between
the two.

The simulation registers each emission as a whole symbol sequence rather
than symbol-by-symbol events.  Receivers that stayed in receive mode for
an entire emission get the sampled window (one mid-symbol sample per
symbol interval, at the emitter's symbol phase, which the aligned-clock
assumption grants) when the emission ends.  Carrier-sense queries read
the noiseless superposed intensity at the requested instants: in every
scenario this library targets, the slicing margin is tens of noise sigmas,
so noise is applied only where it can matter, on the decode path.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .errors import (NonPositiveDistance, NotInRxMode, NotInTxMode,
                     ScenarioError)

TX = "tx"
RX = "rx"

# Transmissions older than this are dropped from the overlap history;
# generous compared to the longest legal frame at the default symbol rate.
_RETENTION_US = 2_000_000.0


def link_gain(distance_m: float, g0: float) -> float:
    """Inverse-square geometric gain, normalised so gain(sqrt(g0)) = 1."""
    if distance_m <= 0:
        raise NonPositiveDistance(f"distance {distance_m} m")
    return g0 / (distance_m * distance_m)


@dataclass
class ChannelParams:
    gains: Sequence[Sequence[float]]
    ambient: Union[float, Sequence[float]] = 0.1
    noise_sigma: Union[float, Sequence[float]] = 0.01
    adc_bits: int = 10
    full_scale: float = 1.0
    switch_latency_us: float = 2.0
    intensity_high: float = 1.0
    intensity_low: float = 0.0

    def validate(self, n_nodes: int):
        g = np.asarray(self.gains, dtype=np.float64)
        if g.shape != (n_nodes, n_nodes):
            raise ScenarioError(f"gain matrix {g.shape} does not match {n_nodes} nodes")
        if (g < 0).any():
            raise ScenarioError("gains must be non-negative")
        if self.adc_bits < 1:
            raise ScenarioError("adc_bits must be at least 1")
        if self.full_scale <= 0:
            raise ScenarioError("full_scale must be positive")
        if self.switch_latency_us < 0:
            raise ScenarioError("switch latency cannot be negative")


class Transmission:
    """One registered emission: a symbol sequence at a fixed phase."""

    __slots__ = ("node", "start", "symbol_period", "symbols", "planned_end",
                 "actual_end", "end_handle", "label", "seq")

    def __init__(self, node: int, start: float, symbol_period: float,
                 symbols: np.ndarray, label: str, seq: int):
        self.node = node
        self.start = start
        self.symbol_period = symbol_period
        self.symbols = np.asarray(symbols, dtype=np.uint8)
        self.planned_end = start + self.symbols.size * symbol_period
        self.actual_end: Optional[float] = None
        self.end_handle = None
        self.label = label
        self.seq = seq

    @property
    def end(self) -> float:
        return self.actual_end if self.actual_end is not None else self.planned_end

    @property
    def n_emitted(self) -> int:
        return int(round((self.end - self.start) / self.symbol_period))

    def symbol_values_at(self, instants: np.ndarray) -> np.ndarray:
        """Symbol (0/1) under each instant; 0 outside the emission."""
        idx = np.floor((instants - self.start) / self.symbol_period).astype(np.int64)
        valid = (instants >= self.start) & (instants < self.end) & (idx < self.symbols.size)
        out = np.zeros(instants.shape, dtype=np.uint8)
        if valid.any():
            out[valid] = self.symbols[idx[valid]]
        return out

    def sample_instants(self) -> np.ndarray:
        n = self.n_emitted
        return self.start + (np.arange(n) + 0.5) * self.symbol_period


class _Led:
    __slots__ = ("mode", "effective_at")

    def __init__(self):
        self.mode = RX
        self.effective_at = 0.0


class OpticalChannel:
    def __init__(self, params: ChannelParams, sim, n_nodes: int, rngs):
        params.validate(n_nodes)
        self.params = params
        self.sim = sim
        self.n_nodes = n_nodes
        self.rngs = rngs
        self.gains = np.asarray(params.gains, dtype=np.float64)
        self.ambient = np.broadcast_to(
            np.asarray(params.ambient, dtype=np.float64), (n_nodes,)).copy()
        self.noise_sigma = np.broadcast_to(
            np.asarray(params.noise_sigma, dtype=np.float64), (n_nodes,)).copy()
        self._leds = [_Led() for _ in range(n_nodes)]
        self._active: List[Transmission] = []
        self._recent: List[Transmission] = []
        self._receivers: Dict[int, Callable] = {}
        self._listeners: List[Callable] = []
        self._tx_seq = 0

    # --- LED mode -------------------------------------------------------

    def set_mode(self, node: int, mode: str) -> float:
        """Request a mode; returns the time at which it becomes effective."""
        led = self._leds[node]
        if led.mode == mode:
            return led.effective_at
        led.mode = mode
        led.effective_at = self.sim.now + self.params.switch_latency_us
        return led.effective_at

    def mode_of(self, node: int):
        led = self._leds[node]
        return led.mode, led.effective_at

    def in_rx_since(self, node: int) -> Optional[float]:
        led = self._leds[node]
        return led.effective_at if led.mode == RX else None

    # --- physics --------------------------------------------------------

    def _overlapping(self, t0: float, t1: float, exclude: Optional[int]):
        txs = []
        for tx in self._active:
            if tx.node != exclude and tx.start < t1 and tx.end > t0:
                txs.append(tx)
        for tx in self._recent:
            if tx.node != exclude and tx.start < t1 and tx.end > t0:
                txs.append(tx)
        return txs

    def intensity_at(self, node: int, instants: np.ndarray,
                     exclude: Optional[int] = None) -> np.ndarray:
        """Noise-free received intensity at each instant, ambient excluded."""
        instants = np.asarray(instants, dtype=np.float64)
        if exclude is None:
            exclude = node
        total = np.zeros(instants.shape, dtype=np.float64)
        lo, hi = self.params.intensity_low, self.params.intensity_high
        if instants.size:
            for tx in self._overlapping(instants.min(), instants.max() + 1e-9, exclude):
                sym = tx.symbol_values_at(instants).astype(np.float64)
                total += self.gains[tx.node, node] * (lo + (hi - lo) * sym)
        return total

    def quantize(self, values: np.ndarray) -> np.ndarray:
        fs = self.params.full_scale
        levels = (1 << self.params.adc_bits) - 1
        counts = np.rint(np.clip(values, 0.0, fs) / fs * levels)
        return counts.astype(np.int64)

    def sense_counts(self, node: int, instants: np.ndarray) -> np.ndarray:
        """Noiseless ADC counts for carrier sensing."""
        return self.quantize(self.intensity_at(node, instants) + self.ambient[node])

    def sample(self, node: int, when: Optional[float] = None) -> int:
        """One ADC sample through the full front-end model, noise included."""
        t = self.sim.now if when is None else when
        led = self._leds[node]
        if led.mode != RX or t < led.effective_at:
            raise NotInRxMode(f"node {node} cannot sample at {t}")
        rng = self.rngs.get(node, "noise")
        value = (self.intensity_at(node, np.array([t]))[0] + self.ambient[node]
                 + rng.normal(0.0, self.noise_sigma[node]))
        return int(self.quantize(np.array([value]))[0])

    # --- emissions ------------------------------------------------------

    def attach_receiver(self, node: int, callback: Callable):
        """callback(transmission, counts) fires when a window was captured."""
        self._receivers[node] = callback

    def add_activity_listener(self, callback: Callable):
        """callback(kind, transmission) on 'start', 'end' and 'abort'."""
        self._listeners.append(callback)

    def _notify(self, kind: str, tx: Transmission):
        for listener in self._listeners:
            listener(kind, tx)

    def begin_transmission(self, node: int, symbols, symbol_period: float,
                           label: str = "") -> Transmission:
        led = self._leds[node]
        now = self.sim.now
        if led.mode != TX or now < led.effective_at:
            raise NotInTxMode(f"node {node} is not in transmit mode at {now}")
        symbols = np.asarray(symbols, dtype=np.uint8)
        if symbols.size == 0:
            raise ValueError("cannot transmit an empty symbol sequence")
        tx = Transmission(node, now, symbol_period, symbols, label, self._tx_seq)
        self._tx_seq += 1
        self._active.append(tx)
        tx.end_handle = self.sim.schedule_at(
            tx.planned_end, lambda: self._finish(tx), kind="tx_end")
        self._notify("start", tx)
        return tx

    def abort_transmission(self, tx: Transmission, n_symbols_emitted: int):
        """Cut an emission short after the given number of whole symbols."""
        self.sim.cancel(tx.end_handle)
        tx.actual_end = tx.start + n_symbols_emitted * tx.symbol_period
        tx.symbols = tx.symbols[:n_symbols_emitted]
        self._finish(tx, aborted=True)

    def covering_end(self, t: float) -> Optional[float]:
        """Latest known end among emissions that cover instant t, if any."""
        best = None
        for tx in self._active:
            if tx.start <= t < tx.end and (best is None or tx.end > best):
                best = tx.end
        return best

    def _finish(self, tx: Transmission, aborted: bool = False):
        if tx.actual_end is None:
            tx.actual_end = tx.planned_end
        self._active.remove(tx)
        self._recent.append(tx)
        self._prune()
        self._deliver_captures(tx)
        self._notify("abort" if aborted else "end", tx)

    def _prune(self):
        horizon = self.sim.now - _RETENTION_US
        self._recent = [t for t in self._recent if t.end >= horizon]

    def _deliver_captures(self, tx: Transmission):
        if not tx.symbols.size:
            return
        instants = tx.sample_instants()
        for node in range(self.n_nodes):
            if node == tx.node or self.gains[tx.node, node] <= 0.0:
                continue
            callback = self._receivers.get(node)
            if callback is None:
                continue
            led = self._leds[node]
            if led.mode != RX or led.effective_at > tx.start:
                continue  # missed some of the window; no capture
            values = (self.intensity_at(node, instants) + self.ambient[node])
            sigma = self.noise_sigma[node]
            if sigma > 0:
                values = values + self.rngs.get(node, "noise").normal(
                    0.0, sigma, instants.size)
            callback(tx, self.quantize(values))
