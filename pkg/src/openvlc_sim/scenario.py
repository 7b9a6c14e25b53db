"""Scenario files: one JSON document describing a complete run.

A scenario names its nodes (16-bit addresses, optionally planar
positions), the optical channel, the MAC parameters, the traffic flows,
a seed and a duration.  Link gains come either from node positions via
the inverse-square law scaled by g0, or from an explicit matrix; exactly
one of the two must be given.  Unknown keys anywhere in the document are
rejected so typos fail loudly instead of silently running defaults.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .channel import ChannelParams, link_gain
from .errors import ScenarioError
from .frame import BROADCAST
from .mac import MacParams

FLOW_KINDS = ("saturation", "ping", "flood")

DEFAULT_G0 = 0.36  # unit gain at 0.6 m


@dataclass
class NodeSpec:
    address: int
    pos_m: Optional[Sequence[float]] = None

    def validate(self):
        if not 1 <= self.address <= 0xFFFF or self.address == BROADCAST:
            raise ScenarioError(f"node address {self.address} out of range")
        if self.pos_m is not None and len(self.pos_m) != 2:
            raise ScenarioError("pos_m must be [x, y] in metres")


@dataclass
class FlowSpec:
    kind: str
    src: int
    dst: int
    payload_bytes: int
    interval_s: Optional[float] = None
    start_s: float = 0.0

    def validate(self, addresses):
        if self.kind not in FLOW_KINDS:
            raise ScenarioError(f"unknown flow kind {self.kind!r}")
        for end, label in ((self.src, "src"), (self.dst, "dst")):
            if end not in addresses:
                raise ScenarioError(f"flow {label} {end} is not a declared node")
        if self.src == self.dst:
            raise ScenarioError("flow endpoints must differ")
        if self.payload_bytes < 6:
            raise ScenarioError("tagged payloads need at least 6 bytes")
        if self.kind in ("ping", "flood"):
            if self.interval_s is None or self.interval_s <= 0:
                raise ScenarioError(f"{self.kind} flow needs interval_s > 0")
        if self.start_s < 0:
            raise ScenarioError("start_s cannot be negative")


@dataclass
class ScenarioSpec:
    name: str
    seed: int
    duration_s: float
    nodes: List[NodeSpec]
    flows: List[FlowSpec]
    mac: MacParams = field(default_factory=MacParams)
    channel: ChannelParams = None
    gains: Optional[Sequence[Sequence[float]]] = None
    g0: float = DEFAULT_G0

    def __post_init__(self):
        if self.channel is None:
            self.channel = ChannelParams(gains=None)

    def validate(self):
        if not self.nodes:
            raise ScenarioError("scenario declares no nodes")
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        addresses = [n.address for n in self.nodes]
        if len(set(addresses)) != len(addresses):
            raise ScenarioError("node addresses must be unique")
        for node in self.nodes:
            node.validate()
        for flow in self.flows:
            flow.validate(set(addresses))
        self.mac.validate()
        if (self.gains is None) == (not self._has_positions()):
            raise ScenarioError("give either node positions or an explicit "
                                "gains matrix, not both and not neither")
        self.gain_matrix()  # shape and sign checks

    def _has_positions(self) -> bool:
        return all(n.pos_m is not None for n in self.nodes)

    def gain_matrix(self) -> np.ndarray:
        n = len(self.nodes)
        if self.gains is not None:
            g = np.asarray(self.gains, dtype=np.float64)
            if g.shape != (n, n):
                raise ScenarioError(f"gains must be {n}x{n}")
            if (g < 0).any():
                raise ScenarioError("gains cannot be negative")
            return g
        g = np.zeros((n, n))
        pos = np.asarray([n_.pos_m for n_ in self.nodes], dtype=np.float64)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                d = float(np.hypot(*(pos[i] - pos[j])))
                g[i, j] = link_gain(d, self.g0)
        return g

    @property
    def duration_us(self) -> float:
        return self.duration_s * 1e6

    def channel_params(self) -> ChannelParams:
        params = dataclasses.replace(self.channel, gains=self.gain_matrix())
        params.validate(len(self.nodes))
        return params


def _from_dict(cls, data: dict, path: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in {path}")
    return cls(**data)


def scenario_from_dict(data: dict) -> ScenarioSpec:
    data = dict(data)
    top_known = {"name", "seed", "duration_s", "nodes", "flows", "mac",
                 "channel", "gains", "g0"}
    unknown = set(data) - top_known
    if unknown:
        raise ScenarioError(f"unknown top-level key(s) {sorted(unknown)}")
    for req in ("name", "seed", "duration_s", "nodes", "flows"):
        if req not in data:
            raise ScenarioError(f"missing required key {req!r}")
    nodes = [_from_dict(NodeSpec, n, f"nodes[{i}]")
             for i, n in enumerate(data.pop("nodes"))]
    flows = [_from_dict(FlowSpec, f, f"flows[{i}]")
             for i, f in enumerate(data.pop("flows"))]
    mac = _from_dict(MacParams, data.pop("mac", {}), "mac")
    channel_dict = dict(data.pop("channel", {}))
    if "gains" in channel_dict:
        raise ScenarioError("gains belongs at the top level, not under channel")
    channel = _from_dict(ChannelParams, {"gains": None, **channel_dict}, "channel")
    spec = ScenarioSpec(nodes=nodes, flows=flows, mac=mac, channel=channel, **data)
    spec.validate()
    return spec


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    out = {
        "name": spec.name,
        "seed": spec.seed,
        "duration_s": spec.duration_s,
        "nodes": [{"address": n.address,
                   "pos_m": None if n.pos_m is None else list(n.pos_m)}
                  for n in spec.nodes],
        "flows": [dataclasses.asdict(f) for f in spec.flows],
        "mac": dataclasses.asdict(spec.mac),
        "channel": {k: v for k, v in dataclasses.asdict(spec.channel).items()
                    if k != "gains"},
        "g0": spec.g0,
    }
    if spec.gains is not None:
        out["gains"] = np.asarray(spec.gains).tolist()
    return out


def load_scenario(path) -> ScenarioSpec:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return scenario_from_dict(data)
    except TypeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def save_scenario(spec: ScenarioSpec, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Programmatic builders for the common topologies.

def two_node_spec(payload_bytes: int, duration_s: float, seed: int = 1,
                  distance_m: float = 0.6, name: str = "two_node",
                  proc: Optional[tuple] = None) -> ScenarioSpec:
    """Saturated unicast between two facing nodes."""
    mac = MacParams()
    if proc is not None:
        mac.proc_overhead_a_us, mac.proc_overhead_b_us = proc
    spec = ScenarioSpec(
        name=name, seed=seed, duration_s=duration_s,
        nodes=[NodeSpec(1, (0.0, 0.0)), NodeSpec(2, (distance_m, 0.0))],
        flows=[FlowSpec("saturation", src=1, dst=2, payload_bytes=payload_bytes)],
        mac=mac)
    spec.validate()
    return spec


def ping_spec(interval_s: float, duration_s: float, payload_bytes: int = 10,
              seed: int = 1, distance_m: float = 0.6,
              proc: Optional[tuple] = None, name: str = "ping") -> ScenarioSpec:
    mac = MacParams()
    if proc is not None:
        mac.proc_overhead_a_us, mac.proc_overhead_b_us = proc
    spec = ScenarioSpec(
        name=name, seed=seed, duration_s=duration_s,
        nodes=[NodeSpec(1, (0.0, 0.0)), NodeSpec(2, (distance_m, 0.0))],
        flows=[FlowSpec("ping", src=1, dst=2, payload_bytes=payload_bytes,
                        interval_s=interval_s)],
        mac=mac)
    spec.validate()
    return spec


def uplink_spec(payload_bytes: int, duration_s: float, seed: int = 3,
                interval_s: float = 0.25, proc: Optional[tuple] = None,
                name: str = "uplink") -> ScenarioSpec:
    """Two senders flood one sink through CSMA/CD contention.

    The senders sit at the two top corners of a right triangle with the
    sink below: both uplink gains are 1.0 and the sender-to-sender gain
    lands at exactly 0.5, strong enough for carrier sensing but weak
    enough that an ACK still slices correctly under a contending frame.
    The contention window is widened so the backoff spread covers the
    driver turnaround between a frame and its ACK; with the stock narrow
    window every pending contender fires inside that gap and the loser
    starves.
    """
    mac = MacParams(cw_min=512, cw_max=1024)
    if proc is not None:
        mac.proc_overhead_a_us, mac.proc_overhead_b_us = proc
    reach = 0.6 / math.sqrt(2)
    spec = ScenarioSpec(
        name=name, seed=seed, duration_s=duration_s,
        nodes=[NodeSpec(1, (-reach, reach)), NodeSpec(2, (reach, reach)),
               NodeSpec(3, (0.0, 0.0))],
        flows=[FlowSpec("flood", src=1, dst=3, payload_bytes=payload_bytes,
                        interval_s=interval_s),
               FlowSpec("flood", src=2, dst=3, payload_bytes=payload_bytes,
                        interval_s=interval_s)],
        mac=mac)
    spec.validate()
    return spec


def downlink_spec(payload_bytes: int, duration_s: float, interval_s: float,
                  seed: int = 1, proc: Optional[tuple] = None,
                  name: str = "downlink") -> ScenarioSpec:
    """One source floods two sinks; staggered starts interleave the queues."""
    mac = MacParams()
    if proc is not None:
        mac.proc_overhead_a_us, mac.proc_overhead_b_us = proc
    ones = [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]
    spec = ScenarioSpec(
        name=name, seed=seed, duration_s=duration_s,
        nodes=[NodeSpec(1), NodeSpec(2), NodeSpec(3)],
        flows=[FlowSpec("flood", src=1, dst=2, payload_bytes=payload_bytes,
                        interval_s=interval_s),
               FlowSpec("flood", src=1, dst=3, payload_bytes=payload_bytes,
                        interval_s=interval_s, start_s=interval_s / 2)],
        mac=mac, gains=ones)
    spec.validate()
    return spec
