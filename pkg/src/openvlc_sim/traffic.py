"""Traffic generators and host-side accounting.

Every generated payload opens with a six-byte tag, a 32-bit sequence
number and a 16-bit flow id, so sinks can spot duplicates and match
echo replies to requests from the payload alone; the rest is filler.
Duplicates happen legitimately on this link: a lost acknowledgement
makes the sender retransmit a frame the sink already delivered up, and
the MAC does not suppress them, so the flow layer keeps a seen-set.

Three generator kinds cover the experiments: a saturation source that
keeps its queue topped up through the queue-space hook, a fixed-schedule
flood, and a fixed-schedule ping whose peer echoes payloads back.
Submission schedules never adapt to delivery, so offered load is a pure
function of the scenario.
"""

import struct
from typing import Dict, Optional

from .errors import QueueFull
from .mac import MacNode
from .scenario import FlowSpec

PROTO_DATAGRAM = 1
PROTO_ECHO_REQUEST = 2
PROTO_ECHO_REPLY = 3

TAG_BYTES = 6
PAD_BYTE = 0x5A


def make_payload(seq: int, flow_id: int, size: int) -> bytes:
    if size < TAG_BYTES:
        raise ValueError(f"payload below tag size {TAG_BYTES}")
    return struct.pack(">IH", seq & 0xFFFFFFFF, flow_id) \
        + bytes([PAD_BYTE]) * (size - TAG_BYTES)


def parse_tag(payload: bytes):
    seq, flow_id = struct.unpack_from(">IH", payload)
    return seq, flow_id


class Flow:
    """Base bookkeeping common to all generator kinds."""

    def __init__(self, flow_id: int, spec: FlowSpec, src: MacNode,
                 sim, trace):
        self.flow_id = flow_id
        self.spec = spec
        self.src = src
        self.sim = sim
        self.trace = trace
        self.next_seq = 0
        self.submitted = 0
        self.send_failures = 0
        self.delivered_unique = 0
        self.delivered_bits = 0
        self._seen = set()

    def start(self):
        raise NotImplementedError

    # -- sink side -------------------------------------------------------

    def on_sink_rx(self, node: MacNode, seq: int, n_payload: int):
        if seq in self._seen:
            node.note_duplicate()
            return
        self._seen.add(seq)
        self.delivered_unique += 1
        self.delivered_bits += 8 * n_payload
        self.trace.emit(self.sim.now, node.node_id, "app_rx",
                        {"flow": self.flow_id, "seq": seq, "bits": 8 * n_payload})

    # -- source side -----------------------------------------------------

    def _submit(self, protocol: int) -> Optional[int]:
        # bump before host_send: the queue-space hook can reenter here
        seq = self.next_seq
        self.next_seq += 1
        payload = make_payload(seq, self.flow_id, self.spec.payload_bytes)
        try:
            self.src.host_send(self.spec.dst, protocol, payload)
        except QueueFull:
            self.send_failures += 1
            self.trace.emit(self.sim.now, self.src.node_id, "app_send_fail",
                            {"flow": self.flow_id, "seq": seq})
            return None
        self.submitted += 1
        self.trace.emit(self.sim.now, self.src.node_id, "app_tx",
                        {"flow": self.flow_id, "seq": seq,
                         "bits": 8 * self.spec.payload_bytes})
        return seq


class SaturationFlow(Flow):
    """Keeps the source queue full so the MAC never idles."""

    def start(self):
        prev_hook = self.src.on_queue_space
        def hook(node):
            if prev_hook is not None:
                prev_hook(node)
            self._top_up()
        self.src.on_queue_space = hook
        self.sim.schedule_at(self.spec.start_s * 1e6, self._top_up,
                             kind="flow_start")

    def _top_up(self):
        while True:
            if self._submit(PROTO_DATAGRAM) is None:
                break


class FloodFlow(Flow):
    """One datagram per interval on a fixed schedule; overruns are dropped."""

    def start(self):
        self._tick_at(self.spec.start_s * 1e6)

    def _tick_at(self, at_us: float):
        self.sim.schedule_at(at_us, lambda: self._tick(at_us), kind="flow_tick")

    def _tick(self, at_us: float):
        self._submit(PROTO_DATAGRAM)
        self._tick_at(at_us + self.spec.interval_s * 1e6)


class PingFlow(Flow):
    """Fixed-schedule echo requests; RTT measured submission to delivery."""

    def __init__(self, *args):
        super().__init__(*args)
        self.sent_at: Dict[int, float] = {}
        self.rtts_us = []

    def start(self):
        self._tick_at(self.spec.start_s * 1e6)

    def _tick_at(self, at_us: float):
        self.sim.schedule_at(at_us, lambda: self._tick(at_us), kind="flow_tick")

    def _tick(self, at_us: float):
        seq = self._submit(PROTO_ECHO_REQUEST)
        if seq is not None:
            self.sent_at[seq] = self.sim.now
        self._tick_at(at_us + self.spec.interval_s * 1e6)

    def on_reply(self, node: MacNode, seq: int):
        t0 = self.sent_at.pop(seq, None)
        if t0 is None:
            node.note_duplicate()
            return
        rtt = self.sim.now - t0
        self.rtts_us.append(rtt)
        self.trace.emit(self.sim.now, node.node_id, "rtt",
                        {"flow": self.flow_id, "seq": seq, "rtt_us": rtt})

    @property
    def lost(self) -> int:
        return len(self.sent_at)


_KINDS = {"saturation": SaturationFlow, "flood": FloodFlow, "ping": PingFlow}


def build_flows(flow_specs, nodes_by_addr: Dict[int, MacNode], sim, trace):
    """Instantiate flows and register the protocol handlers they need."""
    flows = [_KINDS[fs.kind](i, fs, nodes_by_addr[fs.src], sim, trace)
             for i, fs in enumerate(flow_specs)]
    by_id = {f.flow_id: f for f in flows}

    def on_datagram(node, frame):
        seq, fid = parse_tag(frame.payload)
        flow = by_id.get(fid)
        if flow is not None:
            flow.on_sink_rx(node, seq, len(frame.payload))

    def on_echo_request(node, frame):
        seq, fid = parse_tag(frame.payload)
        flow = by_id.get(fid)
        if flow is not None:
            flow.on_sink_rx(node, seq, len(frame.payload))
        try:
            node.host_send(frame.src, PROTO_ECHO_REPLY, frame.payload)
        except QueueFull:
            pass  # reply lost; the requester counts it as a lost ping

    def on_echo_reply(node, frame):
        seq, fid = parse_tag(frame.payload)
        flow = by_id.get(fid)
        if isinstance(flow, PingFlow):
            flow.on_reply(node, seq)

    for node in nodes_by_addr.values():
        node.register_handler(PROTO_DATAGRAM, on_datagram)
        node.register_handler(PROTO_ECHO_REQUEST, on_echo_request)
        node.register_handler(PROTO_ECHO_REPLY, on_echo_reply)
    return flows
