"""Wire a scenario into a live simulation and run it to completion.

The runtime object owns the scheduler, channel, nodes and flows for one
run.  Runs are single-threaded and deterministic; sweeps just build a
fresh runtime per point.  At the end of a run each node's counters are
appended to the trace so the dump alone suffices for analysis.
"""

from dataclasses import dataclass
from typing import Dict, List

from . import metrics as metrics_mod
from .channel import OpticalChannel
from .frame import coded_bytes, frame_symbols
from .kernel import RngStreams, Simulator
from .mac import MacNode, MacParams
from .scenario import ScenarioSpec, two_node_spec
from .trace import Trace
from .traffic import build_flows


@dataclass
class RunResult:
    spec: ScenarioSpec
    trace: Trace
    metrics: dict
    flows: List
    nodes: Dict[int, MacNode]

    def flow_metric(self, flow_id: int) -> dict:
        return self.metrics["flows"][flow_id]


class Runtime:
    def __init__(self, spec: ScenarioSpec):
        spec.validate()
        self.spec = spec
        self.sim = Simulator()
        self.rngs = RngStreams(spec.seed)
        self.trace = Trace()
        params = spec.channel_params()
        self.channel = OpticalChannel(params, self.sim, len(spec.nodes), self.rngs)
        self.nodes = {}
        for idx, node_spec in enumerate(spec.nodes):
            self.nodes[node_spec.address] = MacNode(
                idx, node_spec.address, self.sim, self.channel, spec.mac,
                self.rngs, self.trace)
        self.flows = build_flows(spec.flows, self.nodes, self.sim, self.trace)

    def run(self) -> RunResult:
        for flow in self.flows:
            flow.start()
        self.sim.run_until(self.spec.duration_us)
        for node in self.nodes.values():
            self.trace.emit(self.sim.now, node.node_id, "counters",
                            node.counters.as_dict())
        report = metrics_mod.compute_metrics(self.trace, self.spec.duration_us)
        return RunResult(spec=self.spec, trace=self.trace, metrics=report,
                         flows=self.flows, nodes=self.nodes)


def run_scenario(spec: ScenarioSpec) -> RunResult:
    return Runtime(spec).run()


# ---------------------------------------------------------------------------
# Closed-form service model used for calibration and sweep annotation.

def cycle_time_us(payload_bytes: int, mac: MacParams,
                  switch_latency_us: float = 2.0) -> float:
    """Serial saturation cycle: sense, switch, data, peer processing,
    switch, ack, then submission processing for the next frame."""
    ts = mac.symbol_period_us
    c = coded_bytes(payload_bytes)
    t_data = frame_symbols(payload_bytes) * ts
    t_ack = frame_symbols(0) * ts
    return (mac.basic_sense_symbols * ts + switch_latency_us + t_data
            + mac.proc_us(c) + switch_latency_us + t_ack + mac.proc_us(c))


def model_goodput_kbps(payload_bytes: int, mac: MacParams,
                       switch_latency_us: float = 2.0) -> float:
    return 8.0 * payload_bytes / cycle_time_us(payload_bytes, mac,
                                               switch_latency_us) * 1000.0


def fit_overhead(anchors=((50, 6.0), (1000, 18.0)),
                 symbol_period_us: float = 20.0,
                 sense_symbols: int = 16,
                 switch_latency_us: float = 2.0):
    """Solve the affine processing overhead hitting two goodput anchors.

    Each anchor pins 8P/goal = cycle(P) with overhead charged twice per
    cycle, once on the receive path and once on the submit path, giving
    two linear equations in (a, b).
    """
    base = MacParams(symbol_period_us=symbol_period_us,
                     basic_sense_symbols=sense_symbols)
    (p_lo, g_lo), (p_hi, g_hi) = anchors

    def extra(p, goal):
        return (8.0 * p / goal * 1000.0
                - cycle_time_us(p, base, switch_latency_us))

    c_lo, c_hi = coded_bytes(p_lo), coded_bytes(p_hi)
    if c_lo == c_hi:
        raise ValueError("anchor payloads must differ in coded size")
    b = (extra(p_hi, g_hi) - extra(p_lo, g_lo)) / (2.0 * (c_hi - c_lo))
    a = extra(p_lo, g_lo) / 2.0 - b * c_lo
    if a < 0 or b < 0:
        raise ValueError(f"anchors imply negative overhead (a={a}, b={b})")
    return a, b


def saturation_sweep(payloads, duration_s: float = 30.0, seed: int = 1,
                     proc=None, distance_m: float = 0.6) -> List[dict]:
    """One saturated two-node run per payload size; returns summary rows."""
    rows = []
    for payload in payloads:
        spec = two_node_spec(payload, duration_s, seed=seed,
                             distance_m=distance_m,
                             name=f"saturation_{payload}", proc=proc)
        result = run_scenario(spec)
        flow = result.flow_metric(0)
        rows.append({
            "payload_bytes": payload,
            "goodput_kbps": flow["steady_kbps"],
            "mean_kbps": flow["mean_kbps"],
            "model_kbps": model_goodput_kbps(
                payload, spec.mac, spec.channel.switch_latency_us),
            "delivered": flow["delivered_unique"],
        })
    return rows
