"""Deterministic discrete-event simulator for an LED-based visible light
networking stack: on-off keying with Manchester coding, framed link layer
with CRC and block FEC, CSMA/CD medium access, a half-duplex optical
channel model, and a scenario harness with metric reporting.
"""

from .channel import ChannelParams, OpticalChannel, link_gain
from .errors import OpenVlcError
from .frame import BROADCAST, MacFrame, coded_bytes, frame_symbols
from .harness import (RunResult, Runtime, cycle_time_us, fit_overhead,
                      model_goodput_kbps, run_scenario, saturation_sweep)
from .kernel import RngStreams, Simulator
from .mac import MacNode, MacParams
from .metrics import compute_metrics, jain_index
from .scenario import (FlowSpec, NodeSpec, ScenarioSpec, downlink_spec,
                       load_scenario, ping_spec, save_scenario, two_node_spec,
                       uplink_spec)
from .trace import Trace

__version__ = "0.1.0"

__all__ = [
    "BROADCAST",
    "ChannelParams",
    "FlowSpec",
    "MacFrame",
    "MacNode",
    "MacParams",
    "NodeSpec",
    "OpenVlcError",
    "OpticalChannel",
    "RngStreams",
    "RunResult",
    "Runtime",
    "ScenarioSpec",
    "Simulator",
    "Trace",
    "coded_bytes",
    "compute_metrics",
    "cycle_time_us",
    "downlink_spec",
    "fit_overhead",
    "frame_symbols",
    "jain_index",
    "link_gain",
    "load_scenario",
    "model_goodput_kbps",
    "ping_spec",
    "run_scenario",
    "saturation_sweep",
    "save_scenario",
    "two_node_spec",
    "uplink_spec",
]
