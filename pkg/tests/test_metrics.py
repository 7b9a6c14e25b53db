"""Metric derivations from synthetic journals."""

import numpy as np
import pytest

from openvlc_sim.metrics import (compute_metrics, interval_series, jain_index,
                                 rtt_fraction_below, steady_goodput_kbps)
from openvlc_sim.trace import Trace

from oracles import jain_oracle


def test_jain_identities():
    assert jain_index([5.0, 5.0, 5.0]) == pytest.approx(1.0)
    assert jain_index([3.0, 0.0]) == pytest.approx(0.5)
    assert jain_index([]) == 1.0
    assert jain_index([0.0, 0.0]) == 1.0
    values = [1.0, 2.5, 4.0, 0.5]
    assert jain_index(values) == pytest.approx(jain_oracle(values))


def test_interval_series_buckets_and_drops_tail():
    # deliveries at 1 s and 11 s; the 25 s run keeps two whole buckets
    series = interval_series([1e6, 11e6], [8000.0, 16000.0], 25e6)
    assert series.tolist() == [0.8, 1.6]


def test_interval_series_short_run_single_bucket():
    series = interval_series([0.5e6], [4000.0], 2e6)
    assert series.tolist() == [2.0]


def test_steady_goodput_excludes_ramp():
    # four deliveries, one cycle of 2 s each after the first
    times = [3e6, 5e6, 7e6, 9e6]
    bits = [800.0, 800.0, 800.0, 800.0]
    assert steady_goodput_kbps(times, bits) == pytest.approx(0.4)
    assert steady_goodput_kbps([1e6], [800.0]) == 0.0


def test_rtt_fraction_below():
    rtts = [50e3, 150e3, 199e3, 200e3, 500e3]
    assert rtt_fraction_below(rtts, 200e3) == pytest.approx(3 / 5)
    assert rtt_fraction_below([], 200e3) == 0.0


def test_compute_metrics_from_synthetic_trace():
    trace = Trace()
    for seq in range(4):
        trace.emit(seq * 1e6, 0, "app_tx", {"flow": 0, "seq": seq})
    for seq in range(3):  # one submission never made it
        trace.emit(2e6 + seq * 1e6, 1, "app_rx",
                   {"flow": 0, "seq": seq, "bits": 8000})
    trace.emit(9e6, 0, "app_send_fail", {"flow": 0})
    trace.emit(4e6, 0, "rtt", {"flow": 1, "seq": 0, "rtt_us": 120e3})
    trace.emit(8e6, 0, "rtt", {"flow": 1, "seq": 1, "rtt_us": 260e3})
    trace.emit(20e6, 0, "counters", {"tx_data": 7})
    trace.emit(20e6, 1, "counters", {"tx_data": 5})

    report = compute_metrics(trace, 20e6)
    flow = report["flows"][0]
    assert flow["submitted"] == 4
    assert flow["send_failures"] == 1
    assert flow["delivered_unique"] == 3
    assert flow["delivered_bits"] == 24000
    assert flow["mean_kbps"] == pytest.approx(1.2)
    assert flow["series_kbps"] == pytest.approx([2.4, 0.0])

    rtt = report["flows"][1]["rtt"]
    assert rtt["count"] == 2
    assert rtt["p50_ms"] == pytest.approx(190.0)
    assert rtt["max_ms"] == pytest.approx(260.0)
    assert rtt["fraction_below_200ms"] == pytest.approx(0.5)

    assert report["counters"][0]["tx_data"] == 7
    assert report["counters"][1]["tx_data"] == 5
    assert report["duration_s"] == 20.0


def test_trace_jsonl_round_trip(tmp_path):
    trace = Trace()
    trace.emit(1.5, 0, "submit", {"dst": 2, "bits": 80})
    trace.emit(2.5, -1, "note", None)
    path = tmp_path / "t.jsonl"
    trace.write_jsonl(path)
    again = Trace.read_jsonl(path)
    assert again.rows == trace.rows
    assert len(again) == 2
