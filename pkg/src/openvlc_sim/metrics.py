"""Metric computation from the event journal.

Everything here is derived from trace rows alone, so any dumped run can
be re-analyzed offline without touching simulator state.  Throughput is
goodput: bits of unique, acknowledged-path payload delivered to hosts,
duplicates excluded (the journal already holds one app_rx row per unique
sequence number).  The reporting series buckets deliveries into fixed
intervals, ten simulated seconds by default.
"""

from collections import defaultdict

import numpy as np

REPORT_INTERVAL_S = 10.0


def jain_index(values) -> float:
    """(sum x)^2 / (n * sum x^2); 1.0 when all equal, 1/n when one hogs."""
    xs = np.asarray(list(values), dtype=np.float64)
    if xs.size == 0:
        return 1.0
    den = xs.size * float(np.sum(xs * xs))
    if den == 0.0:
        return 1.0
    return float(np.sum(xs)) ** 2 / den


def interval_series(times_us, bits, duration_us: float,
                    interval_s: float = REPORT_INTERVAL_S) -> np.ndarray:
    """Throughput per reporting interval in kb/s; partial tail dropped."""
    interval_us = interval_s * 1e6
    n_bins = int(duration_us // interval_us)
    if n_bins == 0:
        n_bins = 1
        interval_us = duration_us
    series = np.zeros(n_bins)
    for t, b in zip(times_us, bits):
        idx = int(t // interval_us)
        if idx < n_bins:
            series[idx] += b
    return series / (interval_us / 1e6) / 1000.0


def steady_goodput_kbps(times_us, bits) -> float:
    """Cycle-rate estimator: bits after the first delivery over the span.

    Free of the initial ramp and of the truncated cycle at the end of the
    run, so a deterministic saturated link yields exactly bits/cycle.
    """
    if len(times_us) < 2:
        return 0.0
    span_us = times_us[-1] - times_us[0]
    return sum(bits[1:]) / span_us * 1000.0


def rtt_fraction_below(rtts_us, threshold_us: float) -> float:
    if not len(rtts_us):
        return 0.0
    arr = np.asarray(rtts_us)
    return float(np.count_nonzero(arr < threshold_us)) / arr.size


def compute_metrics(trace, duration_us: float,
                    interval_s: float = REPORT_INTERVAL_S) -> dict:
    """Aggregate per-flow and per-node figures from a trace."""
    rx_times = defaultdict(list)
    rx_bits = defaultdict(list)
    tx_count = defaultdict(int)
    fail_count = defaultdict(int)
    rtts = defaultdict(list)
    counters = {}
    for row in trace.rows:
        kind = row["kind"]
        if kind == "app_rx":
            rx_times[row["flow"]].append(row["t_us"])
            rx_bits[row["flow"]].append(row["bits"])
        elif kind == "app_tx":
            tx_count[row["flow"]] += 1
        elif kind == "app_send_fail":
            fail_count[row["flow"]] += 1
        elif kind == "rtt":
            rtts[row["flow"]].append(row["rtt_us"])
        elif kind == "counters":
            counters[row["node"]] = {k: v for k, v in row.items()
                                     if k not in ("t_us", "node", "kind")}

    flow_ids = sorted(set(rx_times) | set(tx_count) | set(rtts) | set(fail_count))
    flows = {}
    for fid in flow_ids:
        times, bits = rx_times[fid], rx_bits[fid]
        series = interval_series(times, bits, duration_us, interval_s)
        flows[fid] = {
            "submitted": tx_count[fid],
            "send_failures": fail_count[fid],
            "delivered_unique": len(times),
            "delivered_bits": int(sum(bits)),
            "mean_kbps": sum(bits) / duration_us * 1000.0,
            "median_interval_kbps": float(np.median(series)) if series.size else 0.0,
            "steady_kbps": steady_goodput_kbps(times, bits),
            "series_kbps": series.tolist(),
        }
        if rtts[fid]:
            arr = np.sort(np.asarray(rtts[fid]))
            flows[fid]["rtt"] = {
                "count": arr.size,
                "mean_ms": float(arr.mean()) / 1000.0,
                "p50_ms": float(np.median(arr)) / 1000.0,
                "p90_ms": float(np.percentile(arr, 90)) / 1000.0,
                "max_ms": float(arr.max()) / 1000.0,
                "fraction_below_200ms": rtt_fraction_below(arr, 200e3),
            }
    return {
        "duration_s": duration_us / 1e6,
        "interval_s": interval_s,
        "flows": flows,
        "jain_index": jain_index(f["mean_kbps"] for f in flows.values()),
        "counters": counters,
    }
