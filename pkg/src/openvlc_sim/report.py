"""Artifacts written next to a run: delimited series, JSON summary, figures.

The CSV files are the analysis contract; one row per reporting interval
per flow for throughput, one row per echo for RTT.  The figures are a
convenience rendered from exactly the same numbers, never from private
simulator state, so a dumped trace can reproduce them offline.
"""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .scenario import scenario_to_dict

THROUGHPUT_FIG = "throughput.png"
RTT_FIG = "rtt_cdf.png"
SWEEP_FIG = "goodput_vs_payload.png"


def write_summary(result, path):
    doc = {"scenario": scenario_to_dict(result.spec), "metrics": result.metrics}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_metrics_csv(result, path):
    """One row per reporting interval per flow."""
    interval_s = result.metrics["interval_s"]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["flow", "interval", "t_start_s", "t_end_s", "kbps"])
        for fid in sorted(result.metrics["flows"]):
            for idx, kbps in enumerate(result.metrics["flows"][fid]["series_kbps"]):
                out.writerow([fid, idx, idx * interval_s, (idx + 1) * interval_s,
                              f"{kbps:.6f}"])


def write_rtt_csv(result, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["flow", "seq", "t_us", "rtt_us"])
        for row in result.trace.of_kind("rtt"):
            out.writerow([row["flow"], row["seq"], f"{row['t_us']:.3f}",
                          f"{row['rtt_us']:.3f}"])


def plot_throughput(result, path):
    interval_s = result.metrics["interval_s"]
    fig, ax = plt.subplots(figsize=(7, 4))
    for fid in sorted(result.metrics["flows"]):
        series = result.metrics["flows"][fid]["series_kbps"]
        edges = np.arange(1, len(series) + 1) * interval_s
        ax.plot(edges, series, marker="o", label=f"flow {fid}")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("throughput (kb/s)")
    ax.set_title(result.spec.name)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rtt_cdf(result, path):
    rtts = [row["rtt_us"] for row in result.trace.of_kind("rtt")]
    if not rtts:
        return False
    xs = np.sort(np.asarray(rtts)) / 1000.0
    ys = np.arange(1, xs.size + 1) / xs.size
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.step(xs, ys, where="post")
    ax.axvline(200.0, color="gray", linestyle="--", linewidth=1, label="200 ms")
    ax.set_xlabel("round-trip time (ms)")
    ax.set_ylabel("fraction of echoes")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(result.spec.name)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def write_run_report(result, out_dir, plots: bool = True,
                     trace: bool = True) -> list:
    """Write every artifact for one run; returns the paths created."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    path = out_dir / "summary.json"
    write_summary(result, path)
    paths.append(path)

    path = out_dir / "metrics.csv"
    write_metrics_csv(result, path)
    paths.append(path)

    if any(True for _ in result.trace.of_kind("rtt")):
        path = out_dir / "rtt.csv"
        write_rtt_csv(result, path)
        paths.append(path)

    if trace:
        path = out_dir / "trace.jsonl"
        result.trace.write_jsonl(path)
        paths.append(path)

    if plots:
        path = out_dir / THROUGHPUT_FIG
        plot_throughput(result, path)
        paths.append(path)
        path = out_dir / RTT_FIG
        if plot_rtt_cdf(result, path):
            paths.append(path)

    return paths


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["payload_bytes", "goodput_kbps", "mean_kbps",
                      "model_kbps", "delivered"])
        for row in rows:
            out.writerow([row["payload_bytes"], f"{row['goodput_kbps']:.6f}",
                          f"{row['mean_kbps']:.6f}", f"{row['model_kbps']:.6f}",
                          row["delivered"]])


def plot_sweep(rows, path):
    payloads = [row["payload_bytes"] for row in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(payloads, [row["goodput_kbps"] for row in rows],
            marker="o", label="simulated")
    ax.plot(payloads, [row["model_kbps"] for row in rows],
            linestyle="--", label="service model")
    ax.set_xlabel("payload (bytes)")
    ax.set_ylabel("saturation goodput (kb/s)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_sweep_report(rows, out_dir, plots: bool = True) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "sweep.csv"]
    write_sweep_csv(rows, paths[0])
    if plots:
        path = out_dir / SWEEP_FIG
        plot_sweep(rows, path)
        paths.append(path)
    return paths
