"""Command-line front end: run scenarios, sweep payloads, calibrate the
service model, and poke at the frame codec for debugging.
"""

import argparse
import json
import sys

import numpy as np

from . import report
from .errors import OpenVlcError
from .frame import MacFrame, frame_to_symbols, symbols_to_frame
from .harness import (fit_overhead, model_goodput_kbps, run_scenario,
                      saturation_sweep)
from .mac import MacParams
from .phy import locate_frame, slice_symbols
from .scenario import load_scenario


def parse_payloads(text: str):
    """Either an inclusive range "50..1000:50" or a comma list "50,200"."""
    if ".." in text:
        lo_s, rest = text.split("..", 1)
        hi_s, _, step_s = rest.partition(":")
        if not step_s:
            raise argparse.ArgumentTypeError(
                f"range {text!r} needs a step, like 50..1000:50")
        lo, hi, step = int(lo_s), int(hi_s), int(step_s)
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        return list(range(lo, hi + 1, step))
    try:
        payloads = [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad payload list {text!r}") from exc
    if not payloads:
        raise argparse.ArgumentTypeError("no payload sizes given")
    return payloads


def parse_anchor_points(text: str):
    """Comma-separated payload:goodput pairs, e.g. "50:6,1000:18"."""
    points = []
    for tok in text.split(","):
        payload_s, _, goal_s = tok.partition(":")
        if not goal_s:
            raise argparse.ArgumentTypeError(
                f"anchor {tok!r} must look like payload:kbps")
        points.append((int(payload_s), float(goal_s)))
    if len(points) != 2:
        raise argparse.ArgumentTypeError("exactly two anchor points required")
    return tuple(points)


def _print_run(result):
    spec = result.spec
    print(f"scenario {spec.name}: seed {spec.seed}, "
          f"{spec.duration_s:g} s simulated, {len(result.trace)} trace rows")
    for fid in sorted(result.metrics["flows"]):
        flow = result.metrics["flows"][fid]
        line = (f"flow {fid}: delivered {flow['delivered_unique']}"
                f" ({flow['delivered_bits']} bits), mean {flow['mean_kbps']:.3f}"
                f" kb/s, median interval {flow['median_interval_kbps']:.3f} kb/s")
        print(line)
        if "rtt" in flow:
            rtt = flow["rtt"]
            print(f"flow {fid} rtt: n={rtt['count']}, p50 {rtt['p50_ms']:.2f} ms,"
                  f" p90 {rtt['p90_ms']:.2f} ms,"
                  f" below 200 ms {rtt['fraction_below_200ms']:.3f}")
    print(f"jain index {result.metrics['jain_index']:.4f}")


def cmd_run(args) -> int:
    spec = load_scenario(args.scenario)
    if args.seed is not None:
        spec.seed = args.seed
    if args.t_end is not None:
        spec.duration_s = args.t_end
    spec.validate()
    result = run_scenario(spec)
    _print_run(result)
    if args.out:
        paths = report.write_run_report(result, args.out,
                                        plots=not args.no_plots,
                                        trace=not args.no_trace)
        for path in paths:
            print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    proc = fit_overhead() if args.calibrated else None
    rows = saturation_sweep(args.payloads, duration_s=args.duration,
                            seed=args.seed, proc=proc)
    print("payload_bytes  goodput_kbps  model_kbps")
    for row in rows:
        print(f"{row['payload_bytes']:>13}  {row['goodput_kbps']:>12.4f}"
              f"  {row['model_kbps']:>10.4f}")
    if args.out:
        for path in report.write_sweep_report(rows, args.out,
                                              plots=not args.no_plots):
            print(f"wrote {path}")
    return 0


def cmd_calibrate(args) -> int:
    a, b = fit_overhead(args.target_points)
    mac = MacParams(proc_overhead_a_us=a, proc_overhead_b_us=b)
    doc = {
        "overhead_fixed_us": a,
        "overhead_per_coded_byte_us": b,
        "anchors": [
            {"payload_bytes": p, "target_kbps": goal,
             "model_kbps": model_goodput_kbps(p, mac)}
            for p, goal in args.target_points
        ],
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _read_payload(args) -> bytes:
    if args.payload_hex is not None:
        try:
            return bytes.fromhex(args.payload_hex)
        except ValueError as exc:
            raise OpenVlcError(f"bad payload hex: {exc}") from exc
    if args.payload_file is not None:
        with open(args.payload_file, "rb") as fh:
            return fh.read()
    return b""


def cmd_codec_encode(args) -> int:
    frame = MacFrame(dst=args.dst, src=args.src, protocol=args.protocol,
                     payload=_read_payload(args))
    symbols = frame_to_symbols(frame)
    text = "".join(str(int(s)) for s in symbols)
    lines = [text[i:i + 80] for i in range(0, len(text), 80)]
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("\n".join(lines) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_codec_decode(args) -> int:
    source = open(args.infile) if args.infile else sys.stdin
    try:
        text = source.read()
    finally:
        if args.infile:
            source.close()
    stripped = "".join(text.split())
    if not stripped or set(stripped) - {"0", "1"}:
        raise OpenVlcError("input must be a stream of 0/1 symbols")
    samples = np.array([float(ch) for ch in stripped])
    sync = locate_frame(samples)
    body = slice_symbols(samples[sync.start:], sync.threshold)
    frame, corrected = symbols_to_frame(body)
    doc = {
        "dst": frame.dst,
        "src": frame.src,
        "protocol": frame.protocol,
        "length": frame.length,
        "payload_hex": frame.payload.hex(),
        "corrected_bytes": corrected,
        "is_ack": frame.is_ack,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openvlc-sim",
        description="Discrete-event simulator for an LED visible light network")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.add_argument("--t-end", type=float, default=None, metavar="SECONDS",
                       help="override the simulated duration")
    p_run.add_argument("--out", default=None, metavar="DIR",
                       help="write summary, CSVs, trace and figures here")
    p_run.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
    p_run.add_argument("--no-trace", action="store_true",
                       help="skip the JSON Lines trace dump")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="saturation goodput across payloads")
    p_sweep.add_argument("--payloads", type=parse_payloads, required=True,
                         help='range "50..1000:50" or list "50,200,1000"')
    p_sweep.add_argument("--duration", type=float, default=30.0,
                         metavar="SECONDS", help="simulated time per point")
    p_sweep.add_argument("--seed", type=int, default=1)
    p_sweep.add_argument("--calibrated", action="store_true",
                         help="apply the fitted processing overhead")
    p_sweep.add_argument("--out", default=None, metavar="DIR")
    p_sweep.add_argument("--no-plots", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cal = sub.add_parser("calibrate",
                           help="fit the processing overhead to two anchors")
    p_cal.add_argument("--target-points", type=parse_anchor_points,
                       default=((50, 6.0), (1000, 18.0)),
                       help='two payload:kbps pairs, default "50:6,1000:18"')
    p_cal.set_defaults(func=cmd_calibrate)

    p_codec = sub.add_parser("codec", help="frame codec debug tools")
    codec_sub = p_codec.add_subparsers(dest="codec_command", required=True)

    p_enc = codec_sub.add_parser("encode", help="frame fields to a symbol stream")
    p_enc.add_argument("--dst", type=int, required=True)
    p_enc.add_argument("--src", type=int, required=True)
    p_enc.add_argument("--protocol", type=int, default=1)
    group = p_enc.add_mutually_exclusive_group()
    group.add_argument("--payload-hex", default=None,
                       help="payload as hex text; omit for an ACK frame")
    group.add_argument("--payload-file", default=None,
                       help="payload from a binary file")
    p_enc.add_argument("--out", default=None, help="write symbols here")
    p_enc.set_defaults(func=cmd_codec_encode)

    p_dec = codec_sub.add_parser("decode", help="symbol stream to frame fields")
    p_dec.add_argument("--in", dest="infile", default=None,
                       help="symbol text file, default stdin")
    p_dec.set_defaults(func=cmd_codec_decode)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OpenVlcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
