"""Acceptance checks, one per release criterion.

Each test prints a single verdict line (visible under pytest -v -s or in
the captured output) and then asserts, so a run of this file yields one
pass/fail line per criterion.  Simulated durations follow the criterion
wording; wall-clock runtime for the whole module stays modest because
the event kernel compresses idle air time.
"""

import numpy as np
import pytest

from openvlc_sim.crc import crc16
from openvlc_sim.frame import MacFrame, frame_to_symbols, symbols_to_frame
from openvlc_sim.harness import (Runtime, fit_overhead, model_goodput_kbps,
                                 run_scenario, saturation_sweep)
from openvlc_sim.mac import MacParams, draw_backoff
from openvlc_sim.rs import rs_decode_block, rs_encode_block
from openvlc_sim.scenario import (FlowSpec, NodeSpec, ScenarioSpec,
                                  downlink_spec, ping_spec, two_node_spec,
                                  uplink_spec)

from oracles import crc16_bitwise, saturation_goodput_kbps_oracle

CAL = fit_overhead()  # affine processing overhead hitting 6 and 18 kb/s


def verdict(num: int, name: str, ok: bool, detail: str):
    line = f"[criterion {num}] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line, flush=True)
    return line


def test_criterion_1_codec_round_trip_and_fec():
    for n in (0, 1, 50, 199, 200, 201, 1000, 1500):
        payload = bytes(np.random.default_rng(n).integers(0, 256, n,
                                                          dtype=np.uint8))
        frame = MacFrame(dst=2, src=1, protocol=1, payload=payload)
        decoded, corrected = symbols_to_frame(frame_to_symbols(frame)[32:])
        assert decoded == frame and corrected == 0, f"round trip broke at {n}"

    rng = np.random.default_rng(2024)
    data = bytes(rng.integers(0, 256, 200, dtype=np.uint8))
    coded = rs_encode_block(data)
    fixed = 0
    for _ in range(1000):
        nerr = int(rng.integers(1, 9))
        bad = bytearray(coded)
        for pos in rng.choice(len(coded), nerr, replace=False):
            bad[pos] ^= int(rng.integers(1, 256))
        out, n = rs_decode_block(bytes(bad))
        if out == data and n == nerr:
            fixed += 1
    crc_ok = crc16(b"123456789") == 0x29B1 == crc16_bitwise(b"123456789")

    ok = fixed == 1000 and crc_ok
    verdict(1, "codec round trip, RS correction, CRC vector", ok,
            f"8 payload sizes, {fixed}/1000 error patterns, crc16 0x29B1")
    assert ok


def test_criterion_2_zero_overhead_matches_closed_form():
    worst = 0.0
    details = []
    for payload in (50, 200, 600, 1000):
        res = run_scenario(two_node_spec(payload, 30.0))
        got = res.flow_metric(0)["steady_kbps"]
        want = saturation_goodput_kbps_oracle(payload)
        err = abs(got - want) / want
        worst = max(worst, err)
        details.append(f"{payload}B {got:.3f}/{want:.3f}")
    ok = worst < 0.02
    verdict(2, "analytic saturation throughput", ok,
            "; ".join(details) + f"; worst {worst * 100:.2f}% < 2%")
    assert ok


def test_criterion_3_calibrated_sweep():
    payloads = [50] + list(range(100, 1001, 100))
    rows = saturation_sweep(payloads, duration_s=30.0, proc=CAL)
    by_payload = {r["payload_bytes"]: r["goodput_kbps"] for r in rows}

    anchor_errs = {p: abs(by_payload[p] - goal) / goal
                   for p, goal in ((50, 6.0), (1000, 18.0))}
    anchors_ok = all(err < 0.10 for err in anchor_errs.values())
    series = [by_payload[p] for p in payloads]
    monotone_ok = all(b > a for a, b in zip(series, series[1:]))

    ok = anchors_ok and monotone_ok
    verdict(3, "calibrated anchors and monotone sweep", ok,
            f"50B {by_payload[50]:.3f} kb/s, 1000B {by_payload[1000]:.3f} kb/s, "
            f"anchor errors {max(anchor_errs.values()) * 100:.2f}% < 10%, "
            f"strictly increasing over {len(payloads)} sizes: {monotone_ok}")
    assert ok


def test_criterion_4_basic_rate_floor():
    # exhaustive over the closed form, simulation at the model's minimum
    floor = 11.67
    model = {p: model_goodput_kbps(p, MacParams()) for p in range(50, 1501)}
    model_min_payload = min(model, key=model.get)
    model_ok = model[model_min_payload] >= floor

    sim_vals = {}
    for payload in (50, model_min_payload, 191, 1500):
        res = run_scenario(two_node_spec(payload, 30.0))
        sim_vals[payload] = res.flow_metric(0)["steady_kbps"]
    sim_ok = all(v >= floor for v in sim_vals.values())

    ok = model_ok and sim_ok
    verdict(4, "saturation goodput floor 11.67 kb/s", ok,
            f"model min {model[model_min_payload]:.4f} kb/s at "
            f"{model_min_payload}B, simulated min "
            f"{min(sim_vals.values()):.4f} kb/s")
    assert ok


def test_criterion_5_ping_latency():
    fractions = {}
    for ipi in (0.25, 0.2):
        res = run_scenario(ping_spec(ipi, 1000 * ipi, proc=CAL))
        rtt = res.flow_metric(0)["rtt"]
        assert rtt["count"] >= 1000
        fractions[ipi] = rtt["fraction_below_200ms"]

    clause1 = fractions[0.25] >= 0.80
    clause2 = fractions[0.2] < fractions[0.25]
    ok = clause1 and clause2
    verdict(5, "ping RTT under load", ok,
            f"IPI 0.25 s fraction<200ms {fractions[0.25]:.3f} >= 0.80: "
            f"{clause1}; IPI 0.2 s fraction {fractions[0.2]:.3f} strictly "
            f"lower: {clause2}")
    assert ok


def test_criterion_6_multipoint_fairness():
    up = run_scenario(uplink_spec(1000, 300.0, proc=CAL))
    jain = up.metrics["jain_index"]
    up_medians = [up.flow_metric(f)["median_interval_kbps"] for f in (0, 1)]

    single = uplink_spec(1000, 300.0, proc=CAL)
    single.flows = single.flows[:1]
    single.validate()
    baseline = run_scenario(single).flow_metric(0)["median_interval_kbps"]
    half = baseline / 2.0
    share_ok = all(abs(m - half) / half <= 0.15 for m in up_medians)

    down = run_scenario(downlink_spec(1000, 300.0, 0.25, proc=CAL))
    down_medians = [down.flow_metric(f)["median_interval_kbps"] for f in (0, 1)]
    down_ok = max(down_medians) <= 1.15 * min(down_medians)

    ok = jain >= 0.95 and share_ok and down_ok
    verdict(6, "uplink fairness and downlink balance", ok,
            f"jain {jain:.4f} >= 0.95, uplink medians "
            f"{up_medians[0]:.2f}/{up_medians[1]:.2f} vs half-baseline "
            f"{half:.2f} +-15%, downlink medians "
            f"{down_medians[0]:.2f}/{down_medians[1]:.2f}")
    assert ok


def test_criterion_7_mac_properties():
    # contention window trajectory and backoff support
    rt = Runtime(ScenarioSpec(
        name="cw", seed=1, duration_s=1.0,
        nodes=[NodeSpec(1, (0.0, 0.0)), NodeSpec(2, (0.6, 0.0))],
        flows=[], mac=MacParams(cw_min=4, cw_max=64, max_retx=10)))
    node = rt.nodes[1]
    node.host_send(2, 1, b"probe")
    trajectory = []
    for _ in range(5):
        node._failed_attempt(node.sim.now)
        trajectory.append(node.cw)
    cw_ok = trajectory == [8, 16, 32, 64, 64]
    node._complete_current(delivered=True)
    cw_ok = cw_ok and node.cw == 4 and node.retx_count == 0

    rng = np.random.default_rng(3)
    draws = {draw_backoff(rng, 16) for _ in range(2000)}
    backoff_ok = draws == set(range(1, 16))

    # forced collision: complementary payloads, both must self-abort
    coll = Runtime(ScenarioSpec(
        name="coll", seed=1, duration_s=5.0,
        nodes=[NodeSpec(1, (0.0, 0.0)), NodeSpec(2, (0.6, 0.0))], flows=[]))
    coll.nodes[1].host_send(2, 1, b"\x00" * 30)
    coll.nodes[2].host_send(1, 1, b"\xff" * 30)
    coll.sim.run_until(coll.spec.duration_us)
    aborts = {row["node"]: row["n_symbols"]
              for row in coll.trace.of_kind("tx_abort")}
    # payloads diverge at body symbol 128 (frame symbol 160); four busy
    # looks on alternating LOW symbols plus one reaction symbol bound the
    # detection lag
    limit = 160 + 2 * coll.spec.mac.collision_busy_symbols + 2
    abort_ok = (set(aborts) == {0, 1}
                and all(n <= limit for n in aborts.values())
                and all(coll.nodes[a].counters.frames_delivered == 1
                        and coll.nodes[a].counters.collisions_detected == 1
                        for a in (1, 2)))

    # jammed acknowledgements: exactly max_retx + 1 attempts, then a drop
    jam = Runtime(ScenarioSpec(
        name="jam", seed=1, duration_s=5.0,
        nodes=[NodeSpec(1), NodeSpec(2)], flows=[],
        gains=[[0.0, 1.0], [0.0, 0.0]]))
    jam.nodes[1].host_send(2, 1, b"unanswered")
    jam.sim.run_until(jam.spec.duration_us)
    a, b = jam.nodes[1].counters, jam.nodes[2].counters
    drop_ok = ((a.tx_data, a.retx, a.drops) == (4, 3, 1)
               and b.rx_ok == 4
               and list(jam.trace.of_kind("drop"))[0]["attempts"] == 4)

    ok = cw_ok and backoff_ok and abort_ok and drop_ok
    verdict(7, "MAC property suite", ok,
            f"CW trajectory {trajectory} reset-ok {cw_ok}, backoff support "
            f"[1,15] {backoff_ok}, dual abort at symbols "
            f"{sorted(aborts.values())} <= {limit}, drop after exactly 4 "
            f"attempts {drop_ok}")
    assert ok


def test_criterion_8_deterministic_journals(tmp_path):
    def journal(seed, name):
        res = run_scenario(uplink_spec(1000, 60.0, seed=seed))
        path = tmp_path / name
        res.trace.write_jsonl(path)
        return path.read_bytes(), res

    bytes_a, res_a = journal(5, "a.jsonl")
    bytes_b, _ = journal(5, "b.jsonl")
    bytes_c, res_c = journal(6, "c.jsonl")

    identical = bytes_a == bytes_b
    distinct = bytes_a != bytes_c
    # the submission schedule is scenario-driven, so across seeds only
    # backoff and noise dependent timing may move
    schedule_a = [row["t_us"] for row in res_a.trace.of_kind("app_tx")]
    schedule_c = [row["t_us"] for row in res_c.trace.of_kind("app_tx")]
    schedule_fixed = schedule_a == schedule_c

    ok = identical and distinct and schedule_fixed
    verdict(8, "deterministic seeded journals", ok,
            f"same seed byte-identical: {identical}; seeds differ: "
            f"{distinct}; offered schedule seed-invariant: {schedule_fixed}")
    assert ok
