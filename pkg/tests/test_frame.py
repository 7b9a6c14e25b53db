"""Framing: serialization, sizes, symbol mapping and error paths."""

import numpy as np
import pytest

from openvlc_sim.errors import BadCrc, BadLength, Uncorrectable
from openvlc_sim.frame import (
    BROADCAST,
    OVERHEAD_BYTES,
    MacFrame,
    coded_bytes,
    frame_parse,
    frame_serialize,
    frame_symbols,
    frame_to_symbols,
    split_blocks,
    symbols_to_frame,
)

from oracles import coded_bytes_oracle, frame_symbols_oracle


def make_payload(n, seed=0):
    return bytes(np.random.default_rng(seed).integers(0, 256, n, dtype=np.uint8))


@pytest.mark.parametrize("n", [0, 1, 50, 199, 200, 201, 1000, 1500])
def test_round_trip(n):
    frame = MacFrame(dst=2, src=1, protocol=1, payload=make_payload(n, seed=n))
    decoded, corrected = symbols_to_frame(frame_to_symbols(frame)[32:])
    assert decoded == frame
    assert corrected == 0


@pytest.mark.parametrize("n", [0, 1, 50, 190, 191, 200, 391, 1000, 1500])
def test_sizes_match_oracle(n):
    assert coded_bytes(n) == coded_bytes_oracle(n)
    assert frame_symbols(n) == frame_symbols_oracle(n)


def test_known_sizes():
    # one short block for an ACK, parity growing at each 200-byte boundary
    assert frame_symbols(0) == 448
    assert frame_symbols(50) == 1248
    assert frame_symbols(1000) == 17728
    assert coded_bytes(0) == OVERHEAD_BYTES + 16


def test_serialize_layout():
    frame = MacFrame(dst=0x0203, src=0x0001, protocol=7, payload=b"\xaa\xbb")
    raw = frame_serialize(frame)
    assert raw[:8] == bytes.fromhex("0002 0203 0001 0007".replace(" ", ""))
    assert raw[8:10] == b"\xaa\xbb"
    assert len(raw) == 2 + OVERHEAD_BYTES
    assert frame_parse(raw) == frame


def test_split_blocks_greedy():
    data = bytes(450)
    blocks = split_blocks(data)
    assert [len(b) for b in blocks] == [200, 200, 50]
    assert b"".join(blocks) == data


def test_parse_rejects_truncation():
    raw = frame_serialize(MacFrame(dst=1, src=2, protocol=1, payload=bytes(20)))
    with pytest.raises(BadLength):
        frame_parse(raw[:-1])
    with pytest.raises(BadLength):
        frame_parse(raw[:5])


def test_parse_rejects_bit_flip():
    raw = bytearray(frame_serialize(MacFrame(dst=1, src=2, protocol=1,
                                             payload=make_payload(30, seed=4))))
    raw[12] ^= 0x10
    with pytest.raises(BadCrc):
        frame_parse(bytes(raw))


def test_decode_reports_corrected_bytes():
    frame = MacFrame(dst=2, src=1, protocol=1, payload=make_payload(300, seed=9))
    symbols = frame_to_symbols(frame)[32:]
    coded = np.packbits(np.asarray(
        [0 if symbols[i] > symbols[i + 1] else 1
         for i in range(0, symbols.size, 2)], dtype=np.uint8))
    rng = np.random.default_rng(21)
    # three byte errors in the first block, two in the second
    corrupt = bytearray(coded.tobytes())
    for pos in (5, 40, 199, 220, 300):
        corrupt[pos] ^= int(rng.integers(1, 256))
    bits = np.unpackbits(np.frombuffer(bytes(corrupt), dtype=np.uint8))
    flat = np.zeros(bits.size * 2, dtype=np.uint8)
    flat[0::2] = 1 - bits
    flat[1::2] = bits
    decoded, corrected = symbols_to_frame(flat)
    assert decoded == frame
    assert corrected == 5


def test_decode_rejects_too_many_errors_per_block():
    frame = MacFrame(dst=2, src=1, protocol=1, payload=make_payload(100, seed=3))
    symbols = frame_to_symbols(frame)[32:].copy()
    # one flipped Manchester pair in each of 9 bytes past the length field
    for byte_idx in range(2, 11):
        k = byte_idx * 16
        symbols[k], symbols[k + 1] = symbols[k + 1], symbols[k]
    with pytest.raises(Uncorrectable):
        symbols_to_frame(symbols)


def test_decode_rejects_short_body():
    with pytest.raises(BadLength):
        symbols_to_frame(np.zeros(30, dtype=np.uint8))
    frame = MacFrame(dst=1, src=2, protocol=1, payload=bytes(40))
    with pytest.raises(BadLength):
        symbols_to_frame(frame_to_symbols(frame)[32:-16])


def test_decode_ignores_trailing_symbols():
    frame = MacFrame(dst=2, src=1, protocol=1, payload=b"tail")
    body = frame_to_symbols(frame)[32:]
    padded = np.concatenate([body, np.ones(64, dtype=np.uint8)])
    decoded, _ = symbols_to_frame(padded)
    assert decoded == frame


def test_field_validation():
    with pytest.raises(ValueError):
        MacFrame(dst=0x10000, src=0, protocol=0)
    with pytest.raises(ValueError):
        MacFrame(dst=0, src=-1, protocol=0)
    with pytest.raises(ValueError):
        MacFrame(dst=0, src=0, protocol=0x1_0000)


def test_ack_and_broadcast():
    ack = MacFrame(dst=4, src=5, protocol=0)
    assert ack.is_ack and ack.length == 0
    data = MacFrame(dst=BROADCAST, src=5, protocol=1, payload=b"x")
    assert not data.is_ack
    assert frame_parse(frame_serialize(data)).dst == BROADCAST
