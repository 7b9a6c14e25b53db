"""Block FEC: golden parity, correction capability, failure detection."""

from pathlib import Path

import numpy as np
import pytest

from openvlc_sim import rs
from openvlc_sim.errors import Uncorrectable
from oracles import rs_parity_longdiv

GOLDEN = Path(__file__).parent / "golden" / "rs_216_200_vectors.txt"


def load_vectors():
    vectors = []
    for line in GOLDEN.read_text().splitlines():
        data_hex, parity_hex = line.split()
        vectors.append((bytes.fromhex(data_hex), bytes.fromhex(parity_hex)))
    return vectors


@pytest.mark.parametrize("data,parity", load_vectors())
def test_golden_parity(data, parity):
    assert rs.rs_encode_block(data) == data + parity
    assert rs_parity_longdiv(data) == parity


def test_oracle_agreement_on_random_blocks():
    rng = np.random.default_rng(11)
    for size in (1, 7, 50, 199, 200):
        data = bytes(rng.integers(0, 256, size, dtype=np.uint8))
        assert rs.rs_encode_block(data)[size:] == rs_parity_longdiv(data)


def test_clean_round_trip():
    rng = np.random.default_rng(5)
    for size in (1, 10, 113, 200):
        data = bytes(rng.integers(0, 256, size, dtype=np.uint8))
        decoded, nerr = rs.rs_decode_block(rs.rs_encode_block(data))
        assert decoded == data
        assert nerr == 0


@pytest.mark.parametrize("n_errors", range(1, 9))
def test_corrects_up_to_eight_errors(n_errors):
    rng = np.random.default_rng(100 + n_errors)
    data = bytes(rng.integers(0, 256, rs.DATA_MAX, dtype=np.uint8))
    coded = bytearray(rs.rs_encode_block(data))
    positions = rng.choice(len(coded), size=n_errors, replace=False)
    for pos in positions:
        coded[pos] ^= int(rng.integers(1, 256))
    decoded, nerr = rs.rs_decode_block(bytes(coded))
    assert decoded == data
    assert nerr == n_errors


def test_corrects_errors_in_short_block():
    rng = np.random.default_rng(23)
    data = bytes(rng.integers(0, 256, 26, dtype=np.uint8))
    coded = bytearray(rs.rs_encode_block(data))
    for pos in rng.choice(len(coded), size=8, replace=False):
        coded[pos] ^= int(rng.integers(1, 256))
    decoded, nerr = rs.rs_decode_block(bytes(coded))
    assert decoded == data
    assert nerr == 8


def test_nine_errors_are_flagged():
    rng = np.random.default_rng(77)
    data = bytes(rng.integers(0, 256, rs.DATA_MAX, dtype=np.uint8))
    clean = rs.rs_encode_block(data)
    for _ in range(50):
        coded = bytearray(clean)
        for pos in rng.choice(len(coded), size=9, replace=False):
            coded[pos] ^= int(rng.integers(1, 256))
        with pytest.raises(Uncorrectable):
            rs.rs_decode_block(bytes(coded))


def test_rejects_oversized_block():
    with pytest.raises(ValueError):
        rs.rs_encode_block(bytes(rs.DATA_MAX + 1))
