"""Line coding, frame synchronisation and symbol slicing.

The physical layer is on-off keying of a single LED: a symbol is one timer
interval with the LED either on (HIGH) or off (LOW).  Payload bits are
Manchester coded, one bit per symbol pair, which keeps the stream DC
balanced and lets the receiver derive its decision threshold from the
signal itself instead of a fixed reference.

Every frame starts with a fixed 32-symbol sync header:

* 24 alternating symbols starting HIGH.  The receiver averages these to
  obtain the slicing threshold for the rest of the frame, so the header
  doubles as an amplitude training sequence.
* an 8-symbol start delimiter HHLLHLLH.  It contains adjacent repeats, so
  it cannot be produced by the alternating preamble, and neither of its
  two pair phasings is a valid Manchester sequence, so it cannot appear
  inside a coded body either.

The sync header is emitted as raw symbols; only the body that follows is
Manchester coded.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidPair, NoSync, OddLength, WrongLength


class Symbol(IntEnum):
    LOW = 0
    HIGH = 1


PREAMBLE_SYMBOLS = 24
SFD = (1, 1, 0, 0, 1, 0, 0, 1)
SYNC_SYMBOLS = PREAMBLE_SYMBOLS + len(SFD)

# Tolerated slicing errors in the preamble window before sync is rejected.
DEFAULT_PREAMBLE_MIN_MATCHES = 22

_PREAMBLE = np.tile(np.array([1, 0], dtype=np.uint8), PREAMBLE_SYMBOLS // 2)
_SFD = np.array(SFD, dtype=np.uint8)


@dataclass(frozen=True)
class SyncResult:
    """Where the frame body starts and the threshold that found it."""
    start: int
    threshold: float


def bytes_to_bits(data: bytes) -> np.ndarray:
    """Unpack bytes into bits, most significant bit first."""
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits: np.ndarray) -> bytes:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % 8:
        raise WrongLength(f"bit count {bits.size} is not a whole number of bytes")
    return np.packbits(bits).tobytes()


def manchester_encode(bits) -> np.ndarray:
    """Encode bits as symbol pairs: 1 -> LOW,HIGH and 0 -> HIGH,LOW."""
    bits = np.asarray(bits, dtype=np.uint8)
    out = np.empty(bits.size * 2, dtype=np.uint8)
    out[0::2] = 1 - bits
    out[1::2] = bits
    return out


def manchester_decode(symbols) -> np.ndarray:
    """Recover bits from symbol pairs; reject anything that is not LH or HL."""
    symbols = np.asarray(symbols, dtype=np.uint8)
    if symbols.size % 2:
        raise OddLength(f"{symbols.size} symbols cannot form pairs")
    first = symbols[0::2]
    second = symbols[1::2]
    bad = np.nonzero(first == second)[0]
    if bad.size:
        raise InvalidPair(int(bad[0]))
    return second


def build_sync_header() -> np.ndarray:
    """The 32 raw symbols prepended to every frame."""
    return np.concatenate([_PREAMBLE, _SFD])


def compute_threshold(samples) -> float:
    """Mean of the 24 preamble samples, the per-frame slicing threshold."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size != PREAMBLE_SYMBOLS:
        raise WrongLength(
            f"threshold needs exactly {PREAMBLE_SYMBOLS} samples, got {samples.size}")
    return float(samples.mean())


def slice_symbols(samples, threshold: float) -> np.ndarray:
    """Hard decision per sample; a sample equal to the threshold reads HIGH."""
    samples = np.asarray(samples, dtype=np.float64)
    return (samples >= threshold).astype(np.uint8)


def locate_frame(samples, min_preamble_matches: int = DEFAULT_PREAMBLE_MIN_MATCHES,
                 max_sfd_errors: int = 0) -> SyncResult:
    """Scan a sample stream for the sync header; earliest match wins.

    For every candidate offset the threshold is the mean of the 24 samples
    in the preamble window, the window is sliced against it and compared to
    the alternating pattern, and the 8 delimiter samples that follow must
    match the start delimiter with at most ``max_sfd_errors`` errors.
    Returns the index of the first body symbol and the winning threshold.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    if n < SYNC_SYMBOLS:
        raise NoSync(f"stream of {n} samples is shorter than a sync header")

    windows = np.lib.stride_tricks.sliding_window_view(samples, SYNC_SYMBOLS)
    thresholds = windows[:, :PREAMBLE_SYMBOLS].mean(axis=1)
    sliced = windows >= thresholds[:, None]
    preamble_hits = (sliced[:, :PREAMBLE_SYMBOLS] == _PREAMBLE).sum(axis=1)
    sfd_errors = (sliced[:, PREAMBLE_SYMBOLS:] != _SFD).sum(axis=1)
    ok = (preamble_hits >= min_preamble_matches) & (sfd_errors <= max_sfd_errors)
    hits = np.nonzero(ok)[0]
    if not hits.size:
        raise NoSync("no sync header in stream")
    offset = int(hits[0])
    return SyncResult(start=offset + SYNC_SYMBOLS, threshold=float(thresholds[offset]))
