"""Link-layer framing: header, checksum, block FEC and symbol mapping.

Wire format, all fields big endian 16-bit:

    Length | Dst | Src | Protocol | payload (Length bytes) | CRC16

Length counts payload bytes only, so a frame occupies Length + 10 bytes.
A zero-length frame is an acknowledgement.  The serialized frame is cut
into blocks of at most 200 bytes (full blocks first, remainder last),
each block is RS encoded with 16 parity bytes, and the concatenated
coded bytes are Manchester coded MSB first behind the 32-symbol sync
header.
"""

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from . import phy, rs
from .crc import crc16
from .errors import BadCrc, BadLength

HEADER_BYTES = 8
CRC_BYTES = 2
OVERHEAD_BYTES = HEADER_BYTES + CRC_BYTES
BROADCAST = 0xFFFF
MAX_FIELD = 0xFFFF


@dataclass(frozen=True)
class MacFrame:
    dst: int
    src: int
    protocol: int
    payload: bytes = field(default=b"")

    def __post_init__(self):
        for name in ("dst", "src", "protocol"):
            value = getattr(self, name)
            if not 0 <= value <= MAX_FIELD:
                raise ValueError(f"{name}={value} does not fit in 16 bits")
        if len(self.payload) > MAX_FIELD:
            raise ValueError("payload longer than a 16-bit length field")

    @property
    def length(self) -> int:
        return len(self.payload)

    @property
    def is_ack(self) -> bool:
        return self.length == 0


def frame_serialize(frame: MacFrame) -> bytes:
    head = b"".join(v.to_bytes(2, "big")
                    for v in (frame.length, frame.dst, frame.src, frame.protocol))
    body = head + frame.payload
    return body + crc16(body).to_bytes(2, "big")


def frame_parse(data: bytes) -> MacFrame:
    if len(data) < OVERHEAD_BYTES:
        raise BadLength(f"{len(data)} bytes is shorter than header plus checksum")
    declared = int.from_bytes(data[0:2], "big")
    if declared != len(data) - OVERHEAD_BYTES:
        raise BadLength(
            f"declared payload {declared} but {len(data) - OVERHEAD_BYTES} bytes present")
    if crc16(data) != 0:
        raise BadCrc("frame checksum mismatch")
    return MacFrame(dst=int.from_bytes(data[2:4], "big"),
                    src=int.from_bytes(data[4:6], "big"),
                    protocol=int.from_bytes(data[6:8], "big"),
                    payload=data[8:-2])


def split_blocks(data: bytes):
    """Greedy partition into FEC blocks: full 200-byte blocks, remainder last."""
    return [data[i:i + rs.DATA_MAX] for i in range(0, len(data), rs.DATA_MAX)]


def coded_bytes(payload_len: int) -> int:
    """Serialized plus parity bytes for a frame with this payload length."""
    d = payload_len + OVERHEAD_BYTES
    return d + rs.PARITY_BYTES * ceil(d / rs.DATA_MAX)


def frame_symbols(payload_len: int) -> int:
    """Total on-air symbols including the sync header."""
    return phy.SYNC_SYMBOLS + 16 * coded_bytes(payload_len)


def frame_to_symbols(frame: MacFrame) -> np.ndarray:
    """Full on-air symbol sequence for a frame, sync header included."""
    coded = b"".join(rs.rs_encode_block(block)
                     for block in split_blocks(frame_serialize(frame)))
    body = phy.manchester_encode(phy.bytes_to_bits(coded))
    return np.concatenate([phy.build_sync_header(), body])


def _decode_coded_bytes(symbols: np.ndarray) -> bytes:
    return phy.bits_to_bytes(phy.manchester_decode(symbols))


def symbols_to_frame(body_symbols) -> tuple:
    """Decode sliced body symbols back into a frame.

    The declared length is read from the first two bytes of the stream
    before any error correction, which fixes the block partition; a
    corrupted length field therefore surfaces as a failed block decode or
    checksum, exactly as on real hardware.  Trailing symbols beyond the
    frame are ignored.  Returns (frame, corrected_bytes).
    """
    body_symbols = np.asarray(body_symbols, dtype=np.uint8)
    if body_symbols.size < 32:
        raise BadLength("body too short to contain a length field")
    declared = int.from_bytes(_decode_coded_bytes(body_symbols[:32]), "big")

    d = declared + OVERHEAD_BYTES
    n_coded = d + rs.PARITY_BYTES * ceil(d / rs.DATA_MAX)
    need = 16 * n_coded
    if body_symbols.size < need:
        raise BadLength(
            f"declared payload {declared} needs {need} symbols, have {body_symbols.size}")
    coded = _decode_coded_bytes(body_symbols[:need])

    data = bytearray()
    corrected = 0
    offset = 0
    for block in split_blocks(b"\x00" * d):
        coded_len = len(block) + rs.PARITY_BYTES
        block_data, nerr = rs.rs_decode_block(coded[offset:offset + coded_len])
        data += block_data
        corrected += nerr
        offset += coded_len
    return frame_parse(bytes(data)), corrected
