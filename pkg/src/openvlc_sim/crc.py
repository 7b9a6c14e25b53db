"""CRC-16 frame checksum.

CCITT polynomial 0x1021, initial value 0xFFFF, no bit reflection and no
final xor (the variant usually listed as CRC-16/CCITT-FALSE; check value
for "123456789" is 0x29B1).  A consequence of the zero xorout is that a
message with its checksum appended leaves a zero residue, which is how the
parser validates an incoming frame.
"""

_POLY = 0x1021

def _build_table():
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ _POLY) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
        table.append(crc)
    return tuple(table)

_TABLE = _build_table()


def crc16(data: bytes, init: int = 0xFFFF) -> int:
    crc = init
    for byte in data:
        crc = ((crc << 8) & 0xFFFF) ^ _TABLE[(crc >> 8) ^ byte]
    return crc
