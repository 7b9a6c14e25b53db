"""Byte-oriented Reed-Solomon block code used for forward error correction.

Frames are protected block-wise by a systematic shortened RS code over
GF(2^8) with field polynomial 0x11D and generator element 2: up to 200
data bytes per block followed by 16 parity bytes, i.e. a (216, 200) code
shortened from (255, 239).  The generator polynomial has roots at
alpha^0 .. alpha^15, so up to 8 corrupted bytes per block are correctable.

Shortening is implicit: a block of d < 200 data bytes behaves like a full
codeword whose leading 200 - d data bytes are zero.  Those positions can
never be in error on the wire, and zero coefficients do not change the
division remainder, so both encoder and decoder simply operate on the
short block directly.

Decoding is the textbook pipeline: syndromes, Berlekamp-Massey for the
error locator, Chien search for the positions, Forney for the magnitudes,
and a final syndrome re-check on the corrected word.
"""

from .errors import Uncorrectable

FIELD_POLY = 0x11D
GENERATOR = 2
PARITY_BYTES = 16
DATA_MAX = 200
BLOCK_MAX = DATA_MAX + PARITY_BYTES


def _build_field():
    exp = [0] * 512
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= FIELD_POLY
    for i in range(255, 512):
        exp[i] = exp[i - 255]
    return exp, log

_EXP, _LOG = _build_field()


def _gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def _gf_inv(a: int) -> int:
    return _EXP[255 - _LOG[a]]


def _build_generator_poly(nsym: int):
    # product of (x - alpha^i) for i = 0 .. nsym-1, highest degree first
    gen = [1]
    for i in range(nsym):
        root = _EXP[i]
        nxt = [0] * (len(gen) + 1)
        for j, coef in enumerate(gen):
            nxt[j] ^= coef
            nxt[j + 1] ^= _gf_mul(coef, root)
        gen = nxt
    return gen

_GEN = _build_generator_poly(PARITY_BYTES)


def rs_encode_block(data: bytes) -> bytes:
    """Return data with 16 parity bytes appended."""
    if not 1 <= len(data) <= DATA_MAX:
        raise ValueError(f"block data length {len(data)} outside 1..{DATA_MAX}")
    gen = _GEN
    parity = [0] * PARITY_BYTES
    for byte in data:
        coef = byte ^ parity[0]
        parity = parity[1:] + [0]
        if coef:
            lc = _LOG[coef]
            for j in range(PARITY_BYTES):
                g = gen[j + 1]
                if g:
                    parity[j] ^= _EXP[_LOG[g] + lc]
    return bytes(data) + bytes(parity)


def _syndromes(coded: bytes):
    # S_i = R(alpha^i) with coded[0] as the highest-degree coefficient
    synd = []
    for i in range(PARITY_BYTES):
        alpha_i = _EXP[i]
        acc = 0
        for byte in coded:
            acc = _gf_mul(acc, alpha_i) ^ byte
        synd.append(acc)
    return synd


def _berlekamp_massey(synd):
    # error locator sigma(x), lowest degree first
    sigma = [1]
    prev = [1]
    l = 0
    m = 1
    b = 1
    for n in range(len(synd)):
        d = synd[n]
        for i in range(1, l + 1):
            d ^= _gf_mul(sigma[i], synd[n - i])
        if d == 0:
            m += 1
            continue
        coef = _gf_mul(d, _gf_inv(b))
        shifted = [0] * m + [_gf_mul(coef, c) for c in prev]
        merged = [0] * max(len(sigma), len(shifted))
        for i, c in enumerate(sigma):
            merged[i] ^= c
        for i, c in enumerate(shifted):
            merged[i] ^= c
        if 2 * l <= n:
            prev = sigma
            b = d
            l = n + 1 - l
            m = 1
        else:
            m += 1
        sigma = merged
    while len(sigma) > 1 and sigma[-1] == 0:
        sigma.pop()
    return sigma, l


def _poly_eval(poly_low_first, x):
    acc = 0
    for coef in reversed(poly_low_first):
        acc = _gf_mul(acc, x) ^ coef
    return acc


def rs_decode_block(coded: bytes):
    """Correct up to 8 byte errors; return (data, number of bytes corrected).

    Raises Uncorrectable when the error pattern is beyond the code's
    capability (more errors than parity can locate, an inconsistent
    locator, or a correction that fails the final syndrome check).
    """
    n = len(coded)
    if not PARITY_BYTES + 1 <= n <= 255:
        raise ValueError(f"coded length {n} outside {PARITY_BYTES + 1}..255")
    synd = _syndromes(coded)
    if not any(synd):
        return bytes(coded[:-PARITY_BYTES]), 0

    sigma, nerr = _berlekamp_massey(synd)
    if nerr > PARITY_BYTES // 2 or len(sigma) - 1 != nerr:
        raise Uncorrectable(f"error locator degree {nerr} beyond correction radius")

    # Chien search over the degrees actually present in the short block.
    positions = []
    for degree in range(n):
        if _poly_eval(sigma, _EXP[(255 - degree) % 255]) == 0:
            positions.append(n - 1 - degree)
    if len(positions) != nerr:
        raise Uncorrectable("error locator roots do not match its degree")

    # Forney: omega(x) = S(x) * sigma(x) mod x^16, magnitudes from the
    # usual ratio with the formal derivative of sigma.
    omega = [0] * PARITY_BYTES
    for i in range(len(sigma)):
        for j in range(len(synd)):
            if i + j < PARITY_BYTES:
                omega[i + j] ^= _gf_mul(sigma[i], synd[j])
    sigma_deriv = [sigma[i] for i in range(1, len(sigma), 2)]  # odd terms, deg/2 step

    corrected = bytearray(coded)
    for pos in positions:
        degree = n - 1 - pos
        x = _EXP[degree % 255]              # error locator X_j
        x_inv = _gf_inv(x)
        num = _gf_mul(_poly_eval(omega, x_inv), x)
        den = 0
        x_inv_sq = _gf_mul(x_inv, x_inv)
        term = 1
        for coef in sigma_deriv:
            den ^= _gf_mul(coef, term)
            term = _gf_mul(term, x_inv_sq)
        if den == 0:
            raise Uncorrectable("degenerate locator derivative")
        corrected[pos] ^= _gf_mul(num, _gf_inv(den))

    if any(_syndromes(bytes(corrected))):
        raise Uncorrectable("correction failed syndrome re-check")
    return bytes(corrected[:-PARITY_BYTES]), nerr
