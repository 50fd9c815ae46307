"""GF(2^8) arithmetic with log/antilog tables.

Reduction polynomial is x^8 + x^4 + x^3 + x^2 + 1 (0x11D) with generator 2,
the usual choice for storage Reed-Solomon codecs.
"""

import numpy as np

POLYNOMIAL = 0x11D
GENERATOR = 2
ORDER = 256


class GaloisError(ArithmeticError):
    """Raised for operations without a result in the field (division by 0)."""


def peasant_mul(a: int, b: int, poly: int = POLYNOMIAL) -> int:
    """Shift-and-reduce multiplication; independent of the tables."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= poly
    return r


def _build_tables():
    exp = [0] * 510
    log = [0] * 256
    x = 1
    for e in range(255):
        exp[e] = x
        log[x] = e
        x = peasant_mul(x, GENERATOR)
    # doubled so log[a] + log[b] never needs a modulo
    exp[255:] = exp[:255]
    return tuple(exp), tuple(log)


EXP, LOG = _build_tables()


def gf_add(a: int, b: int) -> int:
    return a ^ b


gf_sub = gf_add


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise GaloisError("0 has no multiplicative inverse")
    return EXP[255 - LOG[a]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise GaloisError("division by zero")
    if a == 0:
        return 0
    return EXP[LOG[a] + 255 - LOG[b]]


def gf_pow(a: int, n: int) -> int:
    if n == 0:
        return 1
    if a == 0:
        return 0
    return EXP[(LOG[a] * n) % 255]


def _build_mul_table() -> np.ndarray:
    log = np.array(LOG, dtype=np.int32)
    exp = np.array(EXP, dtype=np.uint8)
    table = exp[log[:, None] + log[None, :]]
    table[0, :] = 0
    table[:, 0] = 0
    table.setflags(write=False)
    return table


# MUL_TABLE[c] is a 256-entry lookup for "multiply by c", used for bulk
# byte-vector products.
MUL_TABLE = _build_mul_table()


def mul_bytes(c: int, data: np.ndarray) -> np.ndarray:
    """Multiply every byte of a uint8 array by the constant ``c``."""
    return MUL_TABLE[c][data]
