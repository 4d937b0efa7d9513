"""Arithmetic in GF(2^8) with reduction polynomial 0x11D and generator 2.

Scalar operations go through log/exp tables.  ``MUL_TABLE`` is a dense
256x256 product table used by the vectorised payload kernels; it is built
from the scalar routine so the two paths are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POLY = 0x11D
GENERATOR = 2
ORDER = 255
LOG_ZERO = 255  # sentinel stored at log[0]


@dataclass(frozen=True)
class FieldTables:
    exp: tuple[int, ...]
    log: tuple[int, ...]


def build_tables() -> FieldTables:
    exp = [0] * 256
    log = [LOG_ZERO] * 256
    x = 1
    for i in range(ORDER):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= POLY
    # period 255: exp[255] wraps to exp[0]
    exp[ORDER] = exp[0]
    return FieldTables(tuple(exp), tuple(log))


TABLES = build_tables()
_EXP = TABLES.exp
_LOG = TABLES.log


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[(_LOG[a] + _LOG[b]) % ORDER]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("zero has no multiplicative inverse in GF(2^8)")
    return _EXP[(ORDER - _LOG[a]) % ORDER]


def gf_div(a: int, b: int) -> int:
    return gf_mul(a, gf_inv(b))


def _build_mul_table() -> np.ndarray:
    table = np.zeros((256, 256), dtype=np.uint8)
    for a in range(1, 256):
        for b in range(1, 256):
            table[a, b] = gf_mul(a, b)
    table.setflags(write=False)
    return table


MUL_TABLE = _build_mul_table()
INV_TABLE = np.array([0] + [gf_inv(a) for a in range(1, 256)], dtype=np.uint8)


def scale(coef: int, data: np.ndarray) -> np.ndarray:
    """Multiply every byte of ``data`` by the field constant ``coef``."""
    if coef == 0:
        return np.zeros_like(data)
    if coef == 1:
        return data.copy()
    return MUL_TABLE[coef][data]
