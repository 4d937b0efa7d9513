"""Systematic Cauchy Reed-Solomon erasure code over GF(2^8).

The generator matrix is ``[I_k ; C]`` with ``C[i][j] = 1 / (i XOR (m + j))``.
Every k x k submatrix of it is invertible, so any k of the k + m packets
recover the source.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    CodeParameters,
    DecodeOutcome,
    Insufficient,
    Packet,
    ParameterError,
    Success,
    collect_packets,
    pad_message,
    split_payloads,
    unpad_message,
)
from .field import INV_TABLE, MUL_TABLE, gf_inv


class SingularMatrixError(ArithmeticError):
    pass


def build_cauchy_matrix(k: int, m: int) -> np.ndarray:
    """m x k Cauchy matrix with repair points x_i = i and source points y_j = m + j."""
    if k < 1 or m < 0:
        raise ParameterError(f"need k >= 1 and m >= 0, got k={k}, m={m}")
    if k + m > 256:
        raise ParameterError(f"k + m = {k + m} exceeds the 256 points of GF(2^8)")
    out = np.zeros((m, k), dtype=np.uint8)
    for i in range(m):
        for j in range(k):
            out[i, j] = gf_inv(i ^ (m + j))
    return out


def generator_rows(indices: Sequence[int], k: int, cauchy: np.ndarray) -> np.ndarray:
    """Rows of ``[I_k ; C]`` for the given packet indices."""
    rows = np.zeros((len(indices), k), dtype=np.uint8)
    for r, idx in enumerate(indices):
        if idx < k:
            rows[r, idx] = 1
        else:
            rows[r] = cauchy[idx - k]
    return rows


def invert_submatrix(rows: np.ndarray) -> np.ndarray:
    """Invert a square GF(2^8) matrix by Gauss-Jordan elimination.

    Pivots are the first nonzero entry at or below the diagonal.
    """
    rows = np.asarray(rows, dtype=np.uint8)
    k = rows.shape[0]
    if rows.shape != (k, k):
        raise ValueError(f"expected a square matrix, got shape {rows.shape}")
    aug = np.concatenate([rows, np.eye(k, dtype=np.uint8)], axis=1)
    for col in range(k):
        nz = np.flatnonzero(aug[col:, col])
        if nz.size == 0:
            raise SingularMatrixError(f"no pivot in column {col}")
        piv = col + int(nz[0])
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        lead = int(aug[col, col])
        if lead != 1:
            aug[col] = MUL_TABLE[INV_TABLE[lead]][aug[col]]
        factors = aug[:, col].copy()
        factors[col] = 0
        if factors.any():
            aug ^= MUL_TABLE[factors[:, None], aug[col][None, :]]
    return aug[:, k:]


def gf_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over GF(2^8): (r x s) @ (s x t)."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
    for r in range(a.shape[0]):
        out[r] = np.bitwise_xor.reduce(MUL_TABLE[a[r][:, None], b], axis=0)
    return out


def encode_repairs(sources: np.ndarray, m: int, cauchy: np.ndarray | None = None) -> np.ndarray:
    """Repair payloads for a (k, B) uint8 array of source payloads."""
    k = sources.shape[0]
    if cauchy is None:
        cauchy = build_cauchy_matrix(k, m)
    return gf_matmul(cauchy, sources)


def recover_sources(
    received: Mapping[int, np.ndarray], k: int, m: int, cauchy: np.ndarray | None = None
) -> np.ndarray | None:
    """Source payloads (k, B) from any k received symbols, or None if fewer than k.

    Uses the k lowest received indices.
    """
    if len(received) < k:
        return None
    chosen = sorted(received)[:k]
    if chosen[-1] < k:
        return np.stack([received[i] for i in chosen])
    if cauchy is None:
        cauchy = build_cauchy_matrix(k, m)
    inverse = invert_submatrix(generator_rows(chosen, k, cauchy))
    stacked = np.stack([received[i] for i in chosen])
    present = set(chosen)
    out = np.empty_like(stacked)
    for j in range(k):
        if j in present:
            out[j] = received[j]
        else:
            out[j] = np.bitwise_xor.reduce(MUL_TABLE[inverse[j][:, None], stacked], axis=0)
    return out


def _as_rows(payloads: Sequence[bytes]) -> np.ndarray:
    return np.frombuffer(b"".join(payloads), dtype=np.uint8).reshape(len(payloads), -1)


def mds_encode(padded: bytes, params: CodeParameters, block_id: int = 0) -> list[Packet]:
    sources = split_payloads(padded, params)
    m = params.p - params.k
    repairs = encode_repairs(_as_rows(sources), m, _cauchy(params.k, m))
    packets = [Packet(block_id, i, s) for i, s in enumerate(sources)]
    packets += [Packet(block_id, params.k + i, r.tobytes()) for i, r in enumerate(repairs)]
    return packets


def mds_decode_padded(packets: Iterable[Packet], params: CodeParameters) -> bytes | Insufficient:
    received = collect_packets(packets, params)
    k, m = params.k, params.p - params.k
    if len(received) < k:
        return Insufficient(len(received) * params.l, k * params.l)
    rows = {i: np.frombuffer(v, dtype=np.uint8) for i, v in received.items()}
    sources = recover_sources(rows, k, m, _cauchy(k, m))
    return sources.tobytes()


_CAUCHY_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _cauchy(k: int, m: int) -> np.ndarray:
    key = (k, m)
    if key not in _CAUCHY_CACHE:
        mat = build_cauchy_matrix(k, m)
        mat.setflags(write=False)
        _CAUCHY_CACHE[key] = mat
    return _CAUCHY_CACHE[key]


class MdsCodec:
    def encode(self, message: bytes, params: CodeParameters, block_id: int = 0) -> list[Packet]:
        return mds_encode(pad_message(message, params), params, block_id)

    def decode(self, packets: Iterable[Packet], params: CodeParameters) -> DecodeOutcome:
        result = mds_decode_padded(packets, params)
        if isinstance(result, Insufficient):
            return result
        return Success(unpad_message(result))


def mds_decode(packets: Iterable[Packet], params: CodeParameters) -> DecodeOutcome:
    return MdsCodec().decode(packets, params)
