"""Code parameters, packets, padding, decode outcomes and the packet wire format."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Protocol, Sequence, Union

LENGTH_PREFIX_BYTES = 8
MAGIC = b"ERPK"
WIRE_VERSION = 1
# magic, version, codec, block_id, n, k, p, l, seed, index
_HEADER = struct.Struct("<4sBBQQIIIQI")
HEADER_SIZE = _HEADER.size  # 46
_U32 = (1 << 32) - 1
_U64 = (1 << 64) - 1


class ParameterError(ValueError):
    pass


class CorruptionError(ValueError):
    pass


class DecodeInputError(ValueError):
    """Packets handed to a decoder are inconsistent (duplicates, mixed blocks, bad sizes)."""


class PacketFormatError(ValueError):
    pass


class BadMagicError(PacketFormatError):
    pass


class UnsupportedVersionError(PacketFormatError):
    pass


class TruncatedPacketError(PacketFormatError):
    pass


class CodecId(enum.IntEnum):
    MDS = 0
    CASCADE = 1

    @classmethod
    def parse(cls, name: "str | int | CodecId") -> "CodecId":
        if isinstance(name, str):
            try:
                return cls[name.upper()]
            except KeyError:
                raise ParameterError(f"unknown codec {name!r}") from None
        return cls(name)


def round_half_up(x: Fraction) -> int:
    return int((x * 2 + 1) // 2)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def as_fraction(x) -> Fraction:
    """Parse ints, Fractions, or strings like "2", "3/2", "1.15" exactly."""
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class CodeParameters:
    """The (n, c, l, r) quadruple plus everything a backend needs to build its code.

    ``n`` and ``l`` are in bits.  ``k`` (source packets) and ``p`` (total
    packets) are derived: k covers the length-prefixed message, p = round(c*k).
    ``degree``, ``decay`` and ``tail_threshold`` only matter to the cascade.
    """

    n: int
    c: Fraction
    l: int
    codec: CodecId = CodecId.MDS
    r: Fraction = Fraction(1)
    seed: int = 0
    degree: int = 3
    decay: Fraction = Fraction(1, 2)
    tail_threshold: int = 32
    k: int = field(init=False)
    p: int = field(init=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "c", as_fraction(self.c))
        set_(self, "r", as_fraction(self.r))
        set_(self, "decay", as_fraction(self.decay))
        set_(self, "codec", CodecId.parse(self.codec))
        if self.n <= 0:
            raise ParameterError("message length n must be positive")
        if self.n % 8:
            raise ParameterError("message length n must be a whole number of bytes")
        if self.c <= 1:
            raise ParameterError("stretch factor must exceed 1")
        if self.l < 8 or self.l % 8:
            raise ParameterError("packet length l must be a positive multiple of 8 bits")
        if self.r < 1:
            raise ParameterError("decoding overhead r must be at least 1")
        if not 0 <= self.seed <= _U64:
            raise ParameterError("seed must fit in 64 bits")
        k = ceil_div(self.n + 8 * LENGTH_PREFIX_BYTES, self.l)
        p = round_half_up(self.c * k)
        if p <= k:
            raise ParameterError(
                f"total packet count p={p} must exceed source count k={k}; raise c"
            )
        if p * self.l < self.c * self.n:
            raise ParameterError("p*l falls short of c*n; use a smaller l")
        if max(p, self.l) > _U32 or self.n > _U64:
            raise ParameterError("p and l must fit in 32 bits, n in 64 bits")
        if self.codec is CodecId.MDS and p > 256:
            raise ParameterError(
                f"MDS backend needs p <= 256 (got p={p}); increase l or use the cascade codec"
            )
        if self.codec is CodecId.CASCADE:
            if self.degree < 2:
                raise ParameterError("cascade degree must be at least 2")
            if not 0 < self.decay < 1:
                raise ParameterError("cascade decay must lie strictly between 0 and 1")
            if not 1 <= self.tail_threshold <= 128:
                raise ParameterError("cascade tail threshold must lie in [1, 128]")
        set_(self, "k", k)
        set_(self, "p", p)

    @property
    def payload_bytes(self) -> int:
        return self.l // 8

    @property
    def message_bytes(self) -> int:
        return self.n // 8

    @property
    def padded_bytes(self) -> int:
        return self.k * self.payload_bytes


def validate_params(params: CodeParameters) -> CodeParameters:
    """Re-run validation, e.g. on a parameter set reassembled from untrusted input."""
    return replace(params)


@dataclass(frozen=True)
class Packet:
    block_id: int
    index: int
    payload: bytes


@dataclass(frozen=True)
class PacketHeader:
    codec: CodecId
    block_id: int
    n: int
    k: int
    p: int
    l: int
    seed: int
    index: int


@dataclass(frozen=True)
class Success:
    message: bytes
    ok = True


@dataclass(frozen=True)
class Insufficient:
    received_bits: int
    required_bits: int
    ok = False


@dataclass(frozen=True)
class Stalled:
    unresolved: int
    ok = False


DecodeOutcome = Union[Success, Insufficient, Stalled]


class Codec(Protocol):
    def encode(self, message: bytes, params: CodeParameters, block_id: int = 0) -> list[Packet]: ...

    def decode(self, packets: Iterable[Packet], params: CodeParameters) -> DecodeOutcome: ...


def pad_message(message: bytes, params: CodeParameters) -> bytes:
    if not message:
        raise ParameterError("empty messages cannot be encoded")
    if len(message) * 8 != params.n:
        raise ParameterError(f"message is {len(message) * 8} bits, params say n={params.n}")
    room = params.padded_bytes - LENGTH_PREFIX_BYTES
    if len(message) > room:
        raise ParameterError(f"message of {len(message)} bytes exceeds capacity {room}")
    prefix = len(message).to_bytes(LENGTH_PREFIX_BYTES, "little")
    return prefix + message + bytes(room - len(message))


def unpad_message(padded: bytes) -> bytes:
    if len(padded) < LENGTH_PREFIX_BYTES:
        raise CorruptionError("padded block shorter than its length prefix")
    size = int.from_bytes(padded[:LENGTH_PREFIX_BYTES], "little")
    if size == 0:
        raise CorruptionError("length prefix declares an empty message")
    if size > len(padded) - LENGTH_PREFIX_BYTES:
        raise CorruptionError(
            f"length prefix declares {size} bytes but only "
            f"{len(padded) - LENGTH_PREFIX_BYTES} are available"
        )
    return bytes(padded[LENGTH_PREFIX_BYTES:LENGTH_PREFIX_BYTES + size])


def split_payloads(padded: bytes, params: CodeParameters) -> list[bytes]:
    if len(padded) != params.padded_bytes:
        raise ParameterError(
            f"padded message is {len(padded)} bytes, expected k*l/8 = {params.padded_bytes}"
        )
    size = params.payload_bytes
    return [padded[i * size:(i + 1) * size] for i in range(params.k)]


def collect_packets(packets: Iterable[Packet], params: CodeParameters) -> dict[int, bytes]:
    """Index -> payload map, rejecting duplicates, mixed blocks and malformed packets."""
    received: dict[int, bytes] = {}
    block = None
    for pkt in packets:
        if block is None:
            block = pkt.block_id
        elif pkt.block_id != block:
            raise DecodeInputError(f"packets from blocks {block} and {pkt.block_id} mixed")
        if not 0 <= pkt.index < params.p:
            raise DecodeInputError(f"packet index {pkt.index} outside [0, {params.p})")
        if len(pkt.payload) != params.payload_bytes:
            raise DecodeInputError(
                f"packet {pkt.index} carries {len(pkt.payload)} bytes, expected {params.payload_bytes}"
            )
        if pkt.index in received:
            raise DecodeInputError(f"duplicate packet index {pkt.index}")
        received[pkt.index] = bytes(pkt.payload)
    return received


def serialize_packet(packet: Packet, params: CodeParameters) -> bytes:
    header = _HEADER.pack(
        MAGIC,
        WIRE_VERSION,
        int(params.codec),
        packet.block_id,
        params.n,
        params.k,
        params.p,
        params.l,
        params.seed,
        packet.index,
    )
    return header + bytes(packet.payload)


def deserialize_packet(data: bytes) -> tuple[PacketHeader, Packet]:
    if len(data) < 5:
        raise TruncatedPacketError(f"{len(data)} bytes is shorter than magic and version")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {bytes(data[:4])!r}")
    if data[4] != WIRE_VERSION:
        raise UnsupportedVersionError(f"unsupported wire version {data[4]}")
    if len(data) < HEADER_SIZE:
        raise TruncatedPacketError(f"header truncated at {len(data)} of {HEADER_SIZE} bytes")
    _, _, codec, block_id, n, k, p, l, seed, index = _HEADER.unpack_from(data)
    try:
        codec = CodecId(codec)
    except ValueError:
        raise PacketFormatError(f"unknown codec id {codec}") from None
    if l == 0 or l % 8:
        raise PacketFormatError(f"packet length {l} is not a positive multiple of 8")
    if index >= p:
        raise PacketFormatError(f"index {index} outside [0, {p})")
    payload = data[HEADER_SIZE:]
    if len(payload) < l // 8:
        raise TruncatedPacketError(f"payload truncated: {len(payload)} of {l // 8} bytes")
    if len(payload) > l // 8:
        raise PacketFormatError(f"{len(payload) - l // 8} trailing bytes after payload")
    header = PacketHeader(codec, block_id, n, k, p, l, seed, index)
    return header, Packet(block_id, index, bytes(payload))


def params_from_header(header: PacketHeader, **cascade_options) -> CodeParameters:
    """Rebuild parameters from a packet header; c is recovered as p/k exactly."""
    params = CodeParameters(
        n=header.n,
        c=Fraction(header.p, header.k),
        l=header.l,
        codec=header.codec,
        seed=header.seed,
        **cascade_options,
    )
    if (params.k, params.p) != (header.k, header.p):
        raise PacketFormatError(
            f"header k={header.k}, p={header.p} inconsistent with n={header.n}, l={header.l}"
        )
    return params


def total_payload_bits(packets: Sequence[Packet]) -> int:
    return sum(8 * len(pkt.payload) for pkt in packets)
