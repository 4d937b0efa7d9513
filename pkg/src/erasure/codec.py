"""Backend dispatch behind the common encode/decode contract."""

from __future__ import annotations

from typing import Iterable

from .cascade import CascadeCodec
from .core import Codec, CodecId, CodeParameters, DecodeOutcome, Packet
from .mds import MdsCodec

_BACKENDS: dict[CodecId, Codec] = {CodecId.MDS: MdsCodec(), CodecId.CASCADE: CascadeCodec()}


def get_codec(codec_id) -> Codec:
    return _BACKENDS[CodecId.parse(codec_id)]


def encode(message: bytes, params: CodeParameters, block_id: int = 0) -> list[Packet]:
    """Encode ``message`` (exactly n bits) into p packets of l bits each."""
    return get_codec(params.codec).encode(message, params, block_id)


def decode(packets: Iterable[Packet], params: CodeParameters) -> DecodeOutcome:
    return get_codec(params.codec).decode(packets, params)
