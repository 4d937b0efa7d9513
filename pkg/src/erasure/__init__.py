"""(n, c, l, r)-erasure-resilient codes: an exact MDS backend and a linear-time cascade backend."""

from .core import (
    CodecId,
    CodeParameters,
    DecodeOutcome,
    Insufficient,
    Packet,
    ParameterError,
    Stalled,
    Success,
    deserialize_packet,
    pad_message,
    serialize_packet,
    unpad_message,
    validate_params,
)
from .codec import decode, encode, get_codec

__all__ = [
    "CodecId",
    "CodeParameters",
    "DecodeOutcome",
    "Insufficient",
    "Packet",
    "ParameterError",
    "Stalled",
    "Success",
    "decode",
    "deserialize_packet",
    "encode",
    "get_codec",
    "pad_message",
    "serialize_packet",
    "unpad_message",
    "validate_params",
]
