"""Throughput sweeps, overhead curves and the doubling-ratio linearity check.

Random choices (messages, survivor subsets) derive from one master seed, so
a sweep is replayable; wall-clock times are not.
"""

from __future__ import annotations

import csv
import gc
import logging
import math
import statistics
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .channel import FixedCount, survivor_indices
from .codec import get_codec
from .core import Codec, CodecId, CodeParameters, ParameterError, Success
from .prng import SplitMix64, derive_seed

log = logging.getLogger(__name__)

THROUGHPUT_FIELDS = ["codec", "n_bits", "l_bits", "trials", "encode_s", "decode_s", "encode_MBps", "decode_MBps"]
OVERHEAD_FIELDS = ["codec", "k", "p", "l_bits", "fraction", "trials", "successes", "success_rate"]
DEFAULT_MAX_RATIO = Fraction(5, 2)


@dataclass(frozen=True)
class ThroughputRecord:
    codec: CodecId
    n_bits: int
    l_bits: int
    encode_seconds: float
    decode_seconds: float
    trial_count: int

    @property
    def encode_MB_per_s(self) -> float:
        return self.n_bits / 8e6 / self.encode_seconds

    @property
    def decode_MB_per_s(self) -> float:
        return self.n_bits / 8e6 / self.decode_seconds

    def row(self) -> dict:
        return {
            "codec": self.codec.name.lower(),
            "n_bits": self.n_bits,
            "l_bits": self.l_bits,
            "trials": self.trial_count,
            "encode_s": f"{self.encode_seconds:.6g}",
            "decode_s": f"{self.decode_seconds:.6g}",
            "encode_MBps": f"{self.encode_MB_per_s:.6g}",
            "decode_MBps": f"{self.decode_MB_per_s:.6g}",
        }


@dataclass(frozen=True)
class OverheadRecord:
    codec: CodecId
    k: int
    p: int
    l_bits: int
    fraction: Fraction
    trials: int
    successes: int

    @property
    def success_rate(self) -> Fraction:
        return Fraction(self.successes, self.trials)

    def row(self) -> dict:
        return {
            "codec": self.codec.name.lower(),
            "k": self.k,
            "p": self.p,
            "l_bits": self.l_bits,
            "fraction": f"{float(self.fraction):.6f}",
            "trials": self.trials,
            "successes": self.successes,
            "success_rate": f"{float(self.success_rate):.6f}",
        }


@dataclass(frozen=True)
class LinearityReport:
    passed: bool
    max_ratio: Fraction
    encode_ratios: tuple[float, ...]
    decode_ratios: tuple[float, ...]

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        enc = ", ".join(f"{r:.2f}" for r in self.encode_ratios)
        dec = ", ".join(f"{r:.2f}" for r in self.decode_ratios)
        return f"linearity {verdict} (max ratio {float(self.max_ratio):g}): encode [{enc}] decode [{dec}]"


def _timed(fn: Callable[[], object]) -> tuple[float, object]:
    enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter()
        out = fn()
        return time.perf_counter() - start, out
    finally:
        if enabled:
            gc.enable()


def delivered_count(fraction: Fraction, p: int) -> int:
    """Packets delivered for a received fraction of p (rounded down)."""
    return math.floor(Fraction(fraction) * p)


def run_throughput(
    template: CodeParameters,
    sizes: Sequence[int],
    trials: int = 5,
    seed: int = 0,
    received: Fraction = Fraction(3, 4),
    warmup: int = 1,
) -> list[ThroughputRecord]:
    """Median encode and decode time per message size, with l held at ``template.l``.

    Each trial encodes a fresh random message and decodes a seeded random
    subset holding ``received`` of the p packets. Trials are interleaved
    across sizes so slow spells on a shared machine hit every size alike.
    ``warmup`` untimed round trips per size go first so graph construction
    is not timed.
    """
    if list(sizes) != sorted(set(sizes)):
        raise ParameterError("sizes must be strictly increasing")
    if trials < 1:
        raise ParameterError("need at least one trial")
    if warmup < 0:
        raise ParameterError("warmup must be non-negative")
    codec = get_codec(template.codec)
    configs = [replace(template, n=n) for n in sizes]
    assert all(params.l == template.l for params in configs)
    for params in configs:
        for _ in range(warmup):
            codec.decode(codec.encode(bytes(params.message_bytes), params), params)
    enc_times: list[list[float]] = [[] for _ in configs]
    dec_times: list[list[float]] = [[] for _ in configs]
    for t in range(trials):
        for si, params in enumerate(configs):
            rng = SplitMix64(derive_seed(seed, si, t))
            message = rng.randbytes(params.message_bytes)
            enc_s, packets = _timed(lambda: codec.encode(message, params))
            deliver = FixedCount(delivered_count(received, params.p))
            keep = [packets[i] for i in survivor_indices(len(packets), deliver, rng.next_u64())]
            dec_s, outcome = _timed(lambda: codec.decode(keep, params))
            if not (isinstance(outcome, Success) and outcome.message == message):
                log.warning("decode failed during timing: n=%d trial=%d outcome=%r", params.n, t, outcome)
            enc_times[si].append(enc_s)
            dec_times[si].append(dec_s)
    return [
        ThroughputRecord(
            params.codec, params.n, params.l, statistics.median(enc), statistics.median(dec), trials
        )
        for params, enc, dec in zip(configs, enc_times, dec_times)
    ]


def run_overhead_curve(
    params: CodeParameters,
    fractions: Iterable[Fraction],
    trials: int = 200,
    seed: int = 0,
    codec: Codec | None = None,
) -> list[OverheadRecord]:
    """Decode success rate when a uniformly random subset of ``fraction * p`` packets arrives.

    ``codec`` overrides the backend looked up from ``params.codec``, e.g. a
    peeling-only cascade decoder.
    """
    codec = codec or get_codec(params.codec)
    message = SplitMix64(derive_seed(seed, 0xC0DE)).randbytes(params.message_bytes)
    packets = codec.encode(message, params)
    records = []
    for fi, fraction in enumerate(fractions):
        fraction = Fraction(fraction)
        if not 0 < fraction <= 1:
            raise ParameterError(f"received fraction {fraction} outside (0, 1]")
        model = FixedCount(delivered_count(fraction, params.p))
        successes = 0
        for t in range(trials):
            keep = [packets[i] for i in survivor_indices(len(packets), model, derive_seed(seed, fi, t))]
            outcome = codec.decode(keep, params)
            if isinstance(outcome, Success):
                if outcome.message != message:
                    raise AssertionError(f"decoder returned a wrong message at fraction {fraction}, trial {t}")
                successes += 1
        records.append(OverheadRecord(params.codec, params.k, params.p, params.l, fraction, trials, successes))
    return records


def check_linearity(records: Sequence[ThroughputRecord], max_ratio=DEFAULT_MAX_RATIO) -> LinearityReport:
    """Pass iff every consecutive encode and decode time ratio is at most ``max_ratio``."""
    if len(records) < 2:
        raise ParameterError("linearity check needs at least two records")
    max_ratio = Fraction(max_ratio)
    enc = tuple(b.encode_seconds / a.encode_seconds for a, b in zip(records, records[1:]))
    dec = tuple(b.decode_seconds / a.decode_seconds for a, b in zip(records, records[1:]))
    passed = all(r <= max_ratio for r in enc + dec)
    return LinearityReport(passed, max_ratio, enc, dec)


def _write_csv(path, fields: list[str], rows: Iterable[dict]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_throughput_csv(records: Iterable[ThroughputRecord], path) -> None:
    _write_csv(path, THROUGHPUT_FIELDS, (r.row() for r in records))


def write_overhead_csv(records: Iterable[OverheadRecord], path) -> None:
    _write_csv(path, OVERHEAD_FIELDS, (r.row() for r in records))
