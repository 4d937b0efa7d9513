"""Seeded erasure channels: i.i.d. loss, Gilbert-Elliott bursts, and fixed-size delivery."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, TypeVar, Union

from .core import ParameterError, as_fraction
from .prng import SplitMix64

T = TypeVar("T")


def _probability(name: str, value) -> Fraction:
    value = as_fraction(value)
    if not 0 <= value <= 1:
        raise ParameterError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class IID:
    loss_probability: Fraction

    def __post_init__(self):
        object.__setattr__(self, "loss_probability", _probability("loss_probability", self.loss_probability))


@dataclass(frozen=True)
class Burst:
    """Two-state Gilbert-Elliott chain; the good state never loses, the bad state loses with ``loss_in_bad``."""

    p_good_to_bad: Fraction
    p_bad_to_good: Fraction
    loss_in_bad: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("p_good_to_bad", "p_bad_to_good", "loss_in_bad"):
            object.__setattr__(self, name, _probability(name, getattr(self, name)))

    def stationary_loss_rate(self) -> Fraction:
        total = self.p_good_to_bad + self.p_bad_to_good
        if total == 0:
            return Fraction(0)  # chain never leaves the starting good state
        return self.p_good_to_bad / total * self.loss_in_bad


@dataclass(frozen=True)
class FixedCount:
    deliver_exactly: int

    def __post_init__(self):
        if self.deliver_exactly < 0:
            raise ParameterError("deliver_exactly must be non-negative")


LossModel = Union[IID, Burst, FixedCount]


class _Coin:
    """Exact Bernoulli draws: compare a 64-bit word with floor(prob * 2^64)."""

    def __init__(self, rng: SplitMix64):
        self.rng = rng

    def flip(self, prob: Fraction) -> bool:
        if prob >= 1:
            self.rng.next_u64()
            return True
        return self.rng.next_u64() < int(prob * (1 << 64))


def survivor_indices(count: int, model: LossModel, seed: int) -> list[int]:
    """Positions in range(count) that survive the channel, ascending."""
    rng = SplitMix64(seed)
    if isinstance(model, FixedCount):
        if model.deliver_exactly > count:
            raise ParameterError(
                f"cannot deliver {model.deliver_exactly} of only {count} packets"
            )
        return sorted(rng.sample(count, model.deliver_exactly))
    coin = _Coin(rng)
    if isinstance(model, IID):
        return [i for i in range(count) if not coin.flip(model.loss_probability)]
    if isinstance(model, Burst):
        bad = False
        out = []
        for i in range(count):
            lost = bad and coin.flip(model.loss_in_bad)
            if not lost:
                out.append(i)
            bad = not coin.flip(model.p_bad_to_good) if bad else coin.flip(model.p_good_to_bad)
        return out
    raise TypeError(f"unknown loss model {model!r}")


def apply_loss(packets: Sequence[T], model: LossModel, seed: int) -> list[T]:
    return [packets[i] for i in survivor_indices(len(packets), model, seed)]
