"""SplitMix64: the single portable generator behind every random choice.

Graph edges, channel losses and benchmark messages all draw from this
generator so a run is replayable from its 64-bit seeds on any platform.
Do not swap the algorithm; recorded packet sets and drop reports depend
on its exact output stream.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *labels: int) -> int:
    """Hash a master seed and integer labels into an independent sub-seed."""
    z = seed & MASK64
    for label in labels:
        z = mix64((z + _GOLDEN + (label & MASK64)) & MASK64)
    return z


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = MASK64 + 1 - ((MASK64 + 1) % bound)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % bound

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def bernoulli(self, prob) -> bool:
        """True with probability ``prob`` (a Fraction or float in [0, 1])."""
        if prob >= 1:
            return True
        if prob <= 0:
            return False
        return self.random() < prob

    def sample(self, population: int, count: int) -> list[int]:
        """``count`` distinct values from range(population), partial Fisher-Yates."""
        if count > population:
            raise ValueError("sample larger than population")
        pool = list(range(population))
        for i in range(count):
            j = i + self.below(population - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:count]

    def randbytes(self, n: int) -> bytes:
        words = -(-n // 8)
        out = b"".join(self.next_u64().to_bytes(8, "little") for _ in range(words))
        return out[:n]
