"""Counter-based seeded randomness with named substreams.

Each (seed, label) pair is an independent stream: draws are produced by
hashing (key, label, counter), so adding a new draw site or reordering
draws in one stream never perturbs any other stream.  All simulation
randomness flows through this module; nothing uses `random` or global
numpy state, which is what makes whole runs replayable from one integer
seed.
"""

from __future__ import annotations

import hashlib
import math


class Stream:
    """One deterministic random stream identified by (seed, label)."""

    __slots__ = ("_key", "_label", "_counter", "_buf")

    def __init__(self, seed: int | bytes, label: str = "root"):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "big", signed=False)
        self._key = seed
        self._label = label.encode("utf-8")
        self._counter = 0
        self._buf: list[int] = []

    def substream(self, label: str) -> "Stream":
        sub = hashlib.blake2b(self._label + b"/" + label.encode("utf-8"),
                              digest_size=16, key=self._key).digest()
        return Stream(sub, label)

    def _refill(self) -> None:
        block = hashlib.blake2b(self._label + self._counter.to_bytes(8, "big"),
                                digest_size=32, key=self._key).digest()
        self._counter += 1
        self._buf = [int.from_bytes(block[i:i + 8], "big") for i in (24, 16, 8, 0)]

    def u64(self) -> int:
        if not self._buf:
            self._refill()
        return self._buf.pop()

    def uniform(self) -> float:
        # 53-bit mantissa, [0, 1)
        return (self.u64() >> 11) * (1.0 / (1 << 53))

    def normal(self, mean: float, std: float) -> float:
        # Box-Muller; u1 bounded away from 0 so log() is safe
        u1 = max(self.uniform(), 1e-300)
        u2 = self.uniform()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        return mean + std * z

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi)."""
        span = hi - lo
        if span <= 0:
            raise ValueError("empty range")
        # rejection sampling to avoid modulo bias
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.u64()
            if x < limit:
                return lo + (x % span)

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), order of selection."""
        if k > n:
            raise ValueError("sample larger than population")
        chosen: set[int] = set()
        out: list[int] = []
        while len(out) < k:
            i = self.randint(0, n)
            if i not in chosen:
                chosen.add(i)
                out.append(i)
        return out

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i + 1)
            items[i], items[j] = items[j], items[i]
