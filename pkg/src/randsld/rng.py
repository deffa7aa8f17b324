"""Deterministic random streams.

Every random decision in the package is drawn from a :class:`RandomStream`,
a SplitMix64 generator.  The draw primitives are fixed so that a seed fully
determines a run:

* ``next_u64``          -- one SplitMix64 output
* ``next_unit_float``   -- ``(next_u64() >> 11) * 2**-53``, uniform on [0, 1)
* ``bernoulli(p)``      -- ``next_unit_float() < p`` (exact at p=0 and p=1)
* ``below(n)``          -- uniform integer in [0, n) by rejection on u64

Per-trial streams are derived with :func:`derive_seed`, which mixes the master
seed and the trial index through the SplitMix64 finalizer::

    derive_seed(seed, i) = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed of the ``index``-th independent sub-stream of ``seed``."""
    return mix64((seed + (index + 1) * GOLDEN) & MASK64)


class RandomStream:
    """SplitMix64 stream.  Single owner; not thread safe."""

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int = 0):
        self.seed = seed & MASK64
        self._state = self.seed

    def next_u64(self) -> int:
        self._state = s = (self._state + GOLDEN) & MASK64
        s = ((s ^ (s >> 30)) * _M1) & MASK64
        s = ((s ^ (s >> 27)) * _M2) & MASK64
        return s ^ (s >> 31)

    def next_unit_float(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def bernoulli(self, p: float) -> bool:
        return self.next_unit_float() < p

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def spawn(self, index: int) -> "RandomStream":
        return RandomStream(derive_seed(self.seed, index))

    @property
    def state(self) -> int:
        return self._state

    def __repr__(self):
        return f"RandomStream(seed={self.seed:#x})"


class CountingStream(RandomStream):
    """A stream that counts how many u64 draws were consumed."""

    __slots__ = ("draws",)

    def __init__(self, seed: int = 0):
        super().__init__(seed)
        self.draws = 0

    def next_u64(self) -> int:
        self.draws += 1
        return super().next_u64()
