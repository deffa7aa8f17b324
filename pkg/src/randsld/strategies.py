"""Clause-selection strategies.

A strategy receives the ordered clauses of the called predicate and returns
the ordered alternatives the engine will try.  It is consulted afresh at every
goal reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .rng import RandomStream


@dataclass(frozen=True)
class GuardParams:
    """Continuation probability ``p_c`` and per-command probabilities."""

    p_c: float
    ps: tuple

    def __post_init__(self):
        object.__setattr__(self, "ps", tuple(float(p) for p in self.ps))
        if not self.ps:
            raise ValueError("need at least one command probability (r >= 1)")
        for p in (self.p_c, *self.ps):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")

    @classmethod
    def uniform(cls, r: int, p: float, p_c: float) -> "GuardParams":
        return cls(p_c, (p,) * r)

    @property
    def r(self) -> int:
        return len(self.ps)

    @property
    def sum_p(self) -> float:
        return sum(self.ps)

    @property
    def p_max(self) -> float:
        return max(self.ps)

    @property
    def eta(self) -> float:
        return self.r * self.p_max * self.p_c

    @property
    def is_uniform(self) -> bool:
        return all(p == self.ps[0] for p in self.ps)


@dataclass(frozen=True)
class DropShuffleParams:
    p_d: float
    r: int

    def __post_init__(self):
        if not 0.0 <= self.p_d <= 1.0:
            raise ValueError(f"drop probability {self.p_d} outside [0, 1]")
        if self.r < 1:
            raise ValueError("r must be >= 1")


def select_standard(matches: Sequence) -> list:
    return list(matches)


def select_guard(matches: Sequence, rng: RandomStream) -> list:
    # one draw per clause, in source order, whether or not it can unify
    return [c for c in matches if rng.next_unit_float() < c.keep_probability]


def shuffle_in_place(items: list, rng: RandomStream) -> None:
    """Fisher-Yates, positions k-1 down to 1; k-1 bounded draws."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.below(i + 1)
        items[i], items[j] = items[j], items[i]


def select_drop_shuffle(matches: Sequence, rng: RandomStream, p_d: float) -> list:
    kept = [c for c in matches if not rng.next_unit_float() < p_d]
    shuffle_in_place(kept, rng)
    return kept


class Strategy:
    name = "abstract"

    def select(self, matches: Sequence, rng: RandomStream) -> list:
        raise NotImplementedError


class StandardStrategy(Strategy):
    name = "standard"

    def select(self, matches, rng):
        return list(matches)

    def __repr__(self):
        return "StandardStrategy()"


class GuardStrategy(Strategy):
    """Keeps each clause independently with its guard probability."""

    name = "guard"

    def select(self, matches, rng):
        return select_guard(matches, rng)

    def __repr__(self):
        return "GuardStrategy()"


class DropShuffleStrategy(Strategy):
    name = "drop_shuffle"

    def __init__(self, p_d: float):
        if not 0.0 <= p_d <= 1.0:
            raise ValueError(f"drop probability {p_d} outside [0, 1]")
        self.p_d = p_d

    def select(self, matches, rng):
        return select_drop_shuffle(matches, rng, self.p_d)

    def __repr__(self):
        return f"DropShuffleStrategy(p_d={self.p_d})"


STANDARD = StandardStrategy()
GUARD = GuardStrategy()


def make_strategy(name: str, p_drop: float | None = None) -> Strategy:
    if name == "standard":
        return STANDARD
    if name == "guard":
        return GUARD
    if name in ("drop_shuffle", "drop-shuffle", "ds"):
        if p_drop is None:
            raise ValueError("drop_shuffle needs a drop probability")
        return DropShuffleStrategy(p_drop)
    raise ValueError(f"unknown strategy {name!r}")
