"""Closed-form expectations and mean hitting times for both strategies.

Quantities that are infinite for the given parameters come back as a
:class:`Diverges` value instead of a float.  Parameters outside a formula's
domain raise :class:`ValidityError` with the list of failed conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .strategies import DropShuffleParams, GuardParams


class ValidityError(ValueError):
    def __init__(self, reasons: Sequence[str]):
        self.reasons = tuple(reasons)
        super().__init__("; ".join(self.reasons))


@dataclass(frozen=True)
class Diverges:
    """Tag for an expectation that is infinite."""

    reason: str

    def __str__(self):
        return f"diverges ({self.reason})"


Value = Union[float, Diverges]


# -- guard strategy ---------------------------------------------------------


def guard_conditions(params: GuardParams) -> list[str]:
    """Violated preconditions of the expectation formulas (empty if valid)."""
    bad = []
    if not params.p_c < 1.0:
        bad.append("p_c < 1 violated")
    if not params.eta < 1.0:
        bad.append(f"eta = r*p_max*p_c = {params.eta!r} < 1 violated")
    return bad


def hitting_conditions(params: GuardParams) -> list[str]:
    bad = []
    if not params.is_uniform:
        bad.append("hitting times need p_1 = ... = p_r")
    nu = params.ps[0] * params.p_c
    if not nu * params.r < 1.0:
        bad.append(f"nu*r = {nu * params.r!r} < 1 violated")
    return bad


def guard_expectations(params: GuardParams) -> tuple[float, float]:
    """Mean outputs and mean visited states below a block root: (E[O], E[N])."""
    bad = guard_conditions(params)
    if bad:
        raise ValidityError(bad)
    s = params.sum_p
    denom = 1.0 - params.p_c * s
    return s / denom, (params.r + s) / denom


@dataclass(frozen=True)
class GuardDerived:
    sum_p: float
    eta: float
    C: float
    EO: float
    nu: Optional[float]
    delta: Optional[float]


def guard_derived(params: GuardParams) -> GuardDerived:
    eo, en = guard_expectations(params)
    nu = delta = None
    if params.is_uniform:
        p = params.ps[0]
        nu = p * params.p_c
        delta = 1.0 + p * (1.0 + params.p_c * en)
    return GuardDerived(params.sum_p, params.eta, en, eo, nu, delta)


def _check_word(alpha: Sequence[int], r: int) -> tuple:
    alpha = tuple(int(a) for a in alpha)
    for a in alpha:
        if not 1 <= a <= r:
            raise ValueError(f"letter {a} outside 1..{r}")
    return alpha


def block_reach_prob(alpha: Sequence[int], params: GuardParams, from_root: bool = False) -> float:
    """Probability that the block ``alpha`` is ever entered.

    Measured from the root of the empty block, or from the start state when
    ``from_root`` (which adds one continuation factor).
    """
    alpha = _check_word(alpha, params.r)
    prob = params.p_c ** (len(alpha) + (1 if from_root else 0))
    for a in alpha:
        prob *= params.ps[a - 1]
    return prob


def _uniform_delta(params: GuardParams) -> tuple[float, float, float]:
    bad = hitting_conditions(params)
    if bad:
        raise ValidityError(bad)
    p = params.ps[0]
    nu = p * params.p_c
    _, en = guard_expectations(params)
    return p, nu, 1.0 + p * (1.0 + params.p_c * en)


def guard_U(i: int, params: GuardParams) -> float:
    """Expected steps from s_i until the block is left upward."""
    r = params.r
    if not 1 <= i <= r + 1:
        raise ValueError(f"index {i} outside 1..{r + 1}")
    _, _, delta = _uniform_delta(params)
    return (r - i + 1) * delta


def guard_hitting_time(alpha: Sequence[int], i: int, params: GuardParams) -> float:
    """Mean steps from the start state to s_i^alpha in the looped chain whose
    start state moves to s_1 of the empty block with probability 1."""
    r = params.r
    alpha = _check_word(alpha, r)
    if not 1 <= i <= r:
        raise ValueError(f"index {i} outside 1..{r}")
    p, nu, delta = _uniform_delta(params)
    t = len(alpha)
    total = nu ** -t + (i - 1) * delta
    tail = 0.0
    for k, a in enumerate(alpha, 1):
        tail += (r - a) * delta
        total += (1.0 + p + (a - 1) * delta + (1.0 - nu) * tail) / nu ** (t + 1 - k)
    return total


def guard_hitting_time_recursive(alpha: Sequence[int], i: int, params: GuardParams) -> float:
    """Same quantity by peeling one letter at a time; used as a cross-check."""
    r = params.r
    alpha = _check_word(alpha, r)
    p, nu, delta = _uniform_delta(params)

    def up_time(word, idx):
        # expected steps from s_idx^word back to the start state
        return delta * (1 + (r - idx) + sum(r - a for a in word))

    def mht(word, idx):
        if not word:
            return 1.0 + (idx - 1) * delta
        beta, j = word[:-1], word[-1]
        root = (mht(beta, j) + 1.0 + p + (1.0 - nu) * up_time(beta, j + 1)) / nu
        return root + (idx - 1) * delta

    return mht(alpha, i)


# -- drop-and-shuffle strategy ----------------------------------------------


def _ds_params(params_or_pd, r: Optional[int] = None) -> DropShuffleParams:
    if isinstance(params_or_pd, DropShuffleParams):
        return params_or_pd
    if r is None:
        raise TypeError("pass DropShuffleParams or (p_d, r)")
    return DropShuffleParams(float(params_or_pd), int(r))


def ds_constant(params: DropShuffleParams) -> Value:
    """Mean states visited from the empty stack until termination."""
    keep = 1.0 - params.p_d
    denom = 1.0 - params.r * keep * keep
    if not denom > 0.0:
        bound = 1.0 - 1.0 / math.sqrt(params.r)
        return Diverges(f"p_d <= 1 - 1/sqrt(r) = {bound:.6g}")
    return (1.0 + 2.0 * keep) / denom


def ds_q(l: int, p_d: float) -> float:
    """Probability of leaving a sub-tree before emitting a given length-l suffix."""
    if l < 0:
        raise ValueError("length must be >= 0")
    return 1.0 - (1.0 - p_d) ** (2 * l + 1)


def ds_conditions(params: DropShuffleParams) -> list[str]:
    bad = []
    if not params.r * (1.0 - params.p_d) ** 2 < 1.0:
        bad.append(f"p_d > 1 - 1/sqrt(r) = {1.0 - 1.0 / math.sqrt(params.r):.6g} violated")
    if not params.p_d < 1.0:
        bad.append("p_d < 1 violated")
    return bad


@dataclass(frozen=True)
class DsDerived:
    C: float
    alpha: float
    beta: float
    gamma: float
    h0: float


def ds_derived(params: DropShuffleParams) -> DsDerived:
    bad = ds_conditions(params)
    if bad:
        raise ValidityError(bad)
    pd, r = params.p_d, params.r
    C = ds_constant(params)
    k = 1.0 - pd
    alpha = k * k
    beta = -((1.0 + C * (r - 1)) / 2.0) * k ** 4
    gamma = C * k * k * (r - 1) + (k * (1.0 + pd) + k ** 3) / 2.0
    h0 = 1.0 + 0.5 * (1.0 - pd * pd) * (1.0 + C)
    return DsDerived(C, alpha, beta, gamma, h0)


def ds_h(i: int, params: DropShuffleParams) -> float:
    """h_i by iterating h_{n+1} = alpha*h_n + beta*alpha**n + gamma."""
    if i < 0:
        raise ValueError("i must be >= 0")
    d = ds_derived(params)
    h = d.h0
    for n in range(i):
        h = d.alpha * h + d.beta * d.alpha ** n + d.gamma
    return h


def ds_h_iterated(i: int, params: DropShuffleParams) -> float:
    """h_i from the solved recursion alpha^i h0 + i beta alpha^(i-1) + gamma (1-alpha^i)/(1-alpha)."""
    d = ds_derived(params)
    a = d.alpha
    lead = i * d.beta * a ** (i - 1) if i > 0 else 0.0
    return a ** i * d.h0 + lead + d.gamma * (1.0 - a ** i) / (1.0 - a)


def ds_h_closed(i: int, params: DropShuffleParams) -> float:
    """Fully expanded h_i, with the stray symbol p read as p_d."""
    d = ds_derived(params)
    pd, r, C = params.p_d, params.r, d.C
    k = 1.0 - pd
    p = pd
    w = pd * (2.0 - pd)
    a = C * k * k * (r - 1) / w
    b = ((1 - p) * (1 + p) + (1 - p) ** 3) / (2.0 * w)
    inner = 1.0 + (1.0 - pd * pd) * (1.0 + C) / 2.0 - a - b - i * k * k * (1.0 + C * (r - 1)) / 2.0
    return k ** (2 * i) * inner + (a + b)


def ds_hitting_time(l: int, params: DropShuffleParams) -> float:
    """(h_l + q_l) / (1 - q_l): mean steps from the empty stack to an output of a
    given length-l test case in the looped chain."""
    q = ds_q(l, params.p_d)
    # 1 - q taken directly; subtracting q from 1 loses every digit for long targets
    return (ds_h(l, params) + q) / (1.0 - params.p_d) ** (2 * l + 1)


def ds_hitting_time_closed(l: int, params: DropShuffleParams) -> float:
    """The expanded single-expression form of :func:`ds_hitting_time`, with p read as p_d."""
    d = ds_derived(params)
    pd, r, C = params.p_d, params.r, d.C
    k = 1.0 - pd
    p = pd
    w = pd * (2.0 - pd)
    K = C * k * k * (r - 1) / w + ((1 - p) * (1 + p) + (1 - p) ** 3) / (2.0 * w)
    return ((1.0 + K) / k ** (2 * l + 1)
            + (1.0 + pd) * (1.0 + C) / 2.0
            - C * k * (r - 1) / w
            - ((1.0 + pd) + k * k) / (2.0 * w)
            - l * k * (1.0 + C * (r - 1)) / 2.0
            - k
            + 1.0 / k)


# Corrected recursion.  From the empty stack the two t/1 selections that hit
# A_0 directly cost one step; [H|T][] pays a full sub-tree (r(1-p_d)C on
# average) before reaching its [] output, and [H|T] alone never outputs.


def ds_g(i: int, params: DropShuffleParams) -> float:
    """Mean steps from the empty stack until an output of the first i symbols
    of the target, or termination; exact version of h_i."""
    if i < 0:
        raise ValueError("i must be >= 0")
    bad = ds_conditions(params)
    if bad:
        raise ValidityError(bad)
    pd, r = params.p_d, params.r
    C = ds_constant(params)
    k = 1.0 - pd
    g = 1.0 + 0.5 * (1.0 - pd * pd) * (1.0 + r * k * C)
    for n in range(i):
        q = ds_q(n, pd)
        m = 1.0 + pd * k * (r - 1) * C + k * (g + (1.0 + q) * (r - 1) * k * C / 2.0)
        g = 1.0 + pd * k + 0.5 * k * k * (1.0 + pd) + 0.5 * k ** 3 * q + k * m
    return g


def ds_hitting_time_exact(l: int, params: DropShuffleParams) -> float:
    q = ds_q(l, params.p_d)
    return (ds_g(l, params) + q) / (1.0 - params.p_d) ** (2 * l + 1)
