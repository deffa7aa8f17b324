"""The two Markov chains, state by state, plus an exact solver for
depth-truncated versions of them.

Guard chain states are :data:`ROOT`, :data:`BOTTOM` or a :class:`GuardNode`.
Drop-and-shuffle states are tuples of frames (or :data:`DS_BOTTOM`).  A frame
is a selection code or a pair ``(selection, commands)``:

====== ===========
code   selection
====== ===========
``N``  ``[]``
``C``  ``[H|T]``
``NC`` ``[][H|T]``
``CN`` ``[H|T][]``
====== ===========

Only the top frame may be a bare selection.  The sampling functions draw
random numbers in the same order the engine does for the matching program,
so a chain trajectory and an engine run driven by equal seeds line up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Hashable, Iterable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .rng import RandomStream
from .strategies import DropShuffleParams, GuardParams

# -- guard chain ------------------------------------------------------------


@dataclass(frozen=True)
class GuardNode:
    kind: str  # "s" or "c"
    index: int
    block: tuple = ()

    def __post_init__(self):
        if self.kind not in ("s", "c"):
            raise ValueError("kind must be 's' or 'c'")
        if self.index < 1:
            raise ValueError("index must be >= 1")

    def __repr__(self):
        word = "".join(map(str, self.block)) or "e"
        return f"{self.kind}{self.index}^{word}"


class _Special:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_special, (self.name,))


_SPECIALS: dict = {}


def _special(name):
    s = _SPECIALS.get(name)
    if s is None:
        s = _SPECIALS[name] = _Special(name)
    return s


ROOT = _special("ROOT")
BOTTOM = _special("BOTTOM")
DS_BOTTOM = _special("DS_BOTTOM")


def _upward(block: tuple, r: int, looped: bool):
    # strip trailing r's; the last remaining letter j resumes at s_{j+1}
    k = len(block)
    while k and block[k - 1] == r:
        k -= 1
    if k == 0:
        return ROOT if looped else BOTTOM
    return GuardNode("s", block[k - 1] + 1, block[: k - 1])


def guard_transitions(state, params: GuardParams, looped: bool = False,
                      forced_start: bool = False) -> list:
    """Outgoing ``(probability, state)`` pairs; zero-probability edges omitted."""
    r, p_c = params.r, params.p_c
    out = []

    def add(p, s):
        if p > 0.0:
            out.append((p, s))

    if state is ROOT:
        if forced_start:
            return [(1.0, GuardNode("s", 1))]
        add(p_c, GuardNode("s", 1))
        add(1.0 - p_c, ROOT if looped else BOTTOM)
        return out
    if state is BOTTOM:
        return [(1.0, ROOT)] if looped else [(1.0, BOTTOM)]
    i, block = state.index, state.block
    nxt = GuardNode("s", i + 1, block) if i < r else _upward(block, r, looped)
    if state.kind == "s":
        add(params.ps[i - 1], GuardNode("c", i, block))
        add(1.0 - params.ps[i - 1], nxt)
    else:
        add(p_c, GuardNode("s", 1, block + (i,)))
        add(1.0 - p_c, nxt)
    return out


def guard_step(state, params: GuardParams, rng: RandomStream, looped: bool = False,
               forced_start: bool = False):
    """Sample the next state; one uniform draw per step (none when forced)."""
    r = params.r
    if state is BOTTOM:
        return ROOT if looped else BOTTOM
    if state is ROOT:
        if forced_start:
            return GuardNode("s", 1)
        if rng.next_unit_float() < params.p_c:
            return GuardNode("s", 1)
        return ROOT if looped else BOTTOM
    i, block = state.index, state.block
    u = rng.next_unit_float()
    if state.kind == "s":
        if u < params.ps[i - 1]:
            return GuardNode("c", i, block)
    elif u < params.p_c:
        return GuardNode("s", 1, block + (i,))
    return GuardNode("s", i + 1, block) if i < r else _upward(block, r, looped)


def guard_is_output(state, forced_start: bool = False) -> bool:
    if state is ROOT:
        return not forced_start
    return isinstance(state, GuardNode) and state.kind == "c"


def guard_depth(state) -> int:
    return len(state.block) if isinstance(state, GuardNode) else 0


# -- drop-and-shuffle chain -------------------------------------------------

SELECTIONS = ("N", "C", "NC", "CN")
_SEL_TEXT = {"N": "[]", "C": "[H|T]", "NC": "[][H|T]", "CN": "[H|T][]"}


def ds_pop(state):
    """Backtrack to the nearest unexplored choice point (``DS_BOTTOM`` at the end)."""
    if state is DS_BOTTOM:
        raise ValueError("cannot pop the terminal state")
    stack = list(state)
    while stack:
        top = stack.pop()
        if isinstance(top, tuple):
            sel, com = top
            if len(com) > 1:
                stack.append((sel, com[1:]))
                return tuple(stack)
            stack.append(sel)
            continue
        if top == "NC":
            stack.append("C")
            return tuple(stack)
        if top == "CN":
            stack.append("N")
            return tuple(stack)
        # bare [] or [H|T]: keep popping below it
    return DS_BOTTOM


def ds_validate(state) -> None:
    if state is DS_BOTTOM:
        return
    if not isinstance(state, tuple):
        raise TypeError("state must be a tuple of frames")
    for k, f in enumerate(state):
        if isinstance(f, tuple):
            sel, com = f
            if sel not in ("C", "CN"):
                raise ValueError(f"pair selection {sel!r} must be C or CN")
            if not com or len(set(com)) != len(com):
                raise ValueError("command tuple must be nonempty and duplicate free")
        elif f in SELECTIONS:
            if k != len(state) - 1:
                raise ValueError("only the top frame may be a bare selection")
        else:
            raise ValueError(f"bad frame {f!r}")


def _top(state):
    return state[-1] if state else None


def ds_is_root(state) -> bool:
    """Empty stack or a pair on top: the next step resolves ``t/1``."""
    return state is not DS_BOTTOM and (not state or isinstance(state[-1], tuple))


def ds_is_output(state) -> bool:
    return state is not DS_BOTTOM and bool(state) and state[-1] in ("N", "NC")


def ds_prefix(state) -> tuple:
    """Symbols emitted by an output state: the first command of every pair."""
    return tuple(f[1][0] for f in state if isinstance(f, tuple))


def ds_depth(state) -> int:
    if state is DS_BOTTOM:
        return 0
    return sum(1 for f in state if isinstance(f, tuple))


def ds_exit(state):
    """Exit state of a recursive sub-tree root."""
    if not state or not isinstance(state[-1], tuple):
        raise ValueError("not a recursive sub-tree root")
    return ds_pop(state)


def _ordered_subsets(r: int):
    for l in range(1, r + 1):
        for combo in permutations(range(1, r + 1), l):
            yield combo


def ds_transitions(state, params: DropShuffleParams, looped: bool = False) -> list:
    """Outgoing ``(probability, state)`` pairs, zero-probability edges omitted."""
    pd, r = params.p_d, params.r
    keep = 1.0 - pd
    if state is DS_BOTTOM:
        return [(1.0, ())] if looped else [(1.0, DS_BOTTOM)]
    moves: dict = {}

    def add(p, s):
        if p > 0.0:
            moves[s] = moves.get(s, 0.0) + p

    top = _top(state)
    if ds_is_root(state):
        add(keep * keep / 2.0, state + ("CN",))
        add(keep * keep / 2.0, state + ("NC",))
        add(keep * pd, state + ("N",))
        add(keep * pd, state + ("C",))
        add(pd * pd, ds_pop(state))
    elif top in ("N", "NC"):
        add(1.0, ds_pop(state))
    else:
        base = state[:-1]
        for com in _ordered_subsets(r):
            l = len(com)
            add(pd ** (r - l) * keep ** l / math.factorial(l), base + ((top, com),))
        add(pd ** r, ds_pop(state))
    return [(p, s) for s, p in moves.items()]


def ds_step(state, params: DropShuffleParams, rng: RandomStream, looped: bool = False):
    """Sample the next state with the engine's draw order."""
    pd, r = params.p_d, params.r
    if state is DS_BOTTOM:
        return () if looped else DS_BOTTOM
    top = _top(state)
    if ds_is_root(state):
        nil = not rng.next_unit_float() < pd
        rec = not rng.next_unit_float() < pd
        if nil and rec:
            # shuffle of (t([]), t([H|T])): one bounded draw
            return state + (("CN",) if rng.below(2) == 0 else ("NC",))
        if nil:
            return state + ("N",)
        if rec:
            return state + ("C",)
        return ds_pop(state)
    if top in ("N", "NC"):
        return ds_pop(state)
    kept = [c for c in range(1, r + 1) if not rng.next_unit_float() < pd]
    for i in range(len(kept) - 1, 0, -1):
        j = rng.below(i + 1)
        kept[i], kept[j] = kept[j], kept[i]
    if not kept:
        return ds_pop(state)
    return state[:-1] + ((top, tuple(kept)),)


def format_ds_state(state) -> str:
    if state is DS_BOTTOM:
        return "bottom"
    if not state:
        return "e"
    parts = []
    for f in state:
        if isinstance(f, tuple):
            parts.append("<" + _SEL_TEXT[f[0]] + ",(" + ",".join(map(str, f[1])) + ")>")
        else:
            parts.append(_SEL_TEXT[f])
    return "".join(parts)


# -- Monte Carlo over explicit states ---------------------------------------


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int
    truncated_trials: int = 0

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "trials": self.trials,
                "truncated_trials": self.truncated_trials}


class AllTruncated(RuntimeError):
    pass


def estimate(values: np.ndarray, truncated: int = 0) -> McEstimate:
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        raise AllTruncated("every trial hit the step cap")
    sd = float(values.std(ddof=1)) if n > 1 else 0.0
    return McEstimate(float(values.mean()), sd / math.sqrt(n), n, truncated)


def mc_hitting(chain: str, target: Callable, params, trials: int, seed: int = 0,
               looped: bool = False, step_cap: int = 10_000_000, start=None,
               forced_start: bool = False) -> McEstimate:
    """Mean steps until ``target(state)`` holds, over independent trials.

    Pure-Python reference; the ``fast`` module has compiled versions for the
    target families the analysis needs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if chain == "guard":
        init = ROOT if start is None else start

        def step(s, rng):
            return guard_step(s, params, rng, looped, forced_start)
    elif chain == "ds":
        init = () if start is None else start

        def step(s, rng):
            return ds_step(s, params, rng, looped)
    else:
        raise ValueError(f"unknown chain {chain!r}")
    done = []
    cut = 0
    for trial in range(trials):
        rng = RandomStream(seed).spawn(trial)
        s, n = init, 0
        while not target(s):
            if n >= step_cap:
                cut += 1
                break
            s = step(s, rng)
            n += 1
        else:
            done.append(n)
    return estimate(np.array(done), cut)


# -- exact solves on truncated chains -----------------------------------------


class BudgetExceeded(RuntimeError):
    pass


_SINK = _special("SINK")


@dataclass
class FiniteChain:
    """A finite chain: ``states[k]`` with sparse transition matrix ``P``.

    With the absorbing boundary, probability that would leave the depth cap
    goes to an extra absorbing state :data:`SINK` (the last index).
    """

    states: list
    index: dict
    P: sp.csr_matrix
    sink: Optional[int]

    def __len__(self):
        return len(self.states)

    def _solve(self, free: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        idx = np.flatnonzero(free)
        out = np.zeros(len(self.states))
        if len(idx) == 0:
            return out
        Q = self.P[idx][:, idx]
        A = sp.identity(len(idx), format="csc") - Q.tocsc()
        out[idx] = spla.spsolve(A, rhs[idx])
        return out

    def mask(self, states: Iterable) -> np.ndarray:
        m = np.zeros(len(self.states), dtype=bool)
        for s in states:
            m[self.index[s]] = True
        return m

    def hit_probability(self, target: np.ndarray, avoid: Optional[np.ndarray] = None) -> np.ndarray:
        """Pr[reach ``target`` before ``avoid``] from every state."""
        avoid = np.zeros_like(target) if avoid is None else avoid & ~target
        free = ~(target | avoid)
        rhs = np.asarray(self.P[:, np.flatnonzero(target)].sum(axis=1)).ravel()
        h = self._solve(free, rhs)
        h[target] = 1.0
        h[avoid] = 0.0
        return h

    def mean_hitting_time(self, target: np.ndarray) -> np.ndarray:
        """MHT to ``target``; requires the target to be hit with probability 1."""
        free = ~target
        return self._solve(free, np.ones(len(self.states)))

    def conditional_hitting(self, target: np.ndarray, absorbing: np.ndarray):
        """(hit probability, E[T | hit]) with ``absorbing`` states ending a run unsuccessfully."""
        h = self.hit_probability(target, absorbing)
        free = ~(target | absorbing)
        rhs = np.asarray(self.P @ h).ravel()
        g = self._solve(free, rhs)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(h > 0, g / np.where(h > 0, h, 1.0), np.nan)
        cond[target] = 0.0
        return h, cond


def build_truncated(chain: str, params, depth_cap: int, looped: bool = False,
                    boundary: str = "absorb", init=None, forced_start: bool = False,
                    budget: int = 200_000) -> FiniteChain:
    """Enumerate every state of depth <= ``depth_cap`` reachable from ``init``.

    ``boundary`` decides what happens to moves deeper than the cap: ``absorb``
    sends them to an absorbing sink, ``restart`` sends them back to ``init``.
    """
    if boundary not in ("absorb", "restart"):
        raise ValueError("boundary must be 'absorb' or 'restart'")
    if chain == "guard":
        init = ROOT if init is None else init

        def trans(s):
            return guard_transitions(s, params, looped, forced_start)
        depth = guard_depth
    elif chain == "ds":
        init = () if init is None else init

        def trans(s):
            return ds_transitions(s, params, looped)
        depth = ds_depth
    else:
        raise ValueError(f"unknown chain {chain!r}")

    states = [init]
    index = {init: 0}
    rows, cols, vals = [], [], []
    uses_sink = False
    k = 0
    while k < len(states):
        s = states[k]
        for p, t in trans(s):
            if depth(t) > depth_cap:
                if boundary == "restart":
                    t = init
                else:
                    t = _SINK
                    uses_sink = True
            j = index.get(t)
            if j is None:
                if t is _SINK:
                    j = -1
                else:
                    if len(states) >= budget:
                        raise BudgetExceeded(f"more than {budget} states below depth {depth_cap}")
                    j = index[t] = len(states)
                    states.append(t)
            rows.append(k)
            cols.append(j)
            vals.append(p)
        k += 1
    sink = None
    n = len(states)
    if uses_sink:
        sink = n
        states.append(_SINK)
        index[_SINK] = sink
        n += 1
        rows.append(sink)
        cols.append(sink)
        vals.append(1.0)
    cols = [sink if c == -1 else c for c in cols]
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return FiniteChain(states, index, P, sink)


@dataclass(frozen=True)
class ExactResult:
    hit_probability: float
    conditional_mht: float
    truncation_mass: float
    states: int


def exact_truncated(chain: str, params, target: Callable[[Hashable], bool], depth_cap: int,
                    looped: bool = False, init=None, forced_start: bool = False,
                    budget: int = 200_000) -> ExactResult:
    """Hit probability and conditional mean hitting time on the chain cut at
    ``depth_cap``, plus the probability mass lost at the cut."""
    fc = build_truncated(chain, params, depth_cap, looped, "absorb", init, forced_start, budget)
    tgt = np.array([s is not _SINK and bool(target(s)) for s in fc.states])
    terminal = DS_BOTTOM if chain == "ds" else BOTTOM
    absorbing = np.zeros(len(fc), dtype=bool)
    if fc.sink is not None:
        absorbing[fc.sink] = True
    if not looped and terminal in fc.index:
        absorbing[fc.index[terminal]] = True
    absorbing &= ~tgt
    h, cond = fc.conditional_hitting(tgt, absorbing)
    mass = 0.0
    if fc.sink is not None and not tgt[fc.sink]:
        sink_mask = np.zeros(len(fc), dtype=bool)
        sink_mask[fc.sink] = True
        mass = float(fc.hit_probability(sink_mask, tgt | (absorbing & ~sink_mask))[0])
    return ExactResult(float(h[0]), float(cond[0]), mass, len(fc) - (fc.sink is not None))
