"""SLD resolution with pluggable clause selection.

Leftmost goal selection, chronological backtracking over a stack of choice
points.  The strategy is asked for the ordered alternatives every time a goal
is reduced, so a recursive predicate gets fresh randomness at every call.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Union

from .rng import RandomStream
from .strategies import STANDARD, Strategy
from .terms import Atom, Clause, Program, Struct, Term, Var, is_ground, term_vars
from .unify import Substitution, resolve, undo_to, unify_into, walk


class LimitExceeded(RuntimeError):
    """The engine gave up (depth or step limit); not a finite failure."""

    def __init__(self, reason: str, stats: "RunStats"):
        super().__init__(f"{reason} limit exceeded after {stats.steps} steps")
        self.reason = reason
        self.stats = stats


class NonGroundSolution(ValueError):
    pass


@dataclass(frozen=True)
class Limits:
    max_depth: Optional[int] = None
    max_steps: Optional[int] = None

    def __post_init__(self):
        for name in ("max_depth", "max_steps"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")


UNLIMITED = Limits()


@dataclass
class RunStats:
    results: int = 0
    iterations: int = 0
    steps: int = 0
    backtracks: int = 0
    master_seed: int = 0

    def snapshot(self) -> "RunStats":
        return dataclasses.replace(self)


# -- compiled clauses --------------------------------------------------------


class _Slot:
    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index


def _template(term: Term, slots: dict):
    t = type(term)
    if t is Var:
        s = slots.get(term)
        if s is None:
            s = slots[term] = _Slot(len(slots))
        return s
    if t is Struct:
        return (term.functor, tuple(_template(a, slots) for a in term.args))
    return term


def _build(tpl, fresh: list):
    t = type(tpl)
    if t is _Slot:
        return fresh[tpl.index]
    if t is tuple:
        return Struct(tpl[0], tuple([_build(a, fresh) for a in tpl[1]]))
    return tpl


class _Compiled:
    """Clause with its variables replaced by numbered slots."""

    __slots__ = ("clause", "head", "body", "names", "ground")

    def __init__(self, clause: Clause):
        slots: dict = {}
        self.clause = clause
        self.head = _template(clause.head, slots)
        self.body = tuple(_template(g, slots) for g in clause.body)
        self.names = [v.name for v in slots]
        self.ground = not slots

    def instance(self, generation: int):
        if self.ground:
            return self.clause.head, self.clause.body
        fresh = [Var(n, generation) for n in self.names]
        return _build(self.head, fresh), tuple([_build(g, fresh) for g in self.body])

    @property
    def keep_probability(self) -> float:
        return self.clause.keep_probability

    @property
    def guard(self):
        return self.clause.guard


def _compile(program: Program) -> dict:
    cache = getattr(program, "_compiled_index", None)
    if cache is None:
        cache = {k: tuple(_Compiled(c) for c in cs) for k, cs in program.index.items()}
        object.__setattr__(program, "_compiled_index", cache)
    return cache


# -- the machine ---------------------------------------------------------------


def _as_goals(query) -> tuple:
    if isinstance(query, Term):
        return (query,)
    return tuple(query)


def _query_vars(goals) -> list:
    seen: dict = {}
    for g in goals:
        for v in term_vars(g):
            seen.setdefault(v, None)
    return list(seen)


def _run(program: Program, goals: tuple, strategy: Strategy, rng, limits: Limits,
         stats: RunStats) -> Iterator[dict]:
    """Yield the binding map at every solution (live; copy before keeping)."""
    index = _compile(program)
    max_depth = limits.max_depth
    max_steps = limits.max_steps
    select = strategy.select
    bindings: dict = {}
    trail: list = []
    # choice point: [alternatives, next index, goal, rest, trail mark]
    stack: list = []
    generation = 0

    pending = None
    for g in reversed(goals):
        pending = (g, pending)

    while True:
        if pending is None:
            yield bindings
            resume = True
        else:
            goal, rest = pending
            if max_steps is not None and stats.steps >= max_steps:
                raise LimitExceeded("max_steps", stats.snapshot())
            if max_depth is not None and len(stack) >= max_depth:
                raise LimitExceeded("max_depth", stats.snapshot())
            stats.steps += 1
            goal = walk(goal, bindings)
            t = type(goal)
            if t is Struct:
                key = (goal.functor, len(goal.args))
            elif t is Atom:
                key = (goal.symbol, 0)
            else:
                raise TypeError(f"cannot call {goal!r}")
            alts = select(index.get(key, ()), rng)
            stack.append([alts, 0, goal, rest, len(trail)])
            resume = False

        # try the next alternative of the topmost choice point
        pending = None
        while stack:
            cp = stack[-1]
            alts = cp[0]
            if resume:
                stats.backtracks += 1
                resume = False
            undo_to(bindings, trail, cp[4])
            found = False
            while cp[1] < len(alts):
                compiled = alts[cp[1]]
                cp[1] += 1
                generation += 1
                head, body = compiled.instance(generation)
                if unify_into(cp[2], head, bindings, trail):
                    nxt = cp[3]
                    for g in reversed(body):
                        nxt = (g, nxt)
                    pending = nxt
                    found = True
                    break
                undo_to(bindings, trail, cp[4])
            if found:
                break
            stack.pop()
            resume = True
        else:
            return


def solve(program: Program, query, strategy: Strategy = STANDARD,
          rng: Optional[RandomStream] = None, limits: Limits = UNLIMITED
          ) -> Iterator[tuple[Substitution, RunStats]]:
    """Stream ``(answer, stats)`` pairs, one per solution of ``query``.

    ``answer`` maps each query variable to its fully dereferenced value.
    Raises :class:`LimitExceeded` if a limit is hit.
    """
    rng = rng if rng is not None else RandomStream(0)
    goals = _as_goals(query)
    qvars = _query_vars(goals)
    stats = RunStats(iterations=1, master_seed=rng.seed)
    for b in _run(program, goals, strategy, rng, limits, stats):
        stats.results += 1
        yield Substitution({v: resolve(v, b) for v in qvars}), stats.snapshot()


def count_run(program: Program, query, strategy: Strategy = STANDARD,
              rng: Optional[RandomStream] = None, limits: Limits = UNLIMITED
              ) -> tuple[int, int]:
    """Run ``query`` to exhaustion; return (solutions, resolution steps)."""
    rng = rng if rng is not None else RandomStream(0)
    goals = _as_goals(query)
    stats = RunStats(iterations=1, master_seed=rng.seed)
    for _ in _run(program, goals, strategy, rng, limits, stats):
        stats.results += 1
    return stats.results, stats.steps


Target = Union[Term, Callable[[Term], bool]]


def _matcher(target: Target) -> Callable[[Term], bool]:
    if callable(target) and not isinstance(target, Term):
        return target
    if not is_ground(target):
        raise ValueError("a literal target must be ground")

    def match(value: Term) -> bool:
        if not is_ground(value):
            raise NonGroundSolution(f"solution is not ground: {value!r}")
        return value == target

    return match


def solve_loop(program: Program, query, target: Target, strategy: Strategy = STANDARD,
               rng: Optional[RandomStream] = None, limits: Limits = UNLIMITED,
               answer_var: Optional[str] = None, count_inclusive: bool = False
               ) -> RunStats:
    """Re-run ``query`` until a solution satisfies ``target``.

    The value tested is the binding of ``answer_var`` (default: the first
    variable of the query).  ``iterations`` counts query runs including the
    successful one; ``results`` counts solutions before the target one (also
    the target one when ``count_inclusive``).  ``max_steps`` bounds the total
    over all runs.
    """
    rng = rng if rng is not None else RandomStream(0)
    goals = _as_goals(query)
    qvars = _query_vars(goals)
    if answer_var is None:
        if not qvars:
            raise ValueError("query has no variables to test")
        var = qvars[0]
    else:
        var = Var(answer_var)
    match = _matcher(target)
    stats = RunStats(master_seed=rng.seed)
    while True:
        stats.iterations += 1
        for b in _run(program, goals, strategy, rng, limits, stats):
            if match(resolve(var, b)):
                if count_inclusive:
                    stats.results += 1
                return stats
            stats.results += 1
