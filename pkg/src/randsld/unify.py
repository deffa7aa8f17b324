"""Substitutions, unification with occurs check, and clause renaming."""

from __future__ import annotations

from collections.abc import Mapping
from typing import Iterator, Optional

from .terms import Clause, Struct, Term, Var


class Substitution(Mapping):
    """Immutable map from variables to terms (triangular form)."""

    __slots__ = ("_b",)

    def __init__(self, bindings: Optional[dict] = None):
        self._b = dict(bindings) if bindings else {}

    def __getitem__(self, var: Var) -> Term:
        return self._b[var]

    def __iter__(self) -> Iterator[Var]:
        return iter(self._b)

    def __len__(self) -> int:
        return len(self._b)

    def __repr__(self):
        inner = ", ".join(f"{v.name}/{v.scope}: {t!r}" for v, t in self._b.items())
        return "{" + inner + "}"

    def by_name(self) -> dict:
        """Resolved bindings keyed by source variable name (scope-0 only)."""
        return {v.name: apply(self, v) for v in self._b if v.scope == 0}

    def lookup(self, name: str) -> Term:
        return apply(self, Var(name))


EMPTY = Substitution()


def walk(term: Term, b) -> Term:
    while type(term) is Var:
        nxt = b.get(term)
        if nxt is None:
            return term
        term = nxt
    return term


def _occurs(var: Var, term: Term, b) -> bool:
    stack = [term]
    while stack:
        t = walk(stack.pop(), b)
        if t is var or (type(t) is Var and t == var):
            return True
        if type(t) is Struct:
            stack.extend(t.args)
    return False


def unify_into(t1: Term, t2: Term, b: dict, trail: list) -> bool:
    """Unify in place, recording new bindings on ``trail``.

    On failure the bindings made so far are left in place; callers undo them
    with :func:`undo_to`.
    """
    stack = [(t1, t2)]
    while stack:
        a, c = stack.pop()
        a = walk(a, b)
        c = walk(c, b)
        if a is c:
            continue
        ta, tc = type(a), type(c)
        if ta is Var:
            if tc is Var and a == c:
                continue
            if tc is Struct and _occurs(a, c, b):
                return False
            b[a] = c
            trail.append(a)
        elif tc is Var:
            if ta is Struct and _occurs(c, a, b):
                return False
            b[c] = a
            trail.append(c)
        elif ta is Struct:
            if tc is not Struct or a.functor != c.functor or len(a.args) != len(c.args):
                return False
            stack.extend(zip(a.args, c.args))
        elif a != c:
            return False
    return True


def undo_to(b: dict, trail: list, mark: int) -> None:
    while len(trail) > mark:
        del b[trail.pop()]


def unify(t1: Term, t2: Term, s: Substitution = EMPTY) -> Optional[Substitution]:
    """Most general unifier of ``t1`` and ``t2`` extending ``s``, or None."""
    b = dict(s._b if isinstance(s, Substitution) else s)
    if unify_into(t1, t2, b, []):
        return Substitution(b)
    return None


def resolve(term: Term, b) -> Term:
    """Fully dereference ``term`` under the binding map ``b``."""
    term = walk(term, b)
    if type(term) is not Struct:
        return term
    # iterative post-order rebuild; generated terms can nest thousands deep
    out: list = []
    todo: list = [(term, False)]
    while todo:
        t, built = todo.pop()
        if built:
            n = len(t.args)
            args = tuple(out[len(out) - n:])
            del out[len(out) - n:]
            out.append(Struct(t.functor, args))
            continue
        t = walk(t, b)
        if type(t) is Struct:
            todo.append((t, True))
            todo.extend((a, False) for a in reversed(t.args))
        else:
            out.append(t)
    return out[0]


def apply(s, term: Term) -> Term:
    b = s._b if isinstance(s, Substitution) else s
    return resolve(term, b)


def _rename(term: Term, gen: int, seen: dict) -> Term:
    t = type(term)
    if t is Var:
        v = seen.get(term)
        if v is None:
            v = seen[term] = Var(term.name, gen)
        return v
    if t is Struct:
        return Struct(term.functor, tuple(_rename(a, gen, seen) for a in term.args))
    return term


def rename_apart(clause: Clause, generation: int) -> Clause:
    """Copy of ``clause`` with every variable moved to scope ``generation``."""
    seen: dict = {}
    head = _rename(clause.head, generation, seen)
    body = tuple(_rename(g, generation, seen) for g in clause.body)
    if not seen:
        return clause
    return Clause(head, body, clause.guard)
