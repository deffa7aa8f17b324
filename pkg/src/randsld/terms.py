"""Terms, clauses and programs of the logic-program subset."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1


class Term:
    __slots__ = ()


class Var(Term):
    """A logic variable.  ``scope`` is the rename generation (0 = source)."""

    __slots__ = ("name", "scope", "_hash")

    def __init__(self, name: str, scope: int = 0):
        self.name = name
        self.scope = scope
        self._hash = hash((name, scope))

    def __eq__(self, other):
        return (
            type(other) is Var and self.name == other.name and self.scope == other.scope
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Var({self.name!r}, {self.scope})"


@dataclass(frozen=True, slots=True)
class Atom(Term):
    symbol: str

    def __repr__(self):
        return f"Atom({self.symbol!r})"


@dataclass(frozen=True, slots=True)
class Int(Term):
    value: int

    def __post_init__(self):
        if not INT64_MIN <= self.value <= INT64_MAX:
            raise OverflowError(f"integer {self.value} outside signed 64-bit range")

    def __repr__(self):
        return f"Int({self.value})"


@dataclass(frozen=True, slots=True, eq=False)
class Struct(Term):
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound terms need arity >= 1; use Atom for arity 0")

    # equality and hashing walk the term with an explicit stack: generated
    # terms (long lists, deep expressions) outgrow the recursion limit

    def __eq__(self, other):
        if type(other) is not Struct:
            return NotImplemented
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b:
                continue
            if type(a) is Struct:
                if type(b) is not Struct or a.functor != b.functor or len(a.args) != len(b.args):
                    return False
                stack.extend(zip(a.args, b.args))
            elif a != b:
                return False
        return True

    def __hash__(self):
        h = 0x345678
        stack = [self]
        while stack:
            t = stack.pop()
            if type(t) is Struct:
                h = hash((h, t.functor, len(t.args)))
                stack.extend(reversed(t.args))
            else:
                h = hash((h, t))
        return h

    @property
    def arity(self) -> int:
        return len(self.args)

    def __repr__(self):
        return f"Struct({self.functor!r}, {list(self.args)!r})"


NIL = Atom("[]")
LIST_FUNCTOR = "."


def cons(head: Term, tail: Term) -> Struct:
    return Struct(LIST_FUNCTOR, (head, tail))


def make_list(items: Sequence[Term], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(items):
        out = cons(item, out)
    return out


def list_items(term: Term) -> Optional[list]:
    """Elements of a proper list term, or None if ``term`` is not one."""
    items = []
    while isinstance(term, Struct) and term.functor == LIST_FUNCTOR and term.arity == 2:
        items.append(term.args[0])
        term = term.args[1]
    return items if term == NIL else None


def indicator(term: Term) -> tuple[str, int]:
    if isinstance(term, Atom):
        return (term.symbol, 0)
    if isinstance(term, Struct):
        return (term.functor, term.arity)
    raise TypeError(f"{term!r} is not callable")


def term_vars(term: Term) -> Iterator[Var]:
    """Variables of ``term`` in depth-first left-to-right order (with repeats)."""
    stack = [term]
    while stack:
        t = stack.pop()
        if type(t) is Var:
            yield t
        elif type(t) is Struct:
            stack.extend(reversed(t.args))


def is_ground(term: Term) -> bool:
    return next(term_vars(term), None) is None


def term_size(term: Term) -> int:
    n = 0
    stack = [term]
    while stack:
        t = stack.pop()
        n += 1
        if type(t) is Struct:
            stack.extend(t.args)
    return n


# -- printing ---------------------------------------------------------------

_PLAIN_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")
_SYMBOL_ATOM = re.compile(r"^[+\-*/\\^<>=~:.?@#&$]+$")


def _atom_text(symbol: str) -> str:
    if _PLAIN_ATOM.match(symbol) or symbol == "[]" or _SYMBOL_ATOM.match(symbol):
        return symbol
    escaped = symbol.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def format_term(term: Term) -> str:
    if type(term) is Var:
        return term.name if term.scope == 0 else f"_{term.name}_{term.scope}"
    if type(term) is Atom:
        return _atom_text(term.symbol)
    if type(term) is Int:
        return str(term.value)
    if term.functor == LIST_FUNCTOR and term.arity == 2:
        parts = []
        t = term
        while type(t) is Struct and t.functor == LIST_FUNCTOR and t.arity == 2:
            parts.append(format_term(t.args[0]))
            t = t.args[1]
        if t == NIL:
            return "[" + ",".join(parts) + "]"
        return "[" + ",".join(parts) + "|" + format_term(t) + "]"
    return _atom_text(term.functor) + "(" + ",".join(format_term(a) for a in term.args) + ")"


# -- clauses and programs ---------------------------------------------------


@dataclass(frozen=True)
class Clause:
    head: Term
    body: tuple = ()
    guard: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.head, (Atom, Struct)):
            raise TypeError(f"clause head must be an atom or compound, got {self.head!r}")
        if self.guard is not None and not 0.0 <= self.guard <= 1.0:
            raise ValueError(f"guard probability {self.guard} outside [0, 1]")

    @property
    def indicator(self) -> tuple[str, int]:
        return indicator(self.head)

    @property
    def keep_probability(self) -> float:
        return 1.0 if self.guard is None else self.guard

    def __str__(self):
        return format_clause(self)


def format_clause(clause: Clause) -> str:
    goals = [format_term(g) for g in clause.body]
    if clause.guard is not None:
        goals.insert(0, f"guard({clause.guard!r})")
    if not goals:
        return format_term(clause.head) + "."
    return format_term(clause.head) + " :- " + ", ".join(goals) + "."


@dataclass(frozen=True)
class Program:
    clauses: tuple
    index: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        index: dict = {}
        for c in self.clauses:
            index.setdefault(c.indicator, []).append(c)
        object.__setattr__(self, "index", {k: tuple(v) for k, v in index.items()})

    @classmethod
    def of(cls, clauses) -> "Program":
        return cls(tuple(clauses))

    def clauses_for(self, key: tuple[str, int]) -> tuple:
        return self.index.get(key, ())

    def __len__(self):
        return len(self.clauses)

    def __str__(self):
        return "\n".join(format_clause(c) for c in self.clauses)
