"""Generator programs used by the benchmarks and the chain correspondence."""

from __future__ import annotations

from typing import Optional, Sequence

from .parser import parse_program
from .terms import Program

COMMAND_CONSTANTS = ("first", "second", "third")


def _guard(p: Optional[float]) -> str:
    return "" if p is None else f"guard({p!r}), "


def listing1_source(r: int = 3) -> str:
    """The plain generator with ``command/1`` written as a disjunction."""
    names = [f"command{i}" for i in range(1, r + 1)]
    lines = [
        "t([]).",
        "t([H|T]) :- command(H), t(T).",
        "command(X) :- " + " ; ".join(f"{n}(X)" for n in names) + ".",
    ]
    lines += [f"{n}(c{i})." for i, n in enumerate(names, 1)]
    return "\n".join(lines) + "\n"


def commands_source(constants: Sequence[str] = COMMAND_CONSTANTS,
                    p_cont: Optional[float] = None,
                    p_steady=None) -> str:
    """Benchmark-1 generator: ``command/1`` is one fact per constant.

    ``p_cont`` guards the recursive ``t/1`` clause; ``p_steady`` (a float or
    one float per constant) guards the command facts.  ``None`` leaves the
    clause unguarded.
    """
    if p_steady is None or isinstance(p_steady, (int, float)):
        steady = [p_steady] * len(constants)
    else:
        steady = list(p_steady)
        if len(steady) != len(constants):
            raise ValueError("one command probability per constant")
    lines = ["t([]).", f"t([H|T]) :- {_guard(p_cont)}command(H), t(T)."]
    for c, p in zip(constants, steady):
        if p is None:
            lines.append(f"command({c}).")
        else:
            lines.append(f"command({c}) :- guard({p!r}).")
    return "\n".join(lines) + "\n"


def commands_program(constants: Sequence[str] = COMMAND_CONSTANTS,
                     p_cont: Optional[float] = None, p_steady=None) -> Program:
    return parse_program(commands_source(constants, p_cont, p_steady))


def expr_source(p_cont: Optional[float] = None, p_other: Optional[float] = None) -> str:
    """Arithmetic-expression generator; ``p_cont`` guards the recursive
    ``expr/1`` clause and ``p_other`` every other clause."""
    g, o = _guard(p_cont), _guard(p_other)
    fact = (lambda head: f"{head} :- guard({p_other!r}).") if p_other is not None else (
        lambda head: f"{head}.")
    return "\n".join([
        f"expr(X) :- {o}const(X).",
        f"expr([Operator, Operands]) :- {g}unpack(Operator, Operands).",
        fact("const(1)"),
        fact("const(2)"),
        fact("const(3)"),
        f"unpack(plus, [A, B]) :- {o}expr(A), expr(B).",
        f"unpack(times, [A, B]) :- {o}expr(A), expr(B).",
        f"unpack(minus, [A]) :- {o}expr(A).",
    ]) + "\n"


def expr_program(p_cont: Optional[float] = None, p_other: Optional[float] = None) -> Program:
    return parse_program(expr_source(p_cont, p_other))
