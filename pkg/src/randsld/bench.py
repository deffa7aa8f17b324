"""The two generator benchmarks: per-trial iteration and result counts as CSV rows."""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import Limits
from .fastengine import (MAX_DEPTH, MAX_STEPS, ExprError, ExprTarget, fast_solve_loop_batch)
from .parser import parse_query
from .programs import commands_program, expr_program
from .rng import derive_seed
from .strategies import make_strategy
from .terms import Atom, Int, Struct, Term, list_items, make_list

CSV_HEADER = ("run_id", "benchmark", "strategy", "p_cont", "p_steady", "p_drop", "goal",
              "iterations", "results", "steps", "truncated", "seed")

_I64_MAX = 2 ** 63 - 1
_I64_MIN = -(2 ** 63)

DEFAULT_P_CONT = {"commands": 0.5, "expr": 0.4}
DEFAULT_P_STEADY = {"commands": 1 / 3, "expr": 0.33}


# -- expressions ------------------------------------------------------------

_ARITY = {"plus": 2, "times": 2, "minus": 1}


def _fit(v: int) -> int:
    if not _I64_MIN <= v <= _I64_MAX:
        raise OverflowError(f"{v} outside signed 64-bit range")
    return v


def _apply(op: str, vals: Sequence[int]) -> int:
    if op == "plus":
        return _fit(vals[0] + vals[1])
    if op == "times":
        return _fit(vals[0] * vals[1])
    return _fit(-vals[0])


def _operands(term: Term):
    """(op, operand terms) of a compound expression in either encoding."""
    if isinstance(term, Struct) and term.functor in _ARITY and len(term.args) == _ARITY[term.functor]:
        return term.functor, list(term.args)
    if isinstance(term, Struct) and term.functor == "." and len(term.args) == 2:
        items = list_items(term)
        if items is not None and len(items) == 2 and isinstance(items[0], Atom):
            op = items[0].symbol
            args = list_items(items[1])
            if op in _ARITY and args is not None and len(args) == _ARITY[op]:
                return op, args
    raise ExprError(f"not an expression: {term}")


def eval_expr(term: Term) -> int:
    """Integer value of an expression.

    Accepts ``plus(A, B)``, ``times(A, B)``, ``minus(A)`` and integer leaves,
    as well as the generator's list encoding ``[plus, [A, B]]``.  Raises
    :class:`ExprError` for anything else and ``OverflowError`` when an
    intermediate value leaves the signed 64-bit range.
    """
    # explicit stack, so deep expressions do not hit the recursion limit
    todo = [(term, False)]
    vals: list = []
    pending: list = []
    while todo:
        t, ready = todo.pop()
        if ready:
            op, n = pending.pop()
            args = vals[len(vals) - n:]
            del vals[len(vals) - n:]
            vals.append(_apply(op, args))
            continue
        if isinstance(t, Int):
            vals.append(_fit(t.value))
            continue
        op, args = _operands(t)
        pending.append((op, len(args)))
        todo.append((t, True))
        todo.extend((a, False) for a in reversed(args))
    return vals[0]


def expr_to_list(term: Term) -> Term:
    """Convert ``plus(1, 3)`` style terms to the generator's list encoding."""
    if isinstance(term, Int):
        return term
    op, args = _operands(term)
    return make_list([Atom(op), make_list([expr_to_list(a) for a in args])])


def enumerate_values(max_size: int, leaves: Sequence[int] = (1, 2, 3)) -> dict:
    """Smallest expression size for every reachable value.

    Size counts operators and leaves.  Returns {value: size}.
    """
    by_size: dict = {1: set(leaves)}
    for n in range(2, max_size + 1):
        vals = {-v for v in by_size.get(n - 1, ())}
        for k in range(1, n - 1):
            left, right = by_size.get(k, ()), by_size.get(n - 1 - k, ())
            for a, b in itertools.product(left, right):
                vals.add(a + b)
                vals.add(a * b)
        by_size[n] = vals
    best: dict = {}
    for n in sorted(by_size):
        for v in by_size[n]:
            best.setdefault(v, n)
    return best


# -- configuration ----------------------------------------------------------


@dataclass
class BenchConfig:
    """One benchmark sweep point.

    ``p_cont`` and ``p_steady`` default per benchmark when left as None.
    ``max_steps`` bounds resolution steps per trial over all restarts; trials
    that hit it are reported with ``truncated=1``.
    """

    benchmark: str = "commands"
    strategy: str = "guard"
    p_cont: Optional[float] = None
    p_steady: Optional[float] = None
    p_drop: float = 0.5
    goal_length: Optional[int] = None
    target_value: Optional[int] = None
    trials: int = 1000
    seed: int = 0
    max_steps: int = 10 ** 6
    count_inclusive: bool = False
    workers: int = 1
    output: Optional[str] = None

    def __post_init__(self):
        if self.benchmark not in ("commands", "expr"):
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        if self.strategy not in ("guard", "drop_shuffle", "standard"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.p_cont is None:
            self.p_cont = DEFAULT_P_CONT[self.benchmark]
        if self.p_steady is None:
            self.p_steady = DEFAULT_P_STEADY[self.benchmark]
        if self.benchmark == "commands":
            if self.goal_length is None or self.target_value is not None:
                raise ValueError("the commands benchmark takes goal_length only")
            if self.goal_length < 1:
                raise ValueError("goal_length must be >= 1")
        else:
            if self.target_value is None or self.goal_length is not None:
                raise ValueError("the expr benchmark takes target_value only")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        for name in ("p_cont", "p_steady", "p_drop"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        self.seed = int(self.seed) & ((1 << 64) - 1)

    @property
    def goal(self) -> int:
        return self.goal_length if self.benchmark == "commands" else self.target_value


def _setup(cfg: BenchConfig):
    guarded = cfg.strategy == "guard"
    if cfg.benchmark == "commands":
        program = commands_program(p_cont=cfg.p_cont if guarded else None,
                                   p_steady=cfg.p_steady if guarded else None)
        query = parse_query("t(X)")
        target: object = make_list([Atom("second")] * cfg.goal_length)
    else:
        program = expr_program(p_cont=cfg.p_cont if guarded else None,
                               p_other=cfg.p_steady if guarded else None)
        query = parse_query("expr(X)")
        target = ExprTarget(int(cfg.target_value), overflow_is_miss=True)
    strategy = make_strategy(cfg.strategy, cfg.p_drop)
    return program, query, target, strategy


def _run_chunk(cfg: BenchConfig, start: int, count: int) -> np.ndarray:
    program, query, target, strategy = _setup(cfg)
    return fast_solve_loop_batch(program, query, target, strategy, cfg.seed, int(count),
                                 Limits(max_steps=cfg.max_steps),
                                 count_inclusive=cfg.count_inclusive, first=int(start))


def run_trials(cfg: BenchConfig) -> np.ndarray:
    """Raw per-trial counters, shape (trials, 5): status, iterations,
    results, steps, backtracks.  Trial k runs on ``derive_seed(seed, k)``."""
    program, query, target, strategy = _setup(cfg)
    limits = Limits(max_steps=cfg.max_steps)
    if cfg.workers <= 1:
        return fast_solve_loop_batch(program, query, target, strategy, cfg.seed, cfg.trials,
                                     limits, count_inclusive=cfg.count_inclusive)
    # chunks are merged back in trial order, so the output does not depend on scheduling
    bounds = np.linspace(0, cfg.trials, cfg.workers + 1).astype(int)
    with ProcessPoolExecutor(cfg.workers) as pool:
        parts = list(pool.map(_run_chunk, [cfg] * cfg.workers, bounds[:-1], np.diff(bounds)))
    return np.concatenate(parts)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def bench_rows(cfg: BenchConfig) -> list:
    """One dict per trial with the CSV columns."""
    raw = run_trials(cfg)
    guarded = cfg.strategy == "guard"
    rows = []
    for k, (status, it, res, steps, _) in enumerate(raw):
        rows.append({
            "run_id": k,
            "benchmark": cfg.benchmark,
            "strategy": cfg.strategy,
            "p_cont": _fmt(cfg.p_cont if guarded else None),
            "p_steady": _fmt(cfg.p_steady if guarded else None),
            "p_drop": _fmt(cfg.p_drop if cfg.strategy == "drop_shuffle" else None),
            "goal": cfg.goal,
            "iterations": int(it),
            "results": int(res),
            "steps": int(steps),
            "truncated": int(status in (MAX_STEPS, MAX_DEPTH)),
            "seed": derive_seed(cfg.seed, k),
        })
    return rows


def bench_commands(cfg: BenchConfig) -> list:
    if cfg.benchmark != "commands":
        raise ValueError("expected a commands configuration")
    return bench_rows(cfg)


def bench_expr(cfg: BenchConfig) -> list:
    if cfg.benchmark != "expr":
        raise ValueError("expected an expr configuration")
    return bench_rows(cfg)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\r\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def summarize(rows: Sequence[dict]) -> dict:
    """Mean/median iterations and results over the untruncated trials."""
    done = [r for r in rows if not r["truncated"]]
    it = np.array([r["iterations"] for r in done], dtype=float)
    res = np.array([r["results"] for r in done], dtype=float)
    n = len(done)
    out = {"trials": len(rows), "truncated": len(rows) - n}
    if n:
        out.update({
            "mean_iterations": float(it.mean()),
            "stderr_iterations": float(it.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            "median_iterations": float(np.median(it)),
            "mean_results": float(res.mean()),
            "median_results": float(np.median(res)),
        })
    return out


def gnuplot_script(csv_path: str, title: str = "") -> str:
    """A gnuplot script drawing the sorted per-trial iteration counts."""
    return "\n".join([
        "set datafile separator ','",
        f"set title {title!r}" if title else "unset title",
        "set logscale y",
        "set xlabel 'trial (sorted)'",
        "set ylabel 'iterations'",
        f"plot '< tail -n +2 {csv_path} | sort -t, -k8 -n' using 0:8 with lines title 'iterations'",
        "",
    ])


__all__ = ["BenchConfig", "CSV_HEADER", "bench_commands", "bench_expr", "bench_rows",
           "enumerate_values", "eval_expr", "expr_to_list", "gnuplot_script", "rows_to_csv",
           "run_trials", "summarize"]
