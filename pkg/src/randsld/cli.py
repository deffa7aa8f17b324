"""Command-line front end.

Subcommands: ``analyze``, ``simulate-chain``, ``run``, ``bench commands`` and
``bench expr``.  Every subcommand also reads an optional flat ``key=value``
config file (``--config``); keys are flag names with or without the leading
dashes, and flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

from . import analytics as an
from .bench import BenchConfig, bench_rows, gnuplot_script, rows_to_csv, summarize
from .chains import McEstimate
from .engine import LimitExceeded, Limits, solve, solve_loop
from .parser import parse_program, parse_query, parse_term
from .rng import RandomStream
from .strategies import DropShuffleParams, GuardParams, make_strategy
from .terms import format_term

COUNTING_NOTE = ("iterations counts query restarts including the successful one; results "
                 "counts solutions emitted strictly before the target solution "
                 "(--count-inclusive adds the target solution itself)")


# -- JSON helpers -----------------------------------------------------------


def _num(x):
    if isinstance(x, an.Diverges):
        return str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _mc(est: McEstimate, analytic=None) -> dict:
    d = est.as_dict()
    if analytic is not None and not isinstance(analytic, an.Diverges):
        d["analytic"] = analytic
        d["delta"] = est.mean - analytic
        d["relative_delta"] = (est.mean - analytic) / analytic if analytic else None
        d["z"] = (est.mean - analytic) / est.stderr if est.stderr > 0 else None
    elif analytic is not None:
        d["analytic"] = str(analytic)
    return d


# -- analyze ----------------------------------------------------------------


def analyze_report(r: int, p: float, p_c: float, p_d: float, max_len: int = 3) -> dict:
    """Every closed form for the given parameters, with validity verdicts."""
    guard: dict = {"params": {"r": r, "p": p, "p_c": p_c}}
    try:
        gp = GuardParams.uniform(r, p, p_c)
    except ValueError as exc:
        guard.update(valid=False, reasons=[str(exc)])
        gp = None
    if gp is not None:
        reasons = an.guard_conditions(gp)
        guard["valid"] = not reasons
        guard["reasons"] = reasons
        guard["conditions"] = ["p_c < 1", "eta = r * p_max * p_c < 1"]
        guard["eta"] = gp.eta
        if not reasons:
            eo, en = an.guard_expectations(gp)
            guard["E_O"], guard["E_N"] = eo, en
        guard["block_reach"] = {
            "".join(map(str, w)) or "empty": an.block_reach_prob(w, gp)
            for w in _words(r, min(max_len, 2))
        }
        hreasons = an.hitting_conditions(gp) + reasons
        guard["hitting_valid"] = not hreasons
        guard["hitting_reasons"] = hreasons
        if not hreasons:
            guard["U"] = {str(i): an.guard_U(i, gp) for i in range(1, r + 2)}
            guard["hitting_time"] = {
                f"{''.join(map(str, w)) or 'empty'}/{i}": an.guard_hitting_time(w, i, gp)
                for w in _words(r, min(max_len, 2)) for i in range(1, r + 1)
            }

    ds: dict = {"params": {"r": r, "p_d": p_d}}
    try:
        dp = DropShuffleParams(p_d, r)
    except ValueError as exc:
        ds.update(valid=False, reasons=[str(exc)])
        dp = None
    if dp is not None:
        reasons = an.ds_conditions(dp)
        ds["valid"] = not reasons
        ds["reasons"] = reasons
        ds["conditions"] = [f"p_d > 1 - 1/sqrt(r) = {1 - 1 / math.sqrt(r):.6g}", "p_d < 1"]
        ds["C"] = _num(an.ds_constant(dp))
        ds["q"] = {str(l): an.ds_q(l, p_d) for l in range(max_len + 1)}
        if not reasons:
            d = an.ds_derived(dp)
            ds["recursion"] = {"alpha": d.alpha, "beta": d.beta, "gamma": d.gamma, "h0": d.h0}
            ds["h"] = {str(l): an.ds_h(l, dp) for l in range(max_len + 1)}
            ds["hitting_time"] = {str(l): an.ds_hitting_time(l, dp) for l in range(max_len + 1)}
            ds["hitting_time_closed"] = {str(l): an.ds_hitting_time_closed(l, dp)
                                         for l in range(max_len + 1)}
            ds["g"] = {str(l): an.ds_g(l, dp) for l in range(max_len + 1)}
            ds["hitting_time_exact"] = {str(l): an.ds_hitting_time_exact(l, dp)
                                        for l in range(max_len + 1)}
    return {"guard": guard, "drop_shuffle": ds}


def _words(r: int, depth: int):
    out = [()]
    frontier = [()]
    for _ in range(depth):
        frontier = [w + (a,) for w in frontier for a in range(1, r + 1)]
        out.extend(frontier)
    return out


# -- simulate-chain ---------------------------------------------------------


def simulate_report(chain: str, r: int, p: float, p_c: float, p_d: float, depth: int,
                    trials: int, seed: int, step_cap: int) -> dict:
    from . import fast

    rep: dict = {"chain": chain, "trials": trials, "seed": seed, "step_cap": step_cap}
    if chain == "guard":
        gp = GuardParams.uniform(r, p, p_c)
        rep["params"] = {"r": r, "p": p, "p_c": p_c}
        o, n = fast.mc_counts_guard(gp, trials, seed, step_cap)
        try:
            eo, en = an.guard_expectations(gp)
        except an.ValidityError as exc:
            eo = en = an.Diverges(str(exc))
        rep["outputs"] = _mc(o, eo)
        rep["visits"] = _mc(n, en)
        if not an.hitting_conditions(gp) and not an.guard_conditions(gp):
            hits = fast.mc_guard_hitting(gp, depth, trials, seed, True, step_cap)
            rep["hitting_time"] = {
                f"{''.join(map(str, w)) or 'empty'}/{i}": _mc(est, an.guard_hitting_time(w, i, gp))
                for (w, i), est in sorted(hits.items(), key=lambda kv: (len(kv[0][0]), kv[0]))
            }
    elif chain == "ds":
        dp = DropShuffleParams(p_d, r)
        rep["params"] = {"r": r, "p_d": p_d}
        rep["constant"] = _mc(fast.mc_ds_constant(dp, trials, seed, step_cap), an.ds_constant(dp))
        tau = [(k % r) + 1 for k in range(depth)]
        rep["tau"] = tau
        if not an.ds_conditions(dp):
            full, widened = fast.mc_ds_hitting(dp, tau, trials, seed, step_cap)
            rep["hitting_time"] = {
                str(l): dict(_mc(est, an.ds_hitting_time_exact(l, dp)),
                             formula=an.ds_hitting_time(l, dp))
                for l, est in enumerate(full)
            }
            rep["hitting_or_exit"] = {str(l): _mc(est, an.ds_g(l, dp))
                                      for l, est in enumerate(widened)}
            root = [("CN", tuple(range(1, r + 1)))]
            miss = fast.mc_ds_exit_before_hit(dp, root, tau, trials, seed, step_cap)
            rep["exit_before_hit"] = {str(l): _mc(est, an.ds_q(l, p_d)) for l, est in enumerate(miss)}
    else:
        raise ValueError(f"unknown chain {chain!r}")
    return rep


# -- run --------------------------------------------------------------------


def run_report(program_text: str, query_text: str, strategy: str, p_drop: float, seed: int,
               max_steps: Optional[int], target: Optional[str], count_inclusive: bool,
               max_solutions: int) -> dict:
    program = parse_program(program_text)
    query = parse_query(query_text)
    strat = make_strategy(strategy, p_drop)
    rng = RandomStream(seed)
    limits = Limits(max_steps=max_steps)
    rep: dict = {"query": query_text, "strategy": strategy, "seed": seed}
    answers: list = []
    try:
        if target is not None:
            stats = solve_loop(program, query, parse_term(target), strat, rng, limits,
                               count_inclusive=count_inclusive)
            rep.update(target=target, iterations=stats.iterations, results=stats.results,
                       steps=stats.steps, backtracks=stats.backtracks, truncated=False)
        else:
            stats = None
            for ans, stats in solve(program, query, strat, rng, limits):
                if len(answers) < max_solutions:
                    answers.append({v.name: format_term(t) for v, t in ans.items()})
            rep["answers"] = answers
            rep["results"] = stats.results if stats else 0
            rep["truncated"] = False
    except LimitExceeded as exc:
        rep.update(truncated=True, limit=exc.reason, results=exc.stats.results,
                   iterations=exc.stats.iterations, steps=exc.stats.steps)
        if target is None:
            rep["answers"] = answers
    return rep


# -- argument parsing ---------------------------------------------------------


_BOOL_KEYS = {"count_inclusive", "summary"}


def read_config(path: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key in _BOOL_KEYS:
                out[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                out[key] = value
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file with defaults for these flags")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", help="write the output here instead of stdout")


def _params(p: argparse.ArgumentParser, p_cont=0.5, p_steady=1 / 3):
    p.add_argument("--r", type=int, default=3, help="number of commands (default 3)")
    p.add_argument("--p-cont", type=float, default=p_cont, help="continuation guard p_c")
    p.add_argument("--p-steady", type=float, default=p_steady, help="command guard p")
    p.add_argument("--p-drop", type=float, default=0.5, help="drop probability p_d")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randsld", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="closed-form report as JSON")
    _common(a)
    _params(a)
    a.add_argument("--goal-length", type=int, default=3, help="largest test-case length")

    s = sub.add_parser("simulate-chain", help="Monte Carlo on the chains, next to the formulas")
    _common(s)
    _params(s)
    s.add_argument("--chain", choices=("guard", "ds"), default="guard")
    s.add_argument("--goal-length", type=int, default=2, help="block depth / target length")
    s.add_argument("--trials", type=int, default=100_000)
    s.add_argument("--max-steps", type=int, default=10_000_000, help="step cap per trial")

    r = sub.add_parser("run", help="run one program and query")
    _common(r)
    r.add_argument("program", help="program file")
    r.add_argument("query", help="query text, e.g. 't(X)'")
    r.add_argument("--strategy", choices=("standard", "guard", "drop_shuffle"), default="standard")
    r.add_argument("--p-drop", type=float, default=0.5)
    r.add_argument("--target", help="re-run until the first query variable equals this term")
    r.add_argument("--max-steps", type=int, default=None)
    r.add_argument("--max-solutions", type=int, default=100, help="answers to print")
    r.add_argument("--count-inclusive", action="store_true", help=COUNTING_NOTE)

    b = sub.add_parser("bench", help="benchmark sweeps as CSV")
    bsub = b.add_subparsers(dest="benchmark", required=True)
    for name, p_cont, p_steady in (("commands", 0.5, 1 / 3), ("expr", 0.4, 0.33)):
        bp = bsub.add_parser(name, help=f"{name} benchmark", epilog=COUNTING_NOTE)
        _common(bp)
        bp.add_argument("--strategy", choices=("guard", "drop_shuffle", "standard"), default="guard")
        bp.add_argument("--p-cont", type=float, default=p_cont)
        bp.add_argument("--p-steady", type=float, default=p_steady)
        bp.add_argument("--p-drop", type=float, default=0.5)
        if name == "commands":
            bp.add_argument("--goal-length", type=int, default=2)
        else:
            bp.add_argument("--target-value", type=int, default=4)
        bp.add_argument("--trials", type=int, default=1000)
        bp.add_argument("--max-steps", type=int, default=1_000_000,
                        help="resolution steps per trial over all restarts; hitting it flags the row")
        bp.add_argument("--workers", type=int, default=1)
        bp.add_argument("--count-inclusive", action="store_true", help=COUNTING_NOTE)
        bp.add_argument("--gnuplot", help="also write a gnuplot script here (needs --out)")
        bp.add_argument("--summary", action="store_true", help="print summary JSON to stderr")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    # push the values down as defaults of whichever sub-parser runs
    stack = [parser]
    while stack:
        p = stack.pop()
        dests = {act.dest for act in p._actions}
        p.set_defaults(**{k: v for k, v in values.items() if k in dests})
        for act in p._actions:
            if isinstance(act, argparse._SubParsersAction):
                stack.extend(act.choices.values())


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)

    if args.command == "analyze":
        rep = analyze_report(args.r, args.p_steady, args.p_cont, args.p_drop, args.goal_length)
        _emit(_dump(rep), args.out)
    elif args.command == "simulate-chain":
        rep = simulate_report(args.chain, args.r, args.p_steady, args.p_cont, args.p_drop,
                              args.goal_length, args.trials, args.seed, args.max_steps)
        _emit(_dump(rep), args.out)
    elif args.command == "run":
        with open(args.program) as fh:
            text = fh.read()
        rep = run_report(text, args.query, args.strategy, args.p_drop, args.seed, args.max_steps,
                         args.target, args.count_inclusive, args.max_solutions)
        _emit(_dump(rep), args.out)
    else:
        cfg = BenchConfig(
            benchmark=args.benchmark, strategy=args.strategy, p_cont=args.p_cont,
            p_steady=args.p_steady, p_drop=args.p_drop,
            goal_length=getattr(args, "goal_length", None),
            target_value=getattr(args, "target_value", None),
            trials=args.trials, seed=args.seed, max_steps=args.max_steps,
            count_inclusive=args.count_inclusive, workers=args.workers, output=args.out)
        rows = bench_rows(cfg)
        _emit(rows_to_csv(rows), args.out)
        if args.gnuplot:
            if not args.out:
                parser.error("--gnuplot needs --out")
            with open(args.gnuplot, "w") as fh:
                fh.write(gnuplot_script(args.out, f"{args.benchmark} {args.strategy}"))
        if args.summary:
            sys.stderr.write(_dump(summarize(rows)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
