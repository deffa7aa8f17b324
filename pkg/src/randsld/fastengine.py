"""Compiled re-implementation of :func:`engine.solve_loop` for long benchmarks.

The program is flattened into cell arrays (a small structure-copying heap
machine) and run under numba.  Reduction order, choice-point handling, the
step/backtrack counters and the order of random draws are the same as in
:mod:`engine`, so for a given seed both produce identical statistics and leave
the random stream in the same state.  The tests check this on random seeds.

Targets are either a ground term (compared after dereferencing) or an
:class:`ExprTarget`, which evaluates the solution as an arithmetic expression.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from ._nbrng import below, derive_seed, unit
from .engine import LimitExceeded, Limits, NonGroundSolution, RunStats, UNLIMITED, _as_goals, _query_vars
from .rng import RandomStream
from .strategies import DropShuffleStrategy, GuardStrategy, StandardStrategy, Strategy
from .terms import Atom, Program, Struct, Term, Var, is_ground

REF, ATM, INT, STR, FUN, SLOT = 0, 1, 2, 3, 4, 5

# kernel status codes
OK, MAX_STEPS, MAX_DEPTH, NONGROUND, MALFORMED, CAPACITY, EXHAUSTED, BAD_GOAL, OVERFLOW = range(9)

_ARITY_SHIFT = 40
_FID_MASK = (1 << _ARITY_SHIFT) - 1
_I64_MAX = np.iinfo(np.int64).max
_I64_MIN = np.iinfo(np.int64).min


class ExprError(ValueError):
    """A solution is not a well-formed arithmetic expression."""


@dataclass(frozen=True)
class ExprTarget:
    """Match solutions whose arithmetic value equals ``value``.

    With ``overflow_is_miss`` a solution whose value leaves the 64-bit range
    counts as an ordinary non-matching result instead of ending the run.
    """

    value: int
    overflow_is_miss: bool = False


# -- flattening ---------------------------------------------------------------


class _Symbols:
    def __init__(self):
        self.atoms: dict = {}
        self.funs: dict = {}

    def atom(self, name: str) -> int:
        return self.atoms.setdefault(name, len(self.atoms))

    def fun(self, name: str, arity: int) -> int:
        return self.funs.setdefault((name, arity), len(self.funs))


def _pack(fid: int, arity: int) -> int:
    # FUN cells hold the functor id in the low 40 bits and the arity above
    return fid | (arity << _ARITY_SHIFT)


def _leaf(term: Term, slots: dict, syms: _Symbols):
    t = type(term)
    if t is Var:
        s = slots.get(term)
        if s is None:
            s = slots[term] = len(slots)
        return (SLOT, s)
    if t is Atom:
        return (ATM, syms.atom(term.symbol))
    return (INT, term.value)


def _emit(term: Term, cells: list, slots: dict, syms: _Symbols):
    """Append ``term`` to ``cells`` and return the cell that refers to it.

    A compound occupies a FUN cell followed by one cell per argument; the
    arguments' own compounds are laid out after it, depth first.
    """
    if type(term) is not Struct:
        return _leaf(term, slots, syms)
    root = len(cells)
    todo = [(term, None)]
    while todo:
        t, where = todo.pop()
        pos = len(cells)
        if where is not None:
            cells[where] = (STR, pos)
        n = len(t.args)
        cells.append((FUN, _pack(syms.fun(t.functor, n), n)))
        cells.extend([None] * n)
        for k in range(n - 1, -1, -1):
            a = t.args[k]
            if type(a) is Struct:
                todo.append((a, pos + 1 + k))
            else:
                cells[pos + 1 + k] = _leaf(a, slots, syms)
    return (STR, root)


def _template(head: Optional[Term], goals, syms: _Symbols):
    """Cell 0 is the head root, cells 1..n the goal roots."""
    cells: list = [None] * (1 + len(goals))
    slots: dict = {}
    cells[0] = _emit(head, cells, slots, syms) if head is not None else (ATM, syms.atom("$query"))
    for k, g in enumerate(goals):
        cells[1 + k] = _emit(g, cells, slots, syms)
    return cells, slots


class CompiledProgram:
    """Array form of a :class:`Program`."""

    def __init__(self, program: Program):
        syms = _Symbols()
        tags, vals = [], []
        starts, nslots, ngoals, keeps = [], [], [], []
        for c in program.clauses:
            cells, slots = _template(c.head, c.body, syms)
            starts.append(len(tags))
            nslots.append(len(slots))
            ngoals.append(len(c.body))
            keeps.append(c.keep_probability)
            for tag, val in cells:
                tags.append(tag)
                vals.append(val)
        starts.append(len(tags))
        pred_of: dict = {}
        buckets: list = []
        for ci, c in enumerate(program.clauses):
            key = c.indicator
            if key not in pred_of:
                pred_of[key] = len(buckets)
                buckets.append([])
            buckets[pred_of[key]].append(ci)
        self.syms = syms
        self.pred_of = pred_of
        self.tpl_tag = np.array(tags, dtype=np.int64)
        self.tpl_val = np.array(vals, dtype=np.int64)
        self.cl_start = np.array(starts, dtype=np.int64)
        self.cl_nslots = np.array(nslots, dtype=np.int64)
        self.cl_ngoals = np.array(ngoals, dtype=np.int64)
        self.cl_keep = np.array(keeps, dtype=np.float64)
        flat = [ci for b in buckets for ci in b]
        self.pred_clauses = np.array(flat or [0], dtype=np.int64)
        self.pred_start = np.array(np.cumsum([0] + [len(b) for b in buckets])[:-1], dtype=np.int64)
        self.pred_len = np.array([len(b) for b in buckets], dtype=np.int64)
        if not buckets:
            self.pred_start = np.zeros(0, dtype=np.int64)

    def term_cells(self, term: Term):
        """Cells of a ground term with its root at index 0."""
        cells: list = [None]
        cells[0] = _emit(term, cells, {}, self.syms)
        return (np.array([c[0] for c in cells], dtype=np.int64),
                np.array([c[1] for c in cells], dtype=np.int64))

    def query_cells(self, goals):
        cells, slots = _template(None, goals, self.syms)
        return (np.array([c[0] for c in cells], dtype=np.int64),
                np.array([c[1] for c in cells], dtype=np.int64), slots)

    def lookup_tables(self):
        """Predicate id per atom id and per functor id (-1 when undefined).
        Call after every query and target has been flattened."""
        syms = self.syms
        atom_pred = np.full(max(len(syms.atoms), 1), -1, dtype=np.int64)
        fun_pred = np.full(max(len(syms.funs), 1), -1, dtype=np.int64)
        for (name, arity), pid in self.pred_of.items():
            if arity == 0:
                if name in syms.atoms:
                    atom_pred[syms.atoms[name]] = pid
            elif (name, arity) in syms.funs:
                fun_pred[syms.funs[(name, arity)]] = pid
        return atom_pred, fun_pred


def compile_program(program: Program) -> CompiledProgram:
    cp = getattr(program, "_fast_compiled", None)
    if cp is None:
        cp = CompiledProgram(program)
        object.__setattr__(program, "_fast_compiled", cp)
    return cp


# -- the machine ----------------------------------------------------------------


@nb.njit(cache=True, inline="always")
def _deref(tag, val, a):
    while tag[a] == REF and val[a] != a:
        a = val[a]
    return a


@nb.njit(cache=True)
def _instantiate(tpl_tag, tpl_val, start, end, nslots, tag, val, H):
    """Copy a template onto the heap at H; returns the new heap top."""
    for s in range(nslots):
        tag[H + s] = REF
        val[H + s] = H + s
    off = H + nslots
    for j in range(end - start):
        t = tpl_tag[start + j]
        v = tpl_val[start + j]
        if t == SLOT:
            tag[off + j] = REF
            val[off + j] = H + v
        elif t == STR:
            tag[off + j] = STR
            val[off + j] = off + v
        else:
            tag[off + j] = t
            val[off + j] = v
    return off + (end - start)


@nb.njit(cache=True)
def _occurs(tag, val, v, t, ostk):
    sp = 1
    ostk[0] = t
    while sp > 0:
        sp -= 1
        a = _deref(tag, val, ostk[sp])
        if a == v:
            return 1
        if tag[a] == STR:
            f = val[a]
            n = val[f] >> _ARITY_SHIFT
            if sp + n > len(ostk):
                return -1
            for k in range(n):
                ostk[sp] = f + 1 + k
                sp += 1
    return 0


@nb.njit(cache=True)
def _unify(tag, val, a, b, trail, T, s1, s2, ostk):
    """Returns (status, trail top); status 1 = unified, 0 = clash, -1 = out of space.

    Bindings are trailed even on a clash so the caller can undo them.
    """
    s1[0] = a
    s2[0] = b
    sp = 1
    while sp > 0:
        sp -= 1
        x = _deref(tag, val, s1[sp])
        y = _deref(tag, val, s2[sp])
        if x == y:
            continue
        tx = tag[x]
        ty = tag[y]
        if tx == REF or ty == REF:
            if tx != REF:
                x, y = y, x
                tx, ty = ty, tx
            if ty == STR:
                oc = _occurs(tag, val, x, y, ostk)
                if oc == -1:
                    return -1, T
                if oc == 1:
                    return 0, T
            if T >= len(trail):
                return -1, T
            val[x] = y
            trail[T] = x
            T += 1
        elif tx == STR:
            if ty != STR:
                return 0, T
            fx = val[x]
            fy = val[y]
            if val[fx] != val[fy]:
                return 0, T
            n = val[fx] >> _ARITY_SHIFT
            if sp + n > len(s1):
                return -1, T
            for k in range(n):
                s1[sp] = fx + 1 + k
                s2[sp] = fy + 1 + k
                sp += 1
        elif tx != ty or val[x] != val[y]:
            return 0, T
    return 1, T


@nb.njit(cache=True)
def _is_ground(tag, val, a, stk):
    stk[0] = a
    sp = 1
    while sp > 0:
        sp -= 1
        x = _deref(tag, val, stk[sp])
        if tag[x] == REF:
            return False
        if tag[x] == STR:
            f = val[x]
            n = val[f] >> _ARITY_SHIFT
            for k in range(n):
                stk[sp] = f + 1 + k
                sp += 1
    return True


@nb.njit(cache=True)
def _equal_template(tag, val, a, ttag, tval, s1, s2):
    s1[0] = a
    s2[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        x = _deref(tag, val, s1[sp])
        j = s2[sp]
        tt = ttag[j]
        if tag[x] != tt:
            return False
        if tt == STR:
            f = val[x]
            g = tval[j]
            if val[f] != tval[g]:
                return False
            n = val[f] >> _ARITY_SHIFT
            for k in range(n):
                s1[sp] = f + 1 + k
                s2[sp] = g + 1 + k
                sp += 1
        elif val[x] != tval[j]:
            return False
    return True


@nb.njit(cache=True)
def _checked(op, a, b):
    """(value, overflowed) for op 1 = a+b, 2 = a*b, 3 = -a."""
    if op == 1:
        if (b > 0 and a > _I64_MAX - b) or (b < 0 and a < _I64_MIN - b):
            return 0, True
        return a + b, False
    if op == 2:
        if a == 0 or b == 0:
            return 0, False
        if a > 0:
            if b > 0:
                bad = a > _I64_MAX // b
            else:
                bad = b < (_I64_MIN + a - 1) // a
        elif b > 0:
            bad = a < (_I64_MIN + b - 1) // b
        else:
            bad = a == _I64_MIN or b == _I64_MIN or -a > _I64_MAX // -b
        if bad:
            return 0, True
        return a * b, False
    if a == _I64_MIN:
        return 0, True
    return -a, False


@nb.njit(cache=True)
def _is_fun(tag, val, x, fid):
    return tag[x] == STR and (val[val[x]] & _FID_MASK) == fid


@nb.njit(cache=True)
def _eval_expr(tag, val, root, ops, stk, kinds, vals):
    """Value of the expression at ``root`` as (status, value).

    Accepts the list encoding ``[Op, [Args...]]`` and the compound encoding
    ``plus(A, B)``.  ``ops`` holds the ids of: atoms plus, times, minus; the
    list constructor; the empty list; functors plus/2, times/2, minus/1
    (-1 where a symbol does not occur).
    """
    stk[0] = root
    sp = 1
    m = 0
    args = np.empty(2, dtype=np.int64)
    while sp > 0:
        sp -= 1
        x = _deref(tag, val, stk[sp])
        if m >= len(kinds):
            return CAPACITY, 0
        t = tag[x]
        if t == INT:
            kinds[m] = 0
            vals[m] = val[x]
            m += 1
            continue
        if t == REF:
            return NONGROUND, 0
        if t != STR:
            return MALFORMED, 0
        f = val[x]
        fid = val[f] & _FID_MASK
        op = 0
        count = 0
        if fid == ops[3]:
            h = _deref(tag, val, f + 1)
            if tag[h] == REF:
                return NONGROUND, 0
            if tag[h] == ATM:
                for k in range(3):
                    if val[h] == ops[k]:
                        op = k + 1
            if op == 0:
                return MALFORMED, 0
            rest = _deref(tag, val, f + 2)
            if tag[rest] == REF:
                return NONGROUND, 0
            if not _is_fun(tag, val, rest, ops[3]):
                return MALFORMED, 0
            g = val[rest]
            tail = _deref(tag, val, g + 2)
            if tag[tail] == REF:
                return NONGROUND, 0
            if not (tag[tail] == ATM and val[tail] == ops[4]):
                return MALFORMED, 0
            want = 1 if op == 3 else 2
            lst = _deref(tag, val, g + 1)
            while True:
                if tag[lst] == REF:
                    return NONGROUND, 0
                if tag[lst] == ATM and val[lst] == ops[4]:
                    break
                if not _is_fun(tag, val, lst, ops[3]) or count >= want:
                    return MALFORMED, 0
                args[count] = val[lst] + 1
                count += 1
                lst = _deref(tag, val, val[lst] + 2)
            if count != want:
                return MALFORMED, 0
        else:
            for k in range(3):
                if fid == ops[5 + k]:
                    op = k + 1
            if op == 0:
                return MALFORMED, 0
            count = val[f] >> _ARITY_SHIFT
            for k in range(count):
                args[k] = f + 1 + k
        kinds[m] = op
        m += 1
        if sp + count > len(stk):
            return CAPACITY, 0
        for k in range(count - 1, -1, -1):
            stk[sp] = args[k]
            sp += 1
    # reverse pre-order: operands are on top of the value stack, first operand topmost
    vp = 0
    for j in range(m - 1, -1, -1):
        k = kinds[j]
        if k == 0:
            stk[vp] = vals[j]
            vp += 1
        elif k == 3:
            v, bad = _checked(3, stk[vp - 1], 0)
            if bad:
                return OVERFLOW, 0
            stk[vp - 1] = v
        else:
            v, bad = _checked(k, stk[vp - 1], stk[vp - 2])
            if bad:
                return OVERFLOW, 0
            vp -= 1
            stk[vp - 1] = v
    return OK, stk[0]


@nb.njit(cache=True)
def _undo(trail, T, mark, val):
    while T > mark:
        T -= 1
        x = trail[T]
        val[x] = x
    return T


@nb.njit(cache=True)
def _solve_loop_kernel(tpl_tag, tpl_val, cl_start, cl_nslots, cl_ngoals, cl_keep,
                       pred_start, pred_len, pred_clauses, atom_pred, fun_pred,
                       q_tag, q_val, q_nslots, q_ngoals, answer_slot,
                       target_kind, t_tag, t_val, target_value, ops,
                       mode, p_drop, st, max_steps, max_depth, max_iter, count_inclusive,
                       cap):
    """Returns (status, iterations, results, steps, backtracks)."""
    tag = np.empty(cap, dtype=np.int64)
    val = np.empty(cap, dtype=np.int64)
    trail = np.empty(cap, dtype=np.int64)
    fr_goal = np.empty(cap, dtype=np.int64)
    fr_next = np.empty(cap, dtype=np.int64)
    cp_goal = np.empty(cap, dtype=np.int64)
    cp_rest = np.empty(cap, dtype=np.int64)
    cp_trail = np.empty(cap, dtype=np.int64)
    cp_heap = np.empty(cap, dtype=np.int64)
    cp_frame = np.empty(cap, dtype=np.int64)
    cp_as = np.empty(cap, dtype=np.int64)
    cp_an = np.empty(cap, dtype=np.int64)
    cp_next = np.empty(cap, dtype=np.int64)
    altbuf = np.empty(cap, dtype=np.int64)
    s1 = np.empty(cap, dtype=np.int64)
    s2 = np.empty(cap, dtype=np.int64)
    ostk = np.empty(cap, dtype=np.int64)
    kinds = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.int64)

    iterations = 0
    results = 0
    steps = 0
    backtracks = 0
    qlen = len(q_tag)
    if q_nslots + qlen >= cap:
        return CAPACITY, iterations, results, steps, backtracks
    while True:
        if max_iter > 0 and iterations >= max_iter:
            return EXHAUSTED, iterations, results, steps, backtracks
        iterations += 1
        H = _instantiate(q_tag, q_val, 0, qlen, q_nslots, tag, val, 0)
        T = 0
        F = 0
        B = 0
        A = 0
        pending = -1
        for k in range(q_ngoals - 1, -1, -1):
            fr_goal[F] = q_nslots + 1 + k
            fr_next[F] = pending
            pending = F
            F += 1
        while True:
            if pending == -1:
                if target_kind == 0:
                    if not _is_ground(tag, val, answer_slot, s1):
                        return NONGROUND, iterations, results, steps, backtracks
                    hit = _equal_template(tag, val, answer_slot, t_tag, t_val, s1, s2)
                elif target_kind == 1 or target_kind == 3:
                    status, v = _eval_expr(tag, val, answer_slot, ops, s1, kinds, vals)
                    if status == OVERFLOW and target_kind == 3:
                        hit = False
                    elif status != OK:
                        return status, iterations, results, steps, backtracks
                    else:
                        hit = v == target_value
                else:
                    hit = False
                if hit:
                    if count_inclusive:
                        results += 1
                    return OK, iterations, results, steps, backtracks
                results += 1
                resume = True
            else:
                if max_steps > 0 and steps >= max_steps:
                    return MAX_STEPS, iterations, results, steps, backtracks
                if max_depth > 0 and B >= max_depth:
                    return MAX_DEPTH, iterations, results, steps, backtracks
                if B >= cap:
                    return CAPACITY, iterations, results, steps, backtracks
                steps += 1
                g = _deref(tag, val, fr_goal[pending])
                rest = fr_next[pending]
                pid = -1
                if tag[g] == STR:
                    fid = val[val[g]] & _FID_MASK
                    if fid < len(fun_pred):
                        pid = fun_pred[fid]
                elif tag[g] == ATM:
                    if val[g] < len(atom_pred):
                        pid = atom_pred[val[g]]
                else:
                    return BAD_GOAL, iterations, results, steps, backtracks
                n = 0
                if pid >= 0:
                    s0 = pred_start[pid]
                    cnt = pred_len[pid]
                    if A + cnt >= cap:
                        return CAPACITY, iterations, results, steps, backtracks
                    for k in range(cnt):
                        c = pred_clauses[s0 + k]
                        if mode == 0:
                            keep = True
                        elif mode == 1:
                            keep = unit(st) < cl_keep[c]
                        else:
                            keep = not unit(st) < p_drop
                        if keep:
                            altbuf[A + n] = c
                            n += 1
                    if mode == 2:
                        for i in range(n - 1, 0, -1):
                            j = below(st, i + 1)
                            tmp = altbuf[A + i]
                            altbuf[A + i] = altbuf[A + j]
                            altbuf[A + j] = tmp
                cp_goal[B] = g
                cp_rest[B] = rest
                cp_trail[B] = T
                cp_heap[B] = H
                cp_frame[B] = F
                cp_as[B] = A
                cp_an[B] = n
                cp_next[B] = 0
                A += n
                B += 1
                resume = False
            found = False
            while B > 0:
                b = B - 1
                if resume:
                    backtracks += 1
                    resume = False
                T = _undo(trail, T, cp_trail[b], val)
                H = cp_heap[b]
                F = cp_frame[b]
                while cp_next[b] < cp_an[b]:
                    c = altbuf[cp_as[b] + cp_next[b]]
                    cp_next[b] += 1
                    start = cl_start[c]
                    end = cl_start[c + 1]
                    if H + cl_nslots[c] + (end - start) >= cap:
                        return CAPACITY, iterations, results, steps, backtracks
                    newH = _instantiate(tpl_tag, tpl_val, start, end, cl_nslots[c], tag, val, H)
                    off = H + cl_nslots[c]
                    ok, T = _unify(tag, val, cp_goal[b], off, trail, T, s1, s2, ostk)
                    if ok == -1:
                        return CAPACITY, iterations, results, steps, backtracks
                    if ok == 1:
                        H = newH
                        nxt = cp_rest[b]
                        ng = cl_ngoals[c]
                        if F + ng >= cap:
                            return CAPACITY, iterations, results, steps, backtracks
                        for k in range(ng - 1, -1, -1):
                            fr_goal[F] = off + 1 + k
                            fr_next[F] = nxt
                            nxt = F
                            F += 1
                        pending = nxt
                        found = True
                        break
                    T = _undo(trail, T, cp_trail[b], val)
                if found:
                    break
                A = cp_as[b]
                B -= 1
                resume = True
            if not found:
                break


@nb.njit(cache=True)
def _batch_kernel(tpl_tag, tpl_val, cl_start, cl_nslots, cl_ngoals, cl_keep,
                  pred_start, pred_len, pred_clauses, atom_pred, fun_pred,
                  q_tag, q_val, q_nslots, q_ngoals, answer_slot,
                  target_kind, t_tag, t_val, target_value, ops,
                  mode, p_drop, seed, first, trials, max_steps, max_depth, max_iter, count_inclusive, cap):
    out = np.zeros((trials, 5), dtype=np.int64)
    st = np.zeros(1, dtype=np.uint64)
    for trial in range(trials):
        st[0] = derive_seed(seed, first + trial)
        res = _solve_loop_kernel(tpl_tag, tpl_val, cl_start, cl_nslots, cl_ngoals, cl_keep,
                                 pred_start, pred_len, pred_clauses, atom_pred, fun_pred,
                                 q_tag, q_val, q_nslots, q_ngoals, answer_slot,
                                 target_kind, t_tag, t_val, target_value, ops,
                                 mode, p_drop, st, max_steps, max_depth, max_iter, count_inclusive,
                                 cap)
        for k in range(5):
            out[trial, k] = res[k]
    return out


# -- Python front end ------------------------------------------------------------


def _strategy_mode(strategy: Strategy) -> tuple[int, float]:
    if isinstance(strategy, StandardStrategy):
        return 0, 0.0
    if isinstance(strategy, GuardStrategy):
        return 1, 0.0
    if isinstance(strategy, DropShuffleStrategy):
        return 2, float(strategy.p_d)
    raise TypeError(f"no compiled form for {strategy!r}")


class _Job:
    """Everything the kernel needs for one (program, query, target, strategy)."""

    def __init__(self, program: Program, query, target, strategy: Strategy,
                 answer_var: Optional[str], limits: Limits, count_inclusive: bool,
                 max_iter: int = 0):
        cp = compile_program(program)
        goals = _as_goals(query)
        q_tag, q_val, slots = cp.query_cells(goals)
        if answer_var is None:
            qvars = _query_vars(goals)
            if not qvars and target is not None:
                raise ValueError("query has no variables to test")
            var = qvars[0] if qvars else None
        else:
            var = Var(answer_var)
        if target is not None and var not in slots:
            raise ValueError(f"variable {answer_var!r} does not occur in the query")
        answer_slot = slots[var] if var is not None else 0
        if target is None:
            kind, t_tag, t_val, tv = 2, np.zeros(1, np.int64), np.zeros(1, np.int64), 0
        elif isinstance(target, ExprTarget):
            kind = 3 if target.overflow_is_miss else 1
            t_tag, t_val, tv = np.zeros(1, np.int64), np.zeros(1, np.int64), int(target.value)
        elif isinstance(target, Term):
            if not is_ground(target):
                raise ValueError("a literal target must be ground")
            kind, tv = 0, 0
            t_tag, t_val = cp.term_cells(target)
        else:
            raise TypeError("compiled runs need a ground term or ExprTarget target")
        syms = cp.syms
        ops = np.array([
            syms.atoms.get("plus", -1), syms.atoms.get("times", -1), syms.atoms.get("minus", -1),
            syms.funs.get((".", 2), -1), syms.atoms.get("[]", -1),
            syms.funs.get(("plus", 2), -1), syms.funs.get(("times", 2), -1),
            syms.funs.get(("minus", 1), -1),
        ], dtype=np.int64)
        atom_pred, fun_pred = cp.lookup_tables()
        mode, p_drop = _strategy_mode(strategy)
        self.args = (cp.tpl_tag, cp.tpl_val, cp.cl_start, cp.cl_nslots, cp.cl_ngoals, cp.cl_keep,
                     cp.pred_start, cp.pred_len, cp.pred_clauses, atom_pred, fun_pred,
                     q_tag, q_val, len(slots), len(goals), answer_slot,
                     kind, t_tag, t_val, tv, ops, mode, p_drop)
        self.limits = (limits.max_steps or 0, limits.max_depth or 0, max_iter, bool(count_inclusive))


_CAP0 = 1 << 12
_CAP_MAX = 1 << 28


def _raise_for(status: int, stats: RunStats):
    if status == MAX_STEPS:
        raise LimitExceeded("max_steps", stats)
    if status == MAX_DEPTH:
        raise LimitExceeded("max_depth", stats)
    if status == NONGROUND:
        raise NonGroundSolution("solution is not ground")
    if status == MALFORMED:
        raise ExprError("solution is not an arithmetic expression")
    if status == OVERFLOW:
        raise OverflowError("expression value outside signed 64-bit range")
    if status == BAD_GOAL:
        raise TypeError("cannot call a variable or integer goal")


def _run_one(job: _Job, rng: RandomStream):
    cap = _CAP0
    while True:
        st = np.array([rng.state], dtype=np.uint64)
        res = _solve_loop_kernel(*job.args, st, *job.limits, cap)
        if res[0] != CAPACITY:
            rng._state = int(st[0])
            return res
        if cap >= _CAP_MAX:
            raise MemoryError("compiled engine ran out of space")
        cap *= 4


def fast_solve_loop(program: Program, query, target, strategy: Strategy,
                    rng: Optional[RandomStream] = None, limits: Limits = UNLIMITED,
                    answer_var: Optional[str] = None, count_inclusive: bool = False) -> RunStats:
    """Compiled :func:`engine.solve_loop`; same statistics and errors.

    ``target`` is a ground term or an :class:`ExprTarget`.
    """
    rng = rng if rng is not None else RandomStream(0)
    job = _Job(program, query, target, strategy, answer_var, limits, count_inclusive)
    status, it, res, steps, bt = (int(x) for x in _run_one(job, rng))
    stats = RunStats(res, it, steps, bt, rng.seed)
    _raise_for(status, stats)
    return stats


def fast_count_run(program: Program, query, strategy: Strategy,
                   rng: Optional[RandomStream] = None, limits: Limits = UNLIMITED) -> tuple[int, int]:
    """Compiled :func:`engine.count_run`."""
    rng = rng if rng is not None else RandomStream(0)
    job = _Job(program, query, None, strategy, None, limits, False, max_iter=1)
    status, it, res, steps, bt = (int(x) for x in _run_one(job, rng))
    stats = RunStats(res, 1, steps, bt, rng.seed)
    _raise_for(status, stats)
    return res, steps


def fast_count_batch(program: Program, query, strategy: Strategy, seed: int, trials: int,
                     limits: Limits = UNLIMITED) -> np.ndarray:
    """Solutions per run for ``trials`` independent runs (trial k uses
    ``derive_seed(seed, k)``); shape (trials, 2): results, steps."""
    job = _Job(program, query, None, strategy, None, limits, False, max_iter=1)
    out = _batch(job, seed, trials)
    for row in out:
        if row[0] not in (EXHAUSTED,):
            _raise_for(int(row[0]), RunStats(int(row[2]), 0, int(row[3]), int(row[4]), 0))
    return out[:, [2, 3]].copy()


def _batch(job: _Job, seed: int, trials: int, first: int = 0) -> np.ndarray:
    out = _batch_kernel(*job.args, np.uint64(seed), int(first), int(trials), *job.limits, _CAP0)
    redo = np.flatnonzero(out[:, 0] == CAPACITY)
    for k in redo:
        rng = RandomStream(seed).spawn(int(first + k))
        out[k] = _run_one(job, rng)
    return out


def fast_solve_loop_batch(program: Program, query, target, strategy: Strategy, seed: int,
                          trials: int, limits: Limits = UNLIMITED,
                          answer_var: Optional[str] = None,
                          count_inclusive: bool = False, first: int = 0) -> np.ndarray:
    """Run ``trials`` independent solve loops; trial k uses ``derive_seed(seed, first + k)``.

    Returns an int64 array with columns status, iterations, results, steps,
    backtracks.  Limit statuses (``MAX_STEPS``, ``MAX_DEPTH``) are returned,
    not raised; other errors raise.
    """
    job = _Job(program, query, target, strategy, answer_var, limits, count_inclusive)
    out = _batch(job, seed, trials, first)
    for row in out:
        if row[0] not in (OK, MAX_STEPS, MAX_DEPTH):
            _raise_for(int(row[0]), RunStats(int(row[2]), int(row[1]), int(row[3]), int(row[4]), 0))
    return out
