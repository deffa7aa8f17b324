"""Compiled Monte Carlo estimators for the two chains.

Each kernel simulates the same transition law as :mod:`chains` with the same
draw order, using one derived stream per trial, so results do not depend on
how trials are batched.
"""

from __future__ import annotations

import math
from typing import Sequence

import numba as nb
import numpy as np

from ._nbrng import below, derive_seed, unit
from .chains import McEstimate, estimate
from .strategies import DropShuffleParams, GuardParams

# -- guard chain ------------------------------------------------------------

_S, _C, _ROOT, _BOT = 0, 1, 2, 3


@nb.njit(cache=True)
def _grow(a):
    b = np.empty(2 * len(a), dtype=a.dtype)
    b[: len(a)] = a
    return b


@nb.njit(cache=True)
def _guard_counts_kernel(ps, p_c, trials, seed, step_cap):
    r = len(ps)
    outs = np.zeros(trials, dtype=np.int64)
    visits = np.zeros(trials, dtype=np.int64)
    cut = np.zeros(trials, dtype=np.bool_)
    st = np.zeros(1, dtype=np.uint64)
    block = np.zeros(64, dtype=np.int64)
    for trial in range(trials):
        st[0] = derive_seed(seed, trial)
        kind, i, t = _S, 1, 0
        n_vis, n_out = 0, 0
        while kind != _BOT:
            if n_vis >= step_cap:
                cut[trial] = True
                break
            n_vis += 1
            if kind == _C:
                n_out += 1
            u = unit(st)
            if kind == _S and u < ps[i - 1]:
                kind = _C
                continue
            if kind == _C and u < p_c:
                if t == len(block):
                    block = _grow(block)
                block[t] = i
                t += 1
                kind, i = _S, 1
                continue
            if i < r:
                kind, i = _S, i + 1
                continue
            while t > 0 and block[t - 1] == r:
                t -= 1
            if t == 0:
                kind = _BOT
            else:
                t -= 1
                kind, i = _S, block[t] + 1
        outs[trial] = n_out
        visits[trial] = n_vis
    return outs, visits, cut


def mc_counts_guard(params: GuardParams, trials: int, seed: int = 0,
                    step_cap: int = 10_000_000) -> tuple[McEstimate, McEstimate]:
    """Outputs and visited states below the root of a block, per trial."""
    ps = np.asarray(params.ps, dtype=np.float64)
    o, n, cut = _guard_counts_kernel(ps, float(params.p_c), int(trials), np.uint64(seed), int(step_cap))
    keep = ~cut
    k = int(cut.sum())
    return estimate(o[keep], k), estimate(n[keep], k)


def word_key(word: Sequence[int], r: int) -> int:
    """Index of a word among all words, shortest first (bijective base r)."""
    key = 0
    for a in word:
        key = key * r + a
    return key


def words_up_to(depth: int, r: int) -> list[tuple]:
    out = [()]
    frontier = [()]
    for _ in range(depth):
        frontier = [w + (a,) for w in frontier for a in range(1, r + 1)]
        out.extend(frontier)
    return out


@nb.njit(cache=True)
def _guard_hits_kernel(ps, p_c, depth, looped_start_forced, trials, seed, step_cap):
    r = len(ps)
    nblocks = 0
    w = 1
    for _ in range(depth + 1):
        nblocks += w
        w *= r
    ntarget = nblocks * r
    s1 = np.zeros(ntarget)
    s2 = np.zeros(ntarget)
    hits = np.zeros(ntarget, dtype=np.int64)
    seen = np.zeros(ntarget, dtype=np.bool_)
    block = np.zeros(64, dtype=np.int64)
    keys = np.zeros(depth + 2, dtype=np.int64)
    st = np.zeros(1, dtype=np.uint64)
    for trial in range(trials):
        st[0] = derive_seed(seed, trial)
        seen[:] = False
        left = ntarget
        kind, i, t = _ROOT, 1, 0
        steps = 0
        while left > 0 and steps < step_cap:
            # advance one step
            if kind == _ROOT:
                if looped_start_forced or unit(st) < p_c:
                    kind, i, t = _S, 1, 0
                    keys[0] = 0
                # else stay at the root (looped)
            else:
                u = unit(st)
                if kind == _S and u < ps[i - 1]:
                    kind = _C
                elif kind == _C and u < p_c:
                    if t == len(block):
                        block = _grow(block)
                    block[t] = i
                    if t < depth:
                        keys[t + 1] = keys[t] * r + i
                    t += 1
                    kind, i = _S, 1
                elif i < r:
                    kind, i = _S, i + 1
                else:
                    while t > 0 and block[t - 1] == r:
                        t -= 1
                    if t == 0:
                        kind = _ROOT
                    else:
                        t -= 1
                        kind, i = _S, block[t] + 1
            steps += 1
            if kind == _S and t <= depth:
                k = keys[t] * r + (i - 1)
                if not seen[k]:
                    seen[k] = True
                    left -= 1
                    s1[k] += steps
                    s2[k] += float(steps) * steps
                    hits[k] += 1
    return s1, s2, hits


def mc_guard_hitting(params: GuardParams, depth: int, trials: int, seed: int = 0,
                     forced_start: bool = True, step_cap: int = 10_000_000) -> dict:
    """Mean steps from the start state to every s_i^alpha with |alpha| <= depth
    in the looped chain; returns ``{(alpha, i): McEstimate}``.

    A trial runs until every target has been visited.  Targets not reached
    within ``step_cap`` are counted as truncated for that target only.
    """
    r = params.r
    ps = np.asarray(params.ps, dtype=np.float64)
    s1, s2, hits = _guard_hits_kernel(ps, float(params.p_c), int(depth), bool(forced_start),
                                      int(trials), np.uint64(seed), int(step_cap))
    out = {}
    for word in words_up_to(depth, r):
        for i in range(1, r + 1):
            k = word_key(word, r) * r + (i - 1)
            out[(word, i)] = _from_moments(s1[k], s2[k], int(hits[k]), trials - int(hits[k]))
    return out


def _from_moments(s1: float, s2: float, n: int, truncated: int) -> McEstimate:
    if n == 0:
        return McEstimate(math.nan, math.nan, 0, truncated)
    mean = s1 / n
    var = max(s2 - n * mean * mean, 0.0) / (n - 1) if n > 1 else 0.0
    return McEstimate(mean, math.sqrt(var / n), n, truncated)


# -- drop-and-shuffle chain ---------------------------------------------------
# frames: sel[k] in {N, C, NC, CN}; pairs carry com[k, cstart[k]:cstart[k]+clen[k]]

_N, _CC, _NC, _CN = 0, 1, 2, 3
_MAXF = 1 << 14


@nb.njit(cache=True)
def _ds_pop(n, sel, pair, cstart, clen):
    """Pop; returns the new frame count, or -1 for the terminal state."""
    while n > 0:
        k = n - 1
        if pair[k]:
            if clen[k] > 1:
                cstart[k] += 1
                clen[k] -= 1
                return n
            pair[k] = False
            continue
        if sel[k] == _NC:
            sel[k] = _CC
            return n
        if sel[k] == _CN:
            sel[k] = _N
            return n
        n -= 1
    return -1


@nb.njit(cache=True)
def _ds_step(n, sel, pair, com, cstart, clen, pd, r, st, kept):
    """One transition from a non-terminal state; returns the new frame count,
    -1 for the terminal state, or -2 when the frame budget is exhausted."""
    if n == 0 or pair[n - 1]:
        nil = not unit(st) < pd
        rec = not unit(st) < pd
        if not (nil or rec):
            return _ds_pop(n, sel, pair, cstart, clen)
        if n == _MAXF:
            return -2
        if nil and rec:
            sel[n] = _CN if below(st, 2) == 0 else _NC
        elif nil:
            sel[n] = _N
        else:
            sel[n] = _CC
        pair[n] = False
        return n + 1
    top = sel[n - 1]
    if top == _N or top == _NC:
        return _ds_pop(n, sel, pair, cstart, clen)
    m = 0
    for c in range(1, r + 1):
        if not unit(st) < pd:
            kept[m] = c
            m += 1
    for i in range(m - 1, 0, -1):
        j = below(st, i + 1)
        tmp = kept[i]
        kept[i] = kept[j]
        kept[j] = tmp
    if m == 0:
        return _ds_pop(n, sel, pair, cstart, clen)
    k = n - 1
    for j in range(m):
        com[k, j] = kept[j]
    cstart[k] = 0
    clen[k] = m
    pair[k] = True
    return n


@nb.njit(cache=True)
def _ds_arrays(r):
    sel = np.zeros(_MAXF, dtype=np.int64)
    pair = np.zeros(_MAXF, dtype=np.bool_)
    com = np.zeros((_MAXF, r), dtype=np.int64)
    cstart = np.zeros(_MAXF, dtype=np.int64)
    clen = np.zeros(_MAXF, dtype=np.int64)
    kept = np.zeros(r, dtype=np.int64)
    return sel, pair, com, cstart, clen, kept


@nb.njit(cache=True)
def _ds_bottom_kernel(pd, r, trials, seed, step_cap):
    sel, pair, com, cstart, clen, kept = _ds_arrays(r)
    times = np.zeros(trials, dtype=np.int64)
    cut = np.zeros(trials, dtype=np.bool_)
    st = np.zeros(1, dtype=np.uint64)
    for trial in range(trials):
        st[0] = derive_seed(seed, trial)
        n = 0
        steps = 0
        while n >= 0:
            if steps >= step_cap:
                cut[trial] = True
                break
            n = _ds_step(n, sel, pair, com, cstart, clen, pd, r, st, kept)
            steps += 1
            if n == -2:
                cut[trial] = True
                break
        times[trial] = steps
    return times, cut


def mc_ds_constant(params: DropShuffleParams, trials: int, seed: int = 0,
                   step_cap: int = 10_000_000) -> McEstimate:
    """Steps from the empty stack to termination."""
    t, cut = _ds_bottom_kernel(float(params.p_d), int(params.r), int(trials), np.uint64(seed),
                               int(step_cap))
    return estimate(t[~cut], int(cut.sum()))


@nb.njit(cache=True)
def _prefix_len_match(n, com, cstart, tau):
    # number of pair frames below the top equals n - 1; compare their first commands
    l = n - 1
    if l > len(tau):
        return False
    for k in range(l):
        if com[k, cstart[k]] != tau[k]:
            return False
    return True


@nb.njit(cache=True)
def _ds_looped_kernel(pd, r, tau, trials, seed, step_cap):
    L = len(tau)
    sel, pair, com, cstart, clen, kept = _ds_arrays(r)
    # per prefix length l: first hit of A_l, and first hit of A_l or termination
    s1 = np.zeros(L + 1)
    s2 = np.zeros(L + 1)
    hits = np.zeros(L + 1, dtype=np.int64)
    g1 = np.zeros(L + 1)
    g2 = np.zeros(L + 1)
    gh = np.zeros(L + 1, dtype=np.int64)
    seen = np.zeros(L + 1, dtype=np.bool_)
    gseen = np.zeros(L + 1, dtype=np.bool_)
    st = np.zeros(1, dtype=np.uint64)
    for trial in range(trials):
        st[0] = derive_seed(seed, trial)
        seen[:] = False
        gseen[:] = False
        left = L + 1
        n = 0
        steps = 0
        bottom_seen = False
        while left > 0 and steps < step_cap:
            if n == -1:
                n = 0
            else:
                n = _ds_step(n, sel, pair, com, cstart, clen, pd, r, st, kept)
                if n == -2:
                    break
            steps += 1
            if n == -1 and not bottom_seen:
                bottom_seen = True
                for l in range(L + 1):
                    if not gseen[l]:
                        gseen[l] = True
                        g1[l] += steps
                        g2[l] += float(steps) * steps
                        gh[l] += 1
            if n > 0 and not pair[n - 1] and (sel[n - 1] == _N or sel[n - 1] == _NC):
                l = n - 1
                if l <= L and not seen[l] and _prefix_len_match(n, com, cstart, tau):
                    seen[l] = True
                    left -= 1
                    s1[l] += steps
                    s2[l] += float(steps) * steps
                    hits[l] += 1
                    if not gseen[l]:
                        gseen[l] = True
                        g1[l] += steps
                        g2[l] += float(steps) * steps
                        gh[l] += 1
    return s1, s2, hits, g1, g2, gh


def mc_ds_hitting(params: DropShuffleParams, tau: Sequence[int], trials: int, seed: int = 0,
                  step_cap: int = 10_000_000) -> tuple[list, list]:
    """Looped chain from the empty stack.

    Returns two lists indexed by prefix length l = 0..len(tau): the mean steps
    until an output of ``tau[:l]``, and the mean steps until that output or
    the terminal state, whichever comes first.
    """
    tau_arr = np.asarray(tau, dtype=np.int64)
    if any(not 1 <= a <= params.r for a in tau):
        raise ValueError("letters must lie in 1..r")
    s1, s2, hits, g1, g2, gh = _ds_looped_kernel(float(params.p_d), int(params.r), tau_arr,
                                                 int(trials), np.uint64(seed), int(step_cap))
    full = [_from_moments(s1[l], s2[l], int(hits[l]), trials - int(hits[l]))
            for l in range(len(tau) + 1)]
    widened = [_from_moments(g1[l], g2[l], int(gh[l]), trials - int(gh[l]))
               for l in range(len(tau) + 1)]
    return full, widened


@nb.njit(cache=True)
def _ds_exit_kernel(pd, r, root_sel, root_com, root_len, tau, trials, seed, step_cap):
    # start at a recursive sub-tree root; run until its exit state
    R = len(root_sel)
    L = len(tau)
    sel, pair, com, cstart, clen, kept = _ds_arrays(r)
    full = np.zeros(R + L, dtype=np.int64)
    misses = np.zeros(L + 1, dtype=np.int64)
    finished = 0
    st = np.zeros(1, dtype=np.uint64)
    for trial in range(trials):
        st[0] = derive_seed(seed, trial)
        for k in range(R):
            sel[k] = root_sel[k]
            pair[k] = True
            cstart[k] = 0
            clen[k] = root_len[k]
            for j in range(root_len[k]):
                com[k, j] = root_com[k, j]
        for k in range(R):
            full[k] = com[k, 0]
        for k in range(L):
            full[R + k] = tau[k]
        n = R
        reached = np.zeros(L + 1, dtype=np.bool_)
        steps = 0
        ok = False
        while steps < step_cap:
            n = _ds_step(n, sel, pair, com, cstart, clen, pd, r, st, kept)
            steps += 1
            if n == -2:
                break
            if n < R or not pair[R - 1] or cstart[R - 1] != 0:
                ok = True
                break
            if not pair[n - 1] and (sel[n - 1] == _N or sel[n - 1] == _NC):
                l = n - 1 - R
                if 0 <= l <= L and _prefix_len_match(n, com, cstart, full):
                    reached[l] = True
        if ok:
            finished += 1
            for l in range(L + 1):
                if not reached[l]:
                    misses[l] += 1
    return misses, finished


def mc_ds_exit_before_hit(params: DropShuffleParams, root: Sequence, tau: Sequence[int],
                          trials: int, seed: int = 0, step_cap: int = 10_000_000) -> list:
    """Frequency of leaving the sub-tree below ``root`` before it outputs
    prefix(root) + tau[:l], for l = 0..len(tau).

    ``root`` is a sequence of pair frames ``(sel, commands)`` with ``sel`` in
    ``("C", "CN")``.
    """
    r = params.r
    codes = {"C": _CC, "CN": _CN}
    root_sel = np.array([codes[s] for s, _ in root], dtype=np.int64)
    root_com = np.zeros((len(root), r), dtype=np.int64)
    root_len = np.array([len(c) for _, c in root], dtype=np.int64)
    for k, (_, c) in enumerate(root):
        root_com[k, : len(c)] = c
    misses, finished = _ds_exit_kernel(float(params.p_d), r, root_sel, root_com, root_len,
                                       np.asarray(tau, dtype=np.int64), int(trials),
                                       np.uint64(seed), int(step_cap))
    out = []
    for m in misses:
        p = m / finished
        out.append(McEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / finished), int(finished),
                              int(trials - finished)))
    return out
