import itertools
import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from randsld.parser import parse_program
from randsld.rng import CountingStream, RandomStream
from randsld.strategies import (DropShuffleParams, DropShuffleStrategy, GuardParams, GuardStrategy,
                                StandardStrategy, make_strategy, select_drop_shuffle, select_guard,
                                shuffle_in_place)

CLAUSES = parse_program("c(1) :- guard(0.2). c(2) :- guard(1.0). c(3) :- guard(0.7). c(4).").clauses


def test_standard_keeps_order():
    assert StandardStrategy().select(CLAUSES, RandomStream(0)) == list(CLAUSES)


def test_guard_one_draw_per_clause():
    rng = CountingStream(4)
    select_guard(CLAUSES, rng)
    assert rng.draws == len(CLAUSES)


def test_guard_keep_frequencies():
    rng = RandomStream(1)
    n = 40_000
    kept = Counter()
    for _ in range(n):
        for c in select_guard(CLAUSES, rng):
            kept[c] += 1
    for c in CLAUSES:
        p = c.keep_probability
        if p in (0.0, 1.0):
            assert kept[c] == n * p
        else:
            assert stats.binomtest(kept[c], n, p).pvalue > 1e-4


def test_guard_preserves_source_order():
    rng = RandomStream(2)
    for _ in range(200):
        out = select_guard(CLAUSES, rng)
        assert out == [c for c in CLAUSES if c in out]


class ScriptedStream(RandomStream):
    """Replays fixed bounded draws; used to enumerate every shuffle path."""

    def __init__(self, script):
        super().__init__(0)
        self.script = list(script)

    def below(self, n):
        j = self.script.pop(0)
        assert 0 <= j < n
        return j


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_fisher_yates_enumeration_is_exact(k):
    # every draw path is equally likely; each permutation must come out exactly once
    paths = itertools.product(*[range(i + 1) for i in range(k - 1, 0, -1)])
    seen = Counter()
    for path in paths:
        items = list(range(k))
        shuffle_in_place(items, ScriptedStream(path))
        seen[tuple(items)] += 1
    assert len(seen) == math.factorial(k)
    assert set(seen.values()) == {1}


def test_two_item_shuffle_convention():
    items = ["nil", "cons"]
    shuffle_in_place(items, ScriptedStream([0]))
    assert items == ["cons", "nil"]
    items = ["nil", "cons"]
    shuffle_in_place(items, ScriptedStream([1]))
    assert items == ["nil", "cons"]


def test_drop_shuffle_draw_count():
    rng = CountingStream(9)
    out = select_drop_shuffle(CLAUSES, rng, 0.0)
    # r drop draws, then k-1 bounded draws (each at least one raw draw)
    assert len(out) == len(CLAUSES)
    assert rng.draws >= len(CLAUSES) + len(CLAUSES) - 1


def test_drop_shuffle_distribution_matches_exact_law():
    p_d, items = 0.4, ["a", "b", "c"]
    rng = RandomStream(5)
    n = 60_000
    counts = Counter(tuple(select_drop_shuffle(items, rng, p_d)) for _ in range(n))
    outcomes, expected = [], []
    for l in range(len(items) + 1):
        for perm in itertools.permutations(items, l):
            outcomes.append(perm)
            expected.append((1 - p_d) ** l * p_d ** (len(items) - l) / math.factorial(l))
    assert math.isclose(sum(expected), 1.0)
    observed = np.array([counts[o] for o in outcomes])
    assert sum(counts.values()) == observed.sum()
    assert stats.chisquare(observed, np.array(expected) * n).pvalue > 1e-4


def test_drop_everything_and_nothing():
    rng = RandomStream(0)
    assert select_drop_shuffle(CLAUSES, rng, 1.0) == []
    assert sorted(map(id, select_drop_shuffle(CLAUSES, rng, 0.0))) == sorted(map(id, CLAUSES))


def test_make_strategy():
    assert isinstance(make_strategy("guard"), GuardStrategy)
    ds = make_strategy("drop_shuffle", 0.3)
    assert isinstance(ds, DropShuffleStrategy) and ds.p_d == 0.3
    with pytest.raises(ValueError):
        make_strategy("bogus")
    with pytest.raises(ValueError):
        DropShuffleStrategy(1.5)


def test_params():
    g = GuardParams.uniform(3, 1 / 3, 0.5)
    assert g.r == 3 and math.isclose(g.sum_p, 1.0) and math.isclose(g.eta, 0.5) and g.is_uniform
    assert not GuardParams(0.5, (0.1, 0.2)).is_uniform
    with pytest.raises(ValueError):
        GuardParams(1.2, (0.1,))
    with pytest.raises(ValueError):
        GuardParams(0.5, ())
    with pytest.raises(ValueError):
        DropShuffleParams(0.5, 0)
