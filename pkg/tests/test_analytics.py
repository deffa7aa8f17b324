from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from randsld import analytics as an
from randsld.strategies import DropShuffleParams, GuardParams

G = GuardParams.uniform(3, 1 / 3, 0.5)
D = DropShuffleParams(0.5, 3)


def test_guard_expectations_reference_point():
    assert an.guard_expectations(G) == pytest.approx((2.0, 8.0))


@pytest.mark.parametrize("p_c", [0.0, 0.3, 0.7])
def test_guard_expectations_closed_form(p_c):
    g = GuardParams(p_c, (0.1, 0.2, 0.3))
    s = 0.6
    eo, en = an.guard_expectations(g)
    assert eo == pytest.approx(s / (1 - p_c * s))
    assert en == pytest.approx((3 + s) / (1 - p_c * s))


def test_guard_expectations_trivial_cases():
    assert an.guard_expectations(GuardParams(0.0, (0.4, 0.4))) == pytest.approx((0.8, 2.8))
    assert an.guard_expectations(GuardParams(0.5, (0.0, 0.0, 0.0))) == (0.0, 3.0)


def test_guard_validity():
    with pytest.raises(an.ValidityError) as info:
        an.guard_expectations(GuardParams.uniform(1, 1.0, 1.0))
    assert len(info.value.reasons) == 2
    assert an.guard_conditions(G) == []


def test_expectation_by_series():
    # each recursion level multiplies the expected outputs by p_c * sum_p
    g = GuardParams(0.4, (0.2, 0.5, 0.1))
    series = sum(g.sum_p * (g.p_c * g.sum_p) ** k for k in range(200))
    assert an.guard_expectations(g)[0] == pytest.approx(series)


def test_block_reach():
    assert an.block_reach_prob((2,), G, from_root=True) == pytest.approx(1 / 12)
    assert an.block_reach_prob((), G) == 1.0
    assert an.block_reach_prob((1, 2), G) == pytest.approx((0.5 / 3) ** 2)
    with pytest.raises(ValueError):
        an.block_reach_prob((4,), G)


def test_hitting_reference_values():
    assert an.guard_hitting_time((), 2, G) == pytest.approx(11 / 3)
    assert an.guard_hitting_time((1,), 1, G) == pytest.approx(122 / 3)


@given(st.lists(st.integers(1, 3), max_size=4), st.integers(1, 3),
       st.floats(0.05, 0.9), st.floats(0.05, 0.95))
def test_hitting_closed_form_matches_recursive(word, i, p, p_c):
    g = GuardParams.uniform(3, p, p_c)
    if an.hitting_conditions(g) or an.guard_conditions(g):
        return
    a = an.guard_hitting_time(word, i, g)
    b = an.guard_hitting_time_recursive(word, i, g)
    assert a == pytest.approx(b, rel=1e-10)


def test_hitting_requires_uniform():
    with pytest.raises(an.ValidityError):
        an.guard_hitting_time((1,), 1, GuardParams(0.5, (0.1, 0.2, 0.3)))


def test_leave_upward_time():
    g = an.guard_derived(G)
    assert an.guard_U(1, G) == pytest.approx(3 * g.delta)
    assert an.guard_U(4, G) == 0.0


def test_guard_derived():
    d = an.guard_derived(G)
    assert d.C == pytest.approx(8.0) and d.EO == pytest.approx(2.0)
    assert d.nu == pytest.approx(1 / 6)
    assert d.delta == pytest.approx(1 + (1 / 3) * (1 + 0.5 * 8))


# -- drop and shuffle --


def test_ds_constant_reference():
    assert an.ds_constant(D) == pytest.approx(8.0)
    assert an.ds_constant(DropShuffleParams(1.0, 3)) == 1.0


def test_ds_constant_divergence():
    c = an.ds_constant(DropShuffleParams(0.3, 3))
    assert isinstance(c, an.Diverges) and "diverges" in str(c)
    assert isinstance(an.ds_constant(DropShuffleParams(0.0, 1)), an.Diverges)


def test_ds_constant_exact_rational():
    # same value in exact rational arithmetic at p_d = 3/5, r = 2
    pd = Fraction(3, 5)
    k = 1 - pd
    exact = (1 + 2 * k) / (1 - 2 * k * k)
    assert an.ds_constant(DropShuffleParams(0.6, 2)) == pytest.approx(float(exact), rel=1e-14)


@pytest.mark.parametrize("l,q", [(0, 0.5), (1, 0.875), (2, 0.96875), (3, 0.9921875)])
def test_q_values(l, q):
    assert an.ds_q(l, 0.5) == q


def test_q_edges():
    assert an.ds_q(2, 1.0) == 1.0
    assert an.ds_q(5, 0.0) == 0.0
    with pytest.raises(ValueError):
        an.ds_q(-1, 0.5)


def test_ds_recursion_forms_agree():
    for l in range(12):
        assert an.ds_h(l, D) == pytest.approx(an.ds_h_iterated(l, D), rel=1e-12)
        assert an.ds_h(l, D) == pytest.approx(an.ds_h_closed(l, D), rel=1e-12)


def test_printed_hitting_form_offset():
    # the expanded expression exceeds the recursion by exactly p_d
    for pd in (0.5, 0.6, 0.8):
        p = DropShuffleParams(pd, 3)
        for l in range(11):
            gap = an.ds_hitting_time_closed(l, p) - an.ds_hitting_time(l, p)
            assert gap == pytest.approx(pd, abs=1e-12 * an.ds_hitting_time(l, p) + 1e-9)


def test_ds_reference_values():
    assert an.ds_derived(D).h0 == 4.375
    assert [an.ds_hitting_time(l, D) for l in range(3)] == pytest.approx([9.75, 47.0, 208.75])
    assert [an.ds_hitting_time_exact(l, D) for l in range(4)] == pytest.approx([12.75, 62.5, 274.25, 1134.0])
    assert an.ds_g(0, D) == 5.875


def test_ds_g_unit_drop_limit():
    # with p_d close to 1 every run is one root step followed by termination
    p = DropShuffleParams(0.999999, 3)
    assert an.ds_g(0, p) == pytest.approx(1.0, abs=1e-5)


def test_ds_validity():
    with pytest.raises(an.ValidityError):
        an.ds_derived(DropShuffleParams(0.3, 3))
    with pytest.raises(an.ValidityError):
        an.ds_g(1, DropShuffleParams(1.0, 3))
    assert an.ds_conditions(D) == []


@given(st.floats(0.45, 0.99), st.integers(0, 6))
def test_hitting_time_grows_like_inverse_miss(pd, l):
    p = DropShuffleParams(pd, 3)
    t = an.ds_hitting_time_exact(l, p)
    assert np.isfinite(t)
    assert t >= 1 / (1 - pd) ** (2 * l + 1) - 1
