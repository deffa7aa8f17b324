import pytest

from randsld.engine import (LimitExceeded, Limits, NonGroundSolution, count_run, solve, solve_loop)
from randsld.parser import ParseError, parse_program, parse_query, parse_term
from randsld.programs import commands_program, listing1_source
from randsld.rng import RandomStream
from randsld.strategies import DropShuffleStrategy, GuardStrategy, StandardStrategy
from randsld.terms import Clause, Program, Var, format_term

L1 = parse_program(listing1_source(3))


def first_answers(program, query, n, strategy=StandardStrategy(), seed=0):
    out = []
    for ans, _ in solve(program, parse_query(query), strategy, RandomStream(seed)):
        out.append({v.name: format_term(t) for v, t in ans.items()})
        if len(out) == n:
            break
    return out


def test_standard_order_is_depth_first_left_to_right():
    got = [a["X"] for a in first_answers(L1, "t(X)", 4)]
    assert got == ["[]", "[c1]", "[c1,c1]", "[c1,c1,c1]"]


def test_backtracking_through_all_alternatives():
    prog = parse_program("p(1). p(2). q(a). q(b). r(X, Y) :- p(X), q(Y).")
    got = [(a["X"], a["Y"]) for a in first_answers(prog, "r(X, Y)", 10)]
    assert got == [("1", "a"), ("1", "b"), ("2", "a"), ("2", "b")]


def test_shared_variables_and_failure():
    prog = parse_program("edge(a, b). edge(b, c). edge(c, d). "
                         "path(X, X). path(X, Z) :- edge(X, Y), path(Y, Z).")
    got = [a["Z"] for a in first_answers(prog, "path(a, Z)", 10)]
    assert got == ["a", "b", "c", "d"]
    assert first_answers(prog, "path(d, a)", 5) == []


def test_unknown_predicate_fails():
    assert first_answers(parse_program("p(1)."), "nope(X)", 3) == []


def test_answers_are_renamed_apart_from_query():
    prog = parse_program("id(X, X).")
    (ans,) = first_answers(prog, "id(Y, Z)", 1)
    assert ans["Y"] == ans["Z"]


def test_stats_counters():
    prog = parse_program("p(1). p(2). p(3).")
    runs = list(solve(prog, parse_query("p(X)")))
    assert [s.results for _, s in runs] == [1, 2, 3]
    assert runs[-1][1].steps == 1


def test_count_run():
    prog = parse_program("p(1). p(2). q(X) :- p(X). q(9).")
    assert count_run(prog, parse_query("q(X)")) == (3, 2)


def test_max_steps_limit():
    with pytest.raises(LimitExceeded) as info:
        count_run(L1, parse_query("t(X)"), limits=Limits(max_steps=50))
    assert info.value.reason == "max_steps"
    assert info.value.stats.steps == 50
    assert info.value.stats.results > 0


def test_max_depth_limit():
    with pytest.raises(LimitExceeded) as info:
        count_run(L1, parse_query("t(X)"), limits=Limits(max_depth=10))
    assert info.value.reason == "max_depth"


def test_solve_loop_counting_conventions():
    target = parse_term("[c1,c1]")
    st = solve_loop(L1, parse_query("t(X)"), target, StandardStrategy())
    assert (st.iterations, st.results) == (1, 2)
    inc = solve_loop(L1, parse_query("t(X)"), target, StandardStrategy(), count_inclusive=True)
    assert inc.results == 3


def test_solve_loop_restarts_until_hit():
    prog = commands_program(p_cont=0.5, p_steady=1 / 3)
    st = solve_loop(prog, parse_query("t(X)"), parse_term("[second]"), GuardStrategy(),
                    RandomStream(3))
    assert st.iterations >= 1 and st.master_seed == 3


def test_solve_loop_with_predicate_target_and_answer_var():
    prog = parse_program("pair(X, Y) :- guard(0.5), v(X), v(Y). v(1). v(2).")
    st = solve_loop(prog, parse_query("pair(A, B)"), lambda t: t == parse_term("2"),
                    GuardStrategy(), RandomStream(1), answer_var="B")
    assert st.iterations >= 1


def test_nonground_solution_is_an_error():
    prog = parse_program("p(_).")
    with pytest.raises(NonGroundSolution):
        solve_loop(prog, parse_query("p(X)"), parse_term("a"))


def test_nonground_target_rejected():
    with pytest.raises(ValueError):
        solve_loop(L1, parse_query("t(X)"), Var("Y"))


def test_query_without_variables_rejected():
    with pytest.raises(ValueError):
        solve_loop(L1, parse_query("t([])"), parse_term("[]"))


def test_variable_goals_rejected():
    with pytest.raises(ParseError):
        parse_program("p(X) :- q(X), X.")
    # built by hand, the engine refuses to call an integer
    clauses = parse_program("q(1).").clauses + (
        Clause(parse_term("p(X)"), (parse_term("q(X)"), Var("X"))),)
    with pytest.raises(TypeError):
        count_run(Program(clauses), parse_query("p(Y)"))


@pytest.mark.parametrize("strategy", [GuardStrategy(), DropShuffleStrategy(0.5)])
def test_same_seed_same_run(strategy):
    prog = commands_program(p_cont=0.5, p_steady=1 / 3)
    a = solve_loop(prog, parse_query("t(X)"), parse_term("[second,second]"), strategy, RandomStream(8))
    b = solve_loop(prog, parse_query("t(X)"), parse_term("[second,second]"), strategy, RandomStream(8))
    assert a == b


def test_guard_zero_blocks_clause():
    prog = parse_program("p(1) :- guard(0). p(2).")
    got = [a["X"] for a in first_answers(prog, "p(X)", 5, GuardStrategy())]
    assert got == ["2"]
