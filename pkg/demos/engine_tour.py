"""Run the command-list generator under each clause-selection strategy."""

from randsld import parse_program, parse_query
from randsld.engine import Limits, solve, solve_loop
from randsld.parser import parse_term
from randsld.programs import commands_source
from randsld.rng import RandomStream
from randsld.strategies import DropShuffleStrategy, GuardStrategy, StandardStrategy
from randsld.terms import format_term

plain = parse_program(commands_source())
guarded = parse_program(commands_source(p_cont=0.5, p_steady=1 / 3))
query = parse_query("t(X)")

print("standard order, first five answers:")
for k, (ans, _) in enumerate(solve(plain, query, StandardStrategy(), limits=Limits(max_steps=200))):
    print("  ", format_term(next(iter(ans.values()))))
    if k == 4:
        break

print("\nguard strategy, three independent runs:")
for seed in range(3):
    answers = [format_term(next(iter(a.values()))) for a, _ in solve(guarded, query, GuardStrategy(),
                                                                      RandomStream(seed))]
    print(f"   seed {seed}: {answers}")

target = parse_term("[second, second]")
for name, program, strategy in [("guard", guarded, GuardStrategy()),
                                ("drop-and-shuffle p_d=0.6", plain, DropShuffleStrategy(0.6))]:
    stats = solve_loop(program, query, target, strategy, RandomStream(42))
    print(f"\n{name}: found [second,second] after {stats.iterations} runs, "
          f"{stats.results} other outputs, {stats.steps} steps")
