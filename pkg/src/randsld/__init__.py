"""Randomized SLD resolution for test-case generation, with the Markov-chain
quantities that describe it."""

from .engine import LimitExceeded, Limits, NonGroundSolution, RunStats, count_run, solve, solve_loop
from .parser import ParseError, parse_program, parse_query, parse_term
from .rng import RandomStream, derive_seed
from .strategies import (
    DropShuffleParams,
    DropShuffleStrategy,
    GuardParams,
    GuardStrategy,
    StandardStrategy,
)
from .terms import Atom, Clause, Int, Program, Struct, Var, format_term
from .unify import Substitution, apply, rename_apart, unify

__version__ = "0.1.0"

__all__ = [
    "Atom", "Clause", "DropShuffleParams", "DropShuffleStrategy", "GuardParams",
    "GuardStrategy", "Int", "LimitExceeded", "Limits", "NonGroundSolution", "ParseError",
    "Program", "RandomStream", "RunStats", "StandardStrategy", "Struct", "Substitution",
    "Var", "apply", "count_run", "derive_seed", "format_term", "parse_program",
    "parse_query", "parse_term", "rename_apart", "solve", "solve_loop", "unify",
]
