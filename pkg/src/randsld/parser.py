"""Reader for the Prolog subset.

Supported: facts and rules, ``,`` conjunction, ``;`` disjunction at the top
level of a body (split into one clause per disjunct), list sugar, integers,
quoted atoms, ``%`` line comments and ``/* */`` block comments.  A goal
``guard(P)`` written first in a (disjunct) body becomes the clause's guard
probability.
"""

from __future__ import annotations

import re
from typing import NamedTuple

from .terms import (
    NIL,
    Atom,
    Clause,
    Int,
    INT64_MAX,
    INT64_MIN,
    Program,
    Struct,
    Term,
    Var,
    make_list,
)

GUARD_FUNCTOR = "guard"


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class Token(NamedTuple):
    kind: str  # var atom qatom int float punct end eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lcomment>%[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
  | (?P<qatom>'(?:[^'\\]|\\.)*')
  | (?P<neck>:-)
  | (?P<end>\.(?=\s|%|$))
  | (?P<punct>[()\[\],|;])
  | (?P<sym>[+\-*/\\^<>=~:.?@#&$]+)
    """,
    re.VERBOSE | re.DOTALL,
)

# tokens after which a '-' immediately followed by digits is a sign
_SIGN_CONTEXT = {"(", ",", "[", "|", ":-", ";", None}


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    prev_text = None
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind in ("ws", "lcomment", "bcomment"):
            pass
        elif (
            kind == "sym"
            and value == "-"
            and prev_text in _SIGN_CONTEXT
            and m.end() < len(text)
            and text[m.end()].isdigit()
        ):
            m2 = re.compile(r"\d+\.\d+(?:[eE][+-]?\d+)?|\d+").match(text, m.end())
            num = m2.group()
            tokens.append(Token("float" if "." in num else "int", "-" + num, line, col))
            prev_text = "-" + num
            newlines = 0
            pos = m2.end()
            continue
        else:
            if kind == "sym":
                kind = "atom"
            elif kind == "neck":
                kind = "punct"
            tokens.append(Token(kind, value, line, col))
            prev_text = value if kind in ("punct",) else "<term>"
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


class _Reader:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.varmap: dict[str, Var] = {}
        self.anon = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind not in ("punct", "end"):
            shown = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {shown!r}")
        return self.advance()

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "end") and self.tok.text == text

    # -- terms --

    def term(self) -> Term:
        tok = self.tok
        if tok.kind == "var":
            self.advance()
            if tok.text == "_":
                self.anon += 1
                return Var(f"_G{self.anon}")
            v = self.varmap.get(tok.text)
            if v is None:
                v = self.varmap[tok.text] = Var(tok.text)
            return v
        if tok.kind == "int":
            self.advance()
            value = int(tok.text)
            if not INT64_MIN <= value <= INT64_MAX:
                self.error(f"integer {tok.text} outside signed 64-bit range", tok)
            return Int(value)
        if tok.kind == "float":
            self.error("floating point numbers are only allowed in guard(P)", tok)
        if tok.kind in ("atom", "qatom"):
            self.advance()
            name = _unquote(tok.text) if tok.kind == "qatom" else tok.text
            if self.at("(") and self.tok.col == tok.col + len(tok.text) and self.tok.line == tok.line:
                self.advance()
                args = [self.term()]
                while self.at(","):
                    self.advance()
                    args.append(self.term())
                self.expect(")")
                return Struct(name, tuple(args))
            return Atom(name)
        if self.at("["):
            return self.list_term()
        if self.at("("):
            self.advance()
            t = self.term()
            self.expect(")")
            return t
        self.error(f"unexpected {tok.text or 'end of input'!r}")

    def list_term(self) -> Term:
        self.expect("[")
        if self.at("]"):
            self.advance()
            return NIL
        items = [self.term()]
        while self.at(","):
            self.advance()
            items.append(self.term())
        tail = NIL
        if self.at("|"):
            self.advance()
            tail = self.term()
        self.expect("]")
        return make_list(items, tail)

    # -- clauses --

    def goal(self):
        """A body goal; returns ('guard', p) for guard annotations."""
        tok = self.tok
        if tok.kind == "atom" and tok.text == GUARD_FUNCTOR and self.tokens[self.i + 1].text == "(":
            nxt = self.tokens[self.i + 2]
            if nxt.kind in ("float", "int"):
                self.i += 3
                p = float(nxt.text)
                self.expect(")")
                if not 0.0 <= p <= 1.0:
                    self.error(f"guard probability {nxt.text} outside [0, 1]", nxt)
                return ("guard", p, tok)
        t = self.term()
        if isinstance(t, (Var, Int)):
            self.error("goal must be an atom or compound term", tok)
        return t

    def conjunction(self) -> tuple:
        goals = [self.goal()]
        while self.at(","):
            self.advance()
            goals.append(self.goal())
        guard = None
        if isinstance(goals[0], tuple):
            guard = goals.pop(0)[1]
        for g in goals:
            if isinstance(g, tuple):
                self.error("guard(P) must be the first goal of a clause body", g[2])
        return guard, tuple(goals)

    def clause_group(self) -> list[Clause]:
        self.varmap = {}
        head_tok = self.tok
        head = self.term()
        if not isinstance(head, (Atom, Struct)):
            self.error("clause head must be an atom or compound term", head_tok)
        bodies = [(None, ())]
        if self.at(":-"):
            self.advance()
            bodies = [self.conjunction()]
            while self.at(";"):
                self.advance()
                bodies.append(self.conjunction())
        self.expect(".")
        return [Clause(head, body, guard) for guard, body in bodies]


def parse_program(text: str) -> Program:
    reader = _Reader(text)
    clauses: list[Clause] = []
    while reader.tok.kind != "eof":
        clauses.extend(reader.clause_group())
    return Program(tuple(clauses))


def parse_term(text: str) -> Term:
    reader = _Reader(text)
    t = reader.term()
    if reader.at("."):
        reader.advance()
    if reader.tok.kind != "eof":
        reader.error(f"trailing input {reader.tok.text!r}")
    return t


def parse_query(text: str) -> tuple:
    """A conjunctive query such as ``command(H), t(T).``; returns the goals."""
    reader = _Reader(text)
    goals = [reader.term()]
    while reader.at(","):
        reader.advance()
        goals.append(reader.term())
    if reader.at("."):
        reader.advance()
    if reader.tok.kind != "eof":
        reader.error(f"trailing input {reader.tok.text!r}")
    for g in goals:
        if isinstance(g, (Var, Int)):
            raise ParseError("query goals must be atoms or compound terms", 1, 1)
    return tuple(goals)
