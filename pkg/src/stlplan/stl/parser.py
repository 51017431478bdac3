"""Recursive-descent parser for the STL text syntax.

Grammar (binary operators left-associative, tightest first: not, and, or,
->, <->)::

    formula  := term (("and" | "or" | "->" | "<->") term)*
    term     := "not" term
              | ("F" | "G") interval? term
              | "(" formula "U" interval? formula ")"
              | "(" formula ")"
              | "in" "(" IDENT ")" | "holds" "(" IDENT ")"
    interval := "[" NUMBER "," (NUMBER | "inf") "]"

A missing interval means ``[0, inf]``.  ``F``/``G`` accept any term as their
operand, so both ``F[0,5] in(A)`` and ``F[0,5](in(A))`` are valid.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .ast import (
    UNBOUNDED,
    And,
    Finally,
    Formula,
    Globally,
    Iff,
    Implies,
    Interval,
    Not,
    Or,
    Predicate,
    Until,
)

KEYWORDS = {"and", "or", "not", "F", "G", "U", "in", "holds", "inf"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|->|[()\[\],])
    """,
    re.VERBOSE,
)

# binary operator precedence, loosest first
_LEVELS = (("<->", Iff), ("->", Implies), ("or", Or), ("and", And))


class StlSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        hint = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"line {line}, column {column}: {message}{hint}")


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "word", "op", "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise StlSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            newlines = m.group().count("\n")
            if newlines:
                line += newlines
                line_start = m.start() + m.group().rfind("\n") + 1
        else:
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _is(self, text: str) -> bool:
        return self.tok.kind in ("op", "word") and self.tok.text == text

    def _fail(self, expected, what=None):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise StlSyntaxError(what or f"unexpected {found}", t.line, t.column, expected)

    def _expect(self, text: str) -> Token:
        if not self._is(text):
            self._fail({text})
        t = self.tok
        self.i += 1
        return t

    def parse(self) -> Formula:
        f = self.formula()
        if self.tok.kind != "eof":
            self._fail({"and", "or", "->", "<->", "end of input"})
        return f

    def formula(self, level: int = 0) -> Formula:
        if level == len(_LEVELS):
            return self.term()
        op, node = _LEVELS[level]
        left = self.formula(level + 1)
        while self._is(op):
            self.i += 1
            left = node(left, self.formula(level + 1))
        return left

    def term(self) -> Formula:
        t = self.tok
        if self._is("not"):
            self.i += 1
            return Not(self.term())
        if self._is("F") or self._is("G"):
            self.i += 1
            interval = self.interval() if self._is("[") else UNBOUNDED
            arg = self.term()
            return Finally(interval, arg) if t.text == "F" else Globally(interval, arg)
        if self._is("in") or self._is("holds"):
            self.i += 1
            self._expect("(")
            if self.tok.kind != "word":
                self._fail({"IDENT"})
            name = self.tok.text
            self.i += 1
            self._expect(")")
            return Predicate(t.text, name)
        if self._is("("):
            self.i += 1
            inner = self.formula()
            if self._is("U"):
                self.i += 1
                interval = self.interval() if self._is("[") else UNBOUNDED
                right = self.formula()
                self._expect(")")
                return Until(interval, inner, right)
            if not self._is(")"):
                self._fail({")", "U", "and", "or", "->", "<->"})
            self.i += 1
            return inner
        self._fail({"not", "F", "G", "(", "in", "holds"})

    def interval(self) -> Interval:
        start = self._expect("[")
        lo = self.number(allow_inf=False)
        self._expect(",")
        hi = self.number(allow_inf=True)
        self._expect("]")
        try:
            return Interval(lo, hi)
        except ValueError as exc:
            raise StlSyntaxError(str(exc), start.line, start.column) from None

    def number(self, allow_inf: bool) -> float:
        t = self.tok
        if t.kind == "number":
            self.i += 1
            return float(t.text)
        if allow_inf and self._is("inf"):
            self.i += 1
            return math.inf
        self._fail({"NUMBER", "inf"} if allow_inf else {"NUMBER"})


def parse_stl(text: str) -> Formula:
    """Parse STL text into a formula tree.

    Raises :class:`StlSyntaxError` carrying line, column and the set of
    tokens that would have been accepted.  Predicate names are not checked
    here; see :func:`stlplan.stl.bind`.
    """
    return _Parser(text).parse()
