"""Formula tree for signal temporal logic plus its canonical printer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

INF = math.inf


@dataclass(frozen=True)
class Interval:
    lo: float = 0.0
    hi: float = INF

    def __post_init__(self):
        if not (math.isfinite(self.lo) and self.lo >= 0):
            raise ValueError(f"interval lower bound must be finite and >= 0, got {self.lo}")
        if math.isnan(self.hi) or self.hi < self.lo:
            raise ValueError(f"interval [{self.lo}, {self.hi}] has hi < lo")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.hi)

    def __str__(self) -> str:
        return f"[{_num(self.lo)},{_num(self.hi)}]"


UNBOUNDED = Interval(0.0, INF)


@dataclass(frozen=True)
class Predicate:
    """Atomic proposition.

    ``kind`` is ``"in"`` (robot inside a labeled region, valued by signed
    distance) or ``"holds"`` (a derived boolean channel such as key possession).
    """

    kind: str
    name: str

    def __post_init__(self):
        if self.kind not in ("in", "holds"):
            raise ValueError(f"unknown predicate kind {self.kind!r}")

    def __str__(self) -> str:
        return f"{self.kind}({self.name})"


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self) -> str:
        return f"not {self.arg}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} or {self.right})"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} <-> {self.right})"


@dataclass(frozen=True)
class Finally:
    interval: Interval
    arg: "Formula"

    def __str__(self) -> str:
        return f"F{self.interval} {self.arg}"


@dataclass(frozen=True)
class Globally:
    interval: Interval
    arg: "Formula"

    def __str__(self) -> str:
        return f"G{self.interval} {self.arg}"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} U{self.interval} {self.right})"


Formula = Union[Predicate, Not, And, Or, Implies, Iff, Finally, Globally, Until]
BINARY = (And, Or, Implies, Iff)
TEMPORAL = (Finally, Globally, Until)


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf"
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def print_stl(f: Formula) -> str:
    """Canonical text form; ``parse_stl(print_stl(f)) == f``."""
    return str(f)


def children(f: Formula) -> tuple:
    if isinstance(f, Predicate):
        return ()
    if isinstance(f, (Not, Finally, Globally)):
        return (f.arg,)
    return (f.left, f.right)


def walk(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def predicates(f: Formula) -> set:
    return {node for node in walk(f) if isinstance(node, Predicate)}


def depth(f: Formula) -> int:
    return 1 + max((depth(c) for c in children(f)), default=0)
