from .ast import (
    INF,
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
    depth,
    predicates,
    print_stl,
    walk,
)
from .parser import StlSyntaxError, parse_stl
from .robustness import (
    CHANNEL_MARGIN,
    EmptyWindowError,
    NonMonotoneTimeError,
    UnboundPredicateError,
    bind,
    explain,
    horizon,
    robustness,
    robustness_signal,
    scale_time,
    untimed,
)

__all__ = [
    "INF", "UNBOUNDED", "And", "Finally", "Formula", "Globally", "Iff", "Implies",
    "Interval", "Not", "Or", "Predicate", "Until", "depth", "predicates", "print_stl",
    "walk", "StlSyntaxError", "parse_stl", "CHANNEL_MARGIN", "EmptyWindowError",
    "NonMonotoneTimeError", "UnboundPredicateError", "bind", "explain", "horizon",
    "robustness", "robustness_signal", "scale_time", "untimed",
]
