"""Rank-polymorphic array language with shape-indexed types.

Library surface: parse and print (`parser`, `printer`), the index theory
(`indices`), the static semantics (`check`), primitive operators (`prims`),
the type-driven evaluator (`eval`), and type erasure with its own evaluator
and the lockstep harness (`erase`).
"""

from .check import EMPTY_ENV, Env, ErrorKind, TypeCheckError, elaborate, types_equal
from .erase import bisim_run, erase_term, erase_type, erased_evaluate
from .eval import evaluate, step
from .parser import ParseError, parse_index, parse_term, parse_type
from .printer import print_index, print_term, print_type
from .prims import SIGNATURE, delta_apply, signature_lookup

__all__ = [
    "EMPTY_ENV",
    "Env",
    "ErrorKind",
    "ParseError",
    "SIGNATURE",
    "TypeCheckError",
    "bisim_run",
    "delta_apply",
    "elaborate",
    "erase_term",
    "erase_type",
    "erased_evaluate",
    "evaluate",
    "parse_index",
    "parse_term",
    "parse_type",
    "print_index",
    "print_term",
    "print_type",
    "signature_lookup",
    "step",
    "types_equal",
]
