"""knotpi: knot diagrams as pi-calculus processes.

Compiles Dowker-Thistlethwaite codes into polyadic pi-calculus terms,
runs their reduction semantics, decides bounded weak barbed bisimulation,
applies Reidemeister moves as context rewrites, and checks spatial-logic
formulae against encoded knots.
"""

__version__ = "0.1.0"

from .terms import (
    Name, NameUniverse, Term, Abstraction, DefEnv, EMPTY_ENV, NIL,
    sum_, input_, output_, bound_output, prefix, in_proc, out_proc,
    par, new, call, rec, free_names, substitute, alpha_equal,
)
from .canon import canonical_form, struct_congruent
from .syntax import parse_process, pretty
from . import errors

__all__ = [
    "Name", "NameUniverse", "Term", "Abstraction", "DefEnv", "EMPTY_ENV",
    "NIL", "sum_", "input_", "output_", "bound_output", "prefix", "in_proc",
    "out_proc", "par", "new", "call", "rec", "free_names", "substitute",
    "alpha_equal", "canonical_form", "struct_congruent", "parse_process",
    "pretty", "errors", "__version__",
]
