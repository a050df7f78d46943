"""Concolic disequivalence checking for a small MIPS subset.

Typical use::

    from mipsdiff import assemble, compare

    verdict = compare(assemble(src1), assemble(src2))
"""

from .assembler import AssemblyError, assemble, assemble_file, decode, encode
from .emulator import Done, Error, ErrorKind, NotDone, run
from .engine import (
    Disequivalent,
    EngineError,
    PossiblyEquivalent,
    compare,
    compare_outcomes,
    outcome_of,
)
from .smt import Solver, SolverError, emit_formula, solve
from .trace import transform

__all__ = [
    "AssemblyError", "assemble", "assemble_file", "decode", "encode",
    "Done", "Error", "ErrorKind", "NotDone", "run",
    "Disequivalent", "EngineError", "PossiblyEquivalent", "compare",
    "compare_outcomes", "outcome_of",
    "Solver", "SolverError", "emit_formula", "solve", "transform",
]

__version__ = "0.1.0"
