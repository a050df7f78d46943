"""SMT-LIB encoding of SSA traces and a subprocess client for the solver.

Registers are 32-bit bitvector constants, ``Mult64`` temporaries are 64-bit,
and memory versions are arrays from 32-bit addresses to 32-bit words.  Each
trace instruction becomes exactly one assertion, and ``r0`` is pinned to
zero.  Registers other than the inputs ``$1``/``$2`` that are read before
being written are replaced by the literal they hold at start-up, so the
formula agrees with the emulator about them.  Initial memory is left
unconstrained.

The solver is an external process fed the script on stdin (z3 by default,
overridable through ``Solver(path=...)`` or the ``MIPSDIFF_SOLVER``
environment variable).
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
from dataclasses import dataclass, field

from . import trace as T
from .emulator import initial_registers
from .words import MASK32

__all__ = [
    "Formula", "Fixed", "Unbound", "UNBOUND", "RegVal", "Soln", "SolverError",
    "ModelError", "Solver", "emit_formula", "parse_model", "parse_model_values",
    "parse_sexprs", "solve", "bv",
]

LOGIC = "QF_ABV"
SOLVER_ENV = "MIPSDIFF_SOLVER"
DEFAULT_TIMEOUT = 10.0


class SolverError(RuntimeError):
    """The solver process crashed, timed out, or said something unreadable."""


class ModelError(ValueError):
    """Malformed (get-model) output."""


# --------------------------------------------------------------------------
# s-expressions

_TOKEN_RE = re.compile(r'\s*(?:(;[^\n]*)|(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()";|]+))')


def parse_sexprs(text: str) -> list:
    """Parse SMT-LIB text into nested lists of atom strings."""
    stack: list[list] = [[]]
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ModelError(f"cannot tokenize near {text[pos:pos + 20]!r}")
        pos = m.end()
        comment, lp, rp, string, quoted, atom = m.groups()
        if comment is not None:
            continue
        if lp:
            stack.append([])
        elif rp:
            if len(stack) == 1:
                raise ModelError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            tok = string or atom or quoted
            if tok is None:
                continue
            if quoted:
                tok = quoted[1:-1]
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ModelError("unbalanced '('")
    return stack[0]


# --------------------------------------------------------------------------
# formula emission


def bv(value: int, width: int = 32) -> str:
    return f"(_ bv{value & ((1 << width) - 1)} {width})"


@dataclass
class Formula:
    declarations: list[str] = field(default_factory=list)
    assertions: list[str] = field(default_factory=list)

    @property
    def script(self) -> str:
        lines = ["(set-option :produce-models true)", f"(set-logic {LOGIC})"]
        lines += self.declarations
        lines += [f"(assert {a})" for a in self.assertions]
        lines += ["(check-sat)", "(get-model)"]
        return "\n".join(lines) + "\n"

    def __str__(self):
        return self.script


def _sort(v: T.Var) -> str:
    if v.is_memory:
        return "(Array (_ BitVec 32) (_ BitVec 32))"
    return f"(_ BitVec {v.width})"


def emit_formula(trace: T.Trace, initial: dict[str, int] | None = None) -> Formula:
    """Translate an SSA trace into declarations and one assertion per instruction.

    ``initial`` gives start-up values for non-input registers (defaults to the
    emulator's); names absent from it start at zero.
    """
    if not trace.ssa:
        raise ValueError("emit_formula needs an SSA trace (run transform first)")
    init = initial_registers() if initial is None else initial
    defined = {v for ins in trace for v in ins.defs()}
    declared: dict[str, T.Var] = {}

    def term(v: T.Var) -> str:
        if v == T.R0:
            return "r0"
        if v.version == 1 and v.name not in T.INPUTS and v not in defined:
            return bv(init.get(v.name, 0), v.width)
        declared.setdefault(str(v), v)
        return str(v)

    out = []
    for ins in trace:
        if isinstance(ins, (T.Add, T.Sub)):
            op = "bvadd" if isinstance(ins, T.Add) else "bvsub"
            rhs = f"({op} {term(ins.s)} {term(ins.t)})"
            out.append(f"(= {term(ins.d)} {rhs})")
        elif isinstance(ins, (T.Slt, T.Sltu)):
            op = "bvslt" if isinstance(ins, T.Slt) else "bvult"
            rhs = f"(ite ({op} {term(ins.s)} {term(ins.t)}) {bv(1)} {bv(0)})"
            out.append(f"(= {term(ins.d)} {rhs})")
        elif isinstance(ins, T.Const):
            out.append(f"(= {term(ins.d)} {bv(ins.value)})")
        elif isinstance(ins, T.Mult64):
            ext = "sign_extend" if ins.signed else "zero_extend"
            a, b = term(ins.s), term(ins.t)
            rhs = f"(bvmul ((_ {ext} 32) {a}) ((_ {ext} 32) {b}))"
            out.append(f"(= {term(ins.tmp)} {rhs})")
        elif isinstance(ins, (T.Low32, T.High32)):
            hi, lo = (31, 0) if isinstance(ins, T.Low32) else (63, 32)
            out.append(f"(= {term(ins.d)} ((_ extract {hi} {lo}) {term(ins.tmp)}))")
        elif isinstance(ins, (T.Quot, T.Rem)):
            kind = "div" if isinstance(ins, T.Quot) else "rem"
            op = ("bvs" if ins.signed else "bvu") + kind
            out.append(f"(= {term(ins.d)} ({op} {term(ins.s)} {term(ins.t)}))")
        elif isinstance(ins, T.Lw):
            addr = f"(bvadd {bv(ins.imm)} {term(ins.s)})"
            out.append(f"(= {term(ins.t)} (select {term(ins.mem)} {addr}))")
        elif isinstance(ins, T.Sw):
            addr = f"(bvadd {bv(ins.imm)} {term(ins.s)})"
            rhs = f"(store {term(ins.mem_in)} {addr} {term(ins.t)})"
            out.append(f"(= {term(ins.mem_out)} {rhs})")
        elif isinstance(ins, T.PathCond):
            eq = f"(= {term(ins.a)} {term(ins.b)})"
            out.append(eq if ins.rel is T.Rel.EQ else f"(not {eq})")
        else:
            raise ValueError(f"cannot encode {type(ins).__name__}; desugar first")

    decls = ["(declare-const r0 (_ BitVec 32))"]
    decls += [f"(declare-const {name} {_sort(v)})" for name, v in declared.items()]
    return Formula(decls, [f"(= r0 {bv(0)})"] + out)


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class Unbound:
    def __str__(self):
        return "Unbound"


UNBOUND = Unbound()


@dataclass(frozen=True)
class Fixed:
    value: int

    def __str__(self):
        return f"Fixed(0x{self.value:08x})"


RegVal = Fixed | Unbound


@dataclass(frozen=True)
class Soln:
    r1: RegVal = UNBOUND
    r2: RegVal = UNBOUND

    def inputs(self, default: int = 0) -> tuple[int, int]:
        """Concrete (r1, r2); unbound registers take ``default``."""
        return tuple(v.value if isinstance(v, Fixed) else default & MASK32 for v in (self.r1, self.r2))


_INPUT_NAME = re.compile(r"^r([12])(?:_1)?$")


def _literal(expr) -> int:
    if isinstance(expr, str):
        if expr.startswith("#x"):
            return int(expr[2:], 16)
        if expr.startswith("#b"):
            return int(expr[2:], 2)
    elif len(expr) == 3 and expr[0] == "_" and expr[1].startswith("bv"):
        return int(expr[1][2:])
    raise ModelError(f"not a bitvector literal: {expr!r}")


def _define_funs(text: str) -> list:
    forms = parse_sexprs(text)
    if len(forms) != 1 or not isinstance(forms[0], list):
        raise ModelError("expected a single parenthesized model")
    body = forms[0]
    if body and body[0] == "model":
        body = body[1:]
    for f in body:
        if not (isinstance(f, list) and len(f) == 5 and f[0] == "define-fun"):
            raise ModelError(f"unexpected model entry {f!r}")
    return body


def parse_model_values(text: str) -> dict[str, list]:
    """Every define-fun in a model: name -> (params, sort, body)."""
    return {f[1]: (f[2], f[3], f[4]) for f in _define_funs(text)}


def parse_model(text: str) -> Soln:
    found: dict[str, RegVal] = {}
    for _, name, params, _sort_, body in _define_funs(text):
        m = _INPUT_NAME.match(name)
        if m and not params:
            found[f"r{m.group(1)}"] = Fixed(_literal(body) & MASK32)
    return Soln(found.get("r1", UNBOUND), found.get("r2", UNBOUND))


# --------------------------------------------------------------------------
# solver process


@dataclass
class Solver:
    path: str | None = None
    timeout: float = DEFAULT_TIMEOUT
    args: tuple[str, ...] | None = None
    queries: int = 0

    def command(self) -> list[str]:
        path = self.path or os.environ.get(SOLVER_ENV) or "z3"
        exe = shutil.which(path)
        if exe is None:
            raise SolverError(f"solver binary {path!r} not found")
        args = self.args
        if args is None:
            args = ("-in", "-smt2") if os.path.basename(exe).startswith("z3") else ()
        return [exe, *args]

    def check(self, script: str) -> tuple[str, str | None]:
        """Run one script; return ("sat", model_text) or ("unsat", None)."""
        self.queries += 1
        cmd = self.command()
        try:
            proc = subprocess.run(cmd, input=script, capture_output=True, text=True,
                                  timeout=self.timeout)
        except subprocess.TimeoutExpired as e:
            raise SolverError(f"solver timed out after {self.timeout}s") from e
        except OSError as e:
            raise SolverError(f"cannot start solver: {e}") from e
        out = proc.stdout.strip()
        status, _, rest = out.partition("\n")
        status = status.strip()
        if status == "unsat":
            return "unsat", None
        if status == "sat" and "(error" not in rest:
            return "sat", rest
        detail = (out or proc.stderr.strip())[:500]
        raise SolverError(f"unexpected solver response (exit {proc.returncode}): {detail}")


def solve(trace: T.Trace, solver: Solver | None = None, initial: dict[str, int] | None = None) -> Soln | None:
    """Solve the trace's path; None when it is unsatisfiable."""
    solver = solver or Solver()
    status, model = solver.check(emit_formula(trace, initial).script)
    if status == "unsat":
        return None
    try:
        return parse_model(model)
    except ModelError as e:
        raise SolverError(f"unreadable model: {e}") from e
