"""Symbolic traces and the lowering pipeline that prepares them for the solver.

A trace is a straight-line list of symbolic instructions recorded by the
emulator: assignments and path conditions.  ``transform`` runs the four
lowering phases in order::

    desugar -> simplify -> trim(depth) -> ssa_convert

Operands are :class:`Var` objects.  Raw traces use unversioned names (``r3``,
``hi``, ``lo``, ``mem``, ``tmp``); after SSA conversion each name carries a
version (``r3_1``, ``mem_2``).  ``r0`` is never versioned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, ClassVar, Iterable

from .words import MASK32, MASK64, s32

__all__ = [
    "Var", "reg", "R0", "HI", "LO", "MEM", "TMP", "INPUTS", "Rel",
    "SymInstr", "Add", "Sub", "Slt", "Sltu", "Mult", "Multu", "Div", "Divu",
    "Mfhi", "Mflo", "Const", "Lw", "Sw", "Jalr", "PathCond",
    "Mult64", "Low32", "High32", "Quot", "Rem",
    "Trace", "desugar", "simplify", "trim", "ssa_convert", "transform",
    "is_ssa_form", "evaluate", "Evaluation",
]


@dataclass(frozen=True, order=True)
class Var:
    name: str
    version: int = 0

    def __str__(self):
        return f"{self.name}_{self.version}" if self.version else self.name

    def __repr__(self):
        return str(self)

    @property
    def is_memory(self) -> bool:
        return self.name == "mem"

    @property
    def width(self) -> int:
        return 64 if self.name == "tmp" else 32


def reg(i: int) -> Var:
    return Var(f"r{i}")


R0 = reg(0)
HI = Var("hi")
LO = Var("lo")
MEM = Var("mem")
TMP = Var("tmp")

# names whose version 1 is the program input rather than a fresh definition
INPUTS = frozenset({"r1", "r2", "mem"})


class Rel(enum.Enum):
    EQ = "=="
    NE = "!="

    def negate(self) -> "Rel":
        return Rel.NE if self is Rel.EQ else Rel.EQ


class SymInstr:
    """Base for trace instructions.  DEFS/USES name the Var-valued fields."""

    DEFS: ClassVar[tuple[str, ...]] = ()
    USES: ClassVar[tuple[str, ...]] = ()
    RAW_ONLY: ClassVar[bool] = False
    DESUGARED_ONLY: ClassVar[bool] = False

    def defs(self) -> list[Var]:
        return [getattr(self, f) for f in self.DEFS]

    def uses(self) -> list[Var]:
        return [getattr(self, f) for f in self.USES]

    def rename(self, use: Callable[[Var], Var], define: Callable[[Var], Var]):
        # uses are renamed before defs so Add(r1, r1, r2) reads the old r1
        changes = {f: use(getattr(self, f)) for f in self.USES}
        changes.update({f: define(getattr(self, f)) for f in self.DEFS})
        return replace(self, **changes)


def _binop(name: str, sym: str, doc: str | None = None):
    @dataclass(frozen=True)
    class _Op(SymInstr):
        d: Var
        s: Var
        t: Var
        DEFS: ClassVar = ("d",)
        USES: ClassVar = ("s", "t")

        def __str__(self):
            return f"{self.d} <- {self.s} {sym} {self.t}"

    _Op.__name__ = _Op.__qualname__ = name
    _Op.__doc__ = doc
    return _Op


Add = _binop("Add", "+")
Sub = _binop("Sub", "-")
Slt = _binop("Slt", "<s", "d <- 1 if s < t (signed) else 0")
Sltu = _binop("Sltu", "<u", "d <- 1 if s < t (unsigned) else 0")


def _hilo(name: str, sym: str):
    @dataclass(frozen=True)
    class _Op(SymInstr):
        s: Var
        t: Var
        USES: ClassVar = ("s", "t")
        RAW_ONLY: ClassVar = True

        def __str__(self):
            return f"hi:lo <- {self.s} {sym} {self.t}"

    _Op.__name__ = _Op.__qualname__ = name
    return _Op


Mult = _hilo("Mult", "*s")
Multu = _hilo("Multu", "*u")
Div = _hilo("Div", "/s")
Divu = _hilo("Divu", "/u")


@dataclass(frozen=True)
class Mfhi(SymInstr):
    d: Var
    DEFS: ClassVar = ("d",)
    RAW_ONLY: ClassVar = True

    def __str__(self):
        return f"{self.d} <- hi"


@dataclass(frozen=True)
class Mflo(SymInstr):
    d: Var
    DEFS: ClassVar = ("d",)
    RAW_ONLY: ClassVar = True

    def __str__(self):
        return f"{self.d} <- lo"


@dataclass(frozen=True)
class Const(SymInstr):
    d: Var
    value: int
    DEFS: ClassVar = ("d",)

    def __str__(self):
        return f"{self.d} <- {self.value}"


@dataclass(frozen=True)
class Lw(SymInstr):
    t: Var
    imm: int
    s: Var
    mem: Var = MEM
    DEFS: ClassVar = ("t",)
    USES: ClassVar = ("s", "mem")

    def __str__(self):
        return f"{self.t} <- {self.mem}[{self.s} + {self.imm}]"


@dataclass(frozen=True)
class Sw(SymInstr):
    t: Var
    imm: int
    s: Var
    mem_in: Var = MEM
    mem_out: Var = MEM
    DEFS: ClassVar = ("mem_out",)
    USES: ClassVar = ("t", "s", "mem_in")

    def __str__(self):
        return f"{self.mem_out} <- {self.mem_in}[{self.s} + {self.imm} := {self.t}]"


@dataclass(frozen=True)
class Jalr(SymInstr):
    """Records the return address written to $31; the jump itself is concrete."""

    pc: int
    RAW_ONLY: ClassVar = True

    def __str__(self):
        return f"r31 <- {self.pc} (jalr)"


@dataclass(frozen=True)
class PathCond(SymInstr):
    """Branch outcome ``a rel b``.  ``pc`` is the branch address, kept for
    bookkeeping only; it plays no part in the formula."""

    rel: Rel
    a: Var
    b: Var
    pc: int | None = None
    USES: ClassVar = ("a", "b")

    def negate(self) -> "PathCond":
        return replace(self, rel=self.rel.negate())

    def key(self) -> tuple:
        return (self.pc, self.rel.value, str(self.a), str(self.b))

    def __str__(self):
        return f"{self.a} {self.rel.value} {self.b}"


@dataclass(frozen=True)
class Mult64(SymInstr):
    tmp: Var
    s: Var
    t: Var
    signed: bool = True
    DEFS: ClassVar = ("tmp",)
    USES: ClassVar = ("s", "t")
    DESUGARED_ONLY: ClassVar = True

    def __str__(self):
        return f"{self.tmp} <- {self.s} *{'s' if self.signed else 'u'}64 {self.t}"


@dataclass(frozen=True)
class Low32(SymInstr):
    d: Var
    tmp: Var
    DEFS: ClassVar = ("d",)
    USES: ClassVar = ("tmp",)
    DESUGARED_ONLY: ClassVar = True

    def __str__(self):
        return f"{self.d} <- {self.tmp}[31:0]"


@dataclass(frozen=True)
class High32(SymInstr):
    d: Var
    tmp: Var
    DEFS: ClassVar = ("d",)
    USES: ClassVar = ("tmp",)
    DESUGARED_ONLY: ClassVar = True

    def __str__(self):
        return f"{self.d} <- {self.tmp}[63:32]"


@dataclass(frozen=True)
class Quot(SymInstr):
    d: Var
    s: Var
    t: Var
    signed: bool = True
    DEFS: ClassVar = ("d",)
    USES: ClassVar = ("s", "t")
    DESUGARED_ONLY: ClassVar = True

    def __str__(self):
        return f"{self.d} <- {self.s} /{'s' if self.signed else 'u'} {self.t}"


@dataclass(frozen=True)
class Rem(SymInstr):
    d: Var
    s: Var
    t: Var
    signed: bool = True
    DEFS: ClassVar = ("d",)
    USES: ClassVar = ("s", "t")
    DESUGARED_ONLY: ClassVar = True

    def __str__(self):
        return f"{self.d} <- {self.s} %{'s' if self.signed else 'u'} {self.t}"


@dataclass(frozen=True)
class Trace:
    instrs: tuple = ()
    ssa: bool = False

    def __post_init__(self):
        if not isinstance(self.instrs, tuple):
            object.__setattr__(self, "instrs", tuple(self.instrs))

    def __iter__(self):
        return iter(self.instrs)

    def __len__(self):
        return len(self.instrs)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trace(self.instrs[i], self.ssa)
        return self.instrs[i]

    @property
    def path_conditions(self) -> list[PathCond]:
        return [i for i in self.instrs if isinstance(i, PathCond)]

    @property
    def assignments(self) -> list[SymInstr]:
        return [i for i in self.instrs if not isinstance(i, PathCond)]

    def dump(self) -> str:
        return "\n".join(str(i) for i in self.instrs)


def desugar(trace: Trace) -> Trace:
    out = []
    for ins in trace:
        if isinstance(ins, (Mult, Multu)):
            out += [
                Mult64(TMP, ins.s, ins.t, signed=isinstance(ins, Mult)),
                Low32(LO, TMP),
                High32(HI, TMP),
            ]
        elif isinstance(ins, (Div, Divu)):
            signed = isinstance(ins, Div)
            out += [Quot(LO, ins.s, ins.t, signed), Rem(HI, ins.s, ins.t, signed)]
        elif isinstance(ins, Mfhi):
            out.append(Add(ins.d, HI, R0))
        elif isinstance(ins, Mflo):
            out.append(Add(ins.d, LO, R0))
        elif isinstance(ins, Jalr):
            out.append(Const(reg(31), ins.pc))
        else:
            out.append(ins)
    return Trace(out, trace.ssa)


def simplify(trace: Trace) -> Trace:
    """Drop path conditions that are syntactically forced (``a == a``)."""
    return Trace([i for i in trace if not (isinstance(i, PathCond) and i.a == i.b)], trace.ssa)


def trim(trace: Trace, depth: int) -> Trace:
    """Longest prefix holding at most ``depth`` path conditions."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    seen = 0
    for n, ins in enumerate(trace):
        if isinstance(ins, PathCond):
            if seen == depth:
                return trace[:n]
            seen += 1
    return trace


def ssa_convert(trace: Trace) -> Trace:
    """Single pass renaming to static single assignment form.

    Version 1 of every name is its value at trace start.  A definition mints
    ``last + 1``, except that a non-input name whose initial value is never
    read takes version 1 on its first write.
    """
    if trace.ssa:
        return trace
    last: dict[str, int] = {}

    def use(v: Var) -> Var:
        if v == R0:
            return v
        version = last.setdefault(v.name, 1)
        return Var(v.name, version)

    def define(v: Var) -> Var:
        if v == R0:
            return v
        if v.name not in last and v.name not in INPUTS:
            version = 1
        else:
            version = last.get(v.name, 1) + 1
        last[v.name] = version
        return Var(v.name, version)

    out = []
    for ins in trace:
        if ins.RAW_ONLY:
            raise ValueError(f"ssa_convert needs a desugared trace, found {type(ins).__name__}")
        out.append(ins.rename(use, define))
    return Trace(out, ssa=True)


def transform(trace: Trace, depth: int) -> Trace:
    return ssa_convert(trim(simplify(desugar(trace)), depth))


def is_ssa_form(trace: Trace) -> bool:
    """Each variable defined once, and every use names the latest prior version."""
    defined: set[Var] = set()
    latest: dict[str, int] = {}
    for ins in trace:
        for v in ins.uses():
            if v == R0:
                continue
            if v.version < 1 or v.version != latest.setdefault(v.name, 1):
                return False
        for v in ins.defs():
            if v == R0:
                continue
            if v in defined:
                return False
            if v.version == 1:
                if v.name in latest or v.name in INPUTS:
                    return False
            elif v.version != latest.get(v.name, 1) + 1:
                return False
            defined.add(v)
            latest[v.name] = v.version
    return True


# --------------------------------------------------------------------------
# concrete interpreter, used to cross-check traces against the emulator


@dataclass
class Evaluation:
    values: dict          # str(var) -> value (dict for memory)
    registers: dict       # base name -> last value written or read
    conditions: list      # truth value of each PathCond, in order


def evaluate(trace: Trace | Iterable[SymInstr], r1: int, r2: int, initial: dict | None = None) -> Evaluation:
    """Run a trace concretely with the given inputs.

    ``initial`` maps base names (``"r30"``, ``"hi"``) to their starting value;
    anything absent starts at 0, memory starts all-zero.
    """
    init = {"r1": r1 & MASK32, "r2": r2 & MASK32, **(initial or {})}
    values: dict = {}
    regs: dict = {}

    def get(v: Var):
        if v == R0:
            return 0
        key = str(v)
        if key not in values:
            values[key] = {} if v.is_memory else init.get(v.name, 0)
        regs[v.name] = values[key]
        return values[key]

    def put(v: Var, x):
        if v == R0:
            return
        if not isinstance(x, dict):
            x &= MASK64 if v.width == 64 else MASK32
        values[str(v)] = x
        regs[v.name] = x

    conds = []
    for ins in trace:
        if isinstance(ins, Add):
            put(ins.d, get(ins.s) + get(ins.t))
        elif isinstance(ins, Sub):
            put(ins.d, get(ins.s) - get(ins.t))
        elif isinstance(ins, Slt):
            put(ins.d, int(s32(get(ins.s)) < s32(get(ins.t))))
        elif isinstance(ins, Sltu):
            put(ins.d, int(get(ins.s) < get(ins.t)))
        elif isinstance(ins, Const):
            put(ins.d, ins.value)
        elif isinstance(ins, Mult64):
            a, b = get(ins.s), get(ins.t)
            if ins.signed:
                a, b = s32(a), s32(b)
            put(ins.tmp, a * b)
        elif isinstance(ins, Low32):
            put(ins.d, get(ins.tmp))
        elif isinstance(ins, High32):
            put(ins.d, get(ins.tmp) >> 32)
        elif isinstance(ins, (Quot, Rem)):
            a, b = get(ins.s), get(ins.t)
            if ins.signed:
                a, b = s32(a), s32(b)
            q = abs(a) // abs(b) * (1 if (a < 0) == (b < 0) else -1)
            put(ins.d, q if isinstance(ins, Quot) else a - q * b)
        elif isinstance(ins, Lw):
            mem = get(ins.mem)
            put(ins.t, mem.get((get(ins.s) + ins.imm) & MASK32, 0))
        elif isinstance(ins, Sw):
            mem = dict(get(ins.mem_in))
            mem[(get(ins.s) + ins.imm) & MASK32] = get(ins.t)
            put(ins.mem_out, mem)
        elif isinstance(ins, PathCond):
            holds = get(ins.a) == get(ins.b)
            conds.append(holds if ins.rel is Rel.EQ else not holds)
        else:
            raise ValueError(f"cannot evaluate raw {type(ins).__name__}; desugar first")
    return Evaluation(values, regs, conds)
