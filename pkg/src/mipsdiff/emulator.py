"""Instrumented MIPS emulator.

Every executed instruction goes through fetch, decode, execute, and is also
turned into its symbolic form and appended to a trace.  Runs are bounded by
``fuel`` (one instruction per step) and never raise: failures come back boxed
in the :class:`RunRes` value.

The program is loaded at address 0.  Execution stops normally when the pc
reaches the termination sentinel held in ``$31`` at start-up, or when it runs
off the end of the loaded program (an implicit ``jr $31``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from . import trace as T
from .assembler import Instruction, RawWord, decode
from .words import MASK32, s32

__all__ = [
    "SENTINEL", "DEFAULT_MEM_SIZE", "ErrorKind", "MachineState", "RunRes",
    "Done", "NotDone", "Error", "initial_state", "initial_registers", "step", "run",
]

SENTINEL = 0x8123456C
DEFAULT_MEM_SIZE = 1 << 20


class ErrorKind(enum.Enum):
    DIVIDE_BY_ZERO = "DivideByZero"
    UNALIGNED_ACCESS = "UnalignedAccess"
    OUT_OF_BOUNDS_ACCESS = "OutOfBoundsAccess"
    INVALID_INSTRUCTION = "InvalidInstruction"


class CPUError(Exception):
    def __init__(self, kind: ErrorKind, msg: str = ""):
        super().__init__(msg or kind.value)
        self.kind = kind


@dataclass
class MachineState:
    regs: list[int]
    hi: int = 0
    lo: int = 0
    pc: int = 0
    mem: dict[int, int] = field(default_factory=dict)
    mem_size: int = DEFAULT_MEM_SIZE
    prog_end: int = 0

    def copy(self) -> "MachineState":
        return replace(self, regs=list(self.regs), mem=dict(self.mem))

    @property
    def halted(self) -> bool:
        return self.pc == SENTINEL or self.pc == self.prog_end

    def load(self, addr: int) -> int:
        self._check(addr)
        return self.mem.get(addr, 0)

    def store(self, addr: int, value: int):
        self._check(addr)
        self.mem[addr] = value & MASK32

    def _check(self, addr: int):
        if addr % 4:
            raise CPUError(ErrorKind.UNALIGNED_ACCESS, f"unaligned access at 0x{addr:08x}")
        if addr >= self.mem_size:
            raise CPUError(ErrorKind.OUT_OF_BOUNDS_ACCESS, f"access at 0x{addr:08x}")


@dataclass
class Done:
    state: MachineState
    trace: T.Trace

    @property
    def output(self) -> int:
        return self.state.regs[3]


@dataclass
class NotDone:
    trace: T.Trace


@dataclass
class Error:
    kind: ErrorKind
    trace: T.Trace


RunRes = Done | NotDone | Error


def initial_registers(mem_size: int = DEFAULT_MEM_SIZE) -> dict[str, int]:
    """Start-up values of non-input registers that are not zero."""
    return {"r30": mem_size, "r31": SENTINEL}


def initial_state(prog, r1: int, r2: int, mem_size: int = DEFAULT_MEM_SIZE) -> MachineState:
    if 4 * len(prog) > mem_size:
        raise ValueError("program does not fit in memory")
    regs = [0] * 32
    regs[1], regs[2] = r1 & MASK32, r2 & MASK32
    for name, value in initial_registers(mem_size).items():
        regs[int(name[1:])] = value
    mem = {4 * i: w & MASK32 for i, w in enumerate(prog)}
    return MachineState(regs=regs, mem=mem, mem_size=mem_size, prog_end=4 * len(prog))


def _execute(st: MachineState) -> T.SymInstr | None:
    """Advance ``st`` in place by one instruction; return its symbolic form."""
    pc = st.pc
    if pc % 4 or pc >= st.mem_size:
        raise CPUError(ErrorKind.INVALID_INSTRUCTION, f"cannot fetch at pc 0x{pc:08x}")
    ins = decode(st.mem.get(pc, 0))
    if isinstance(ins, RawWord):
        raise CPUError(ErrorKind.INVALID_INSTRUCTION, f"invalid instruction {ins} at 0x{pc:08x}")
    r = st.regs
    op, d, s, t = ins.op, ins.d, ins.s, ins.t
    R = T.reg
    st.pc = (pc + 4) & MASK32
    sym: T.SymInstr | None = None

    if op in ("add", "sub", "slt", "sltu"):
        if op == "add":
            val = r[s] + r[t]
        elif op == "sub":
            val = r[s] - r[t]
        elif op == "slt":
            val = int(s32(r[s]) < s32(r[t]))
        else:
            val = int(r[s] < r[t])
        r[d] = val & MASK32
        if d:
            sym = {"add": T.Add, "sub": T.Sub, "slt": T.Slt, "sltu": T.Sltu}[op](R(d), R(s), R(t))
    elif op in ("mult", "multu"):
        a, b = (s32(r[s]), s32(r[t])) if op == "mult" else (r[s], r[t])
        prod = a * b
        st.hi, st.lo = (prod >> 32) & MASK32, prod & MASK32
        sym = (T.Mult if op == "mult" else T.Multu)(R(s), R(t))
    elif op in ("div", "divu"):
        a, b = (s32(r[s]), s32(r[t])) if op == "div" else (r[s], r[t])
        if b == 0:
            raise CPUError(ErrorKind.DIVIDE_BY_ZERO, f"division by zero at 0x{pc:08x}")
        q = abs(a) // abs(b)
        if (a < 0) != (b < 0):
            q = -q
        st.lo, st.hi = q & MASK32, (a - q * b) & MASK32
        sym = (T.Div if op == "div" else T.Divu)(R(s), R(t))
    elif op == "mfhi":
        r[d] = st.hi
        sym = T.Mfhi(R(d)) if d else None
    elif op == "mflo":
        r[d] = st.lo
        sym = T.Mflo(R(d)) if d else None
    elif op == "lis":
        value = st.load(st.pc)
        r[d] = value
        st.pc = (st.pc + 4) & MASK32
        sym = T.Const(R(d), value) if d else None
    elif op == "lw":
        r[t] = st.load((r[s] + ins.imm) & MASK32)
        sym = T.Lw(R(t), ins.imm, R(s)) if t else None
    elif op == "sw":
        st.store((r[s] + ins.imm) & MASK32, r[t])
        sym = T.Sw(R(t), ins.imm, R(s))
    elif op in ("beq", "bne"):
        equal = r[s] == r[t]
        taken = equal if op == "beq" else not equal
        if taken:
            st.pc = (st.pc + 4 * ins.imm) & MASK32
        sym = T.PathCond(T.Rel.EQ if equal else T.Rel.NE, R(s), R(t), pc=pc)
    elif op == "jr":
        st.pc = r[s]
    elif op == "jalr":
        target = r[s]
        r[31] = st.pc
        st.pc = target
        sym = T.Jalr(r[31])
    else:  # pragma: no cover - decode only yields known ops
        raise CPUError(ErrorKind.INVALID_INSTRUCTION, op)
    r[0] = 0
    return sym


def step(state: MachineState) -> tuple[MachineState, T.SymInstr | None]:
    """Execute one instruction on a copy of ``state``.  Raises CPUError."""
    st = state.copy()
    sym = _execute(st)
    return st, sym


def run(prog, r1: int, r2: int, fuel: int, mem_size: int = DEFAULT_MEM_SIZE) -> RunRes:
    if fuel < 0:
        raise ValueError("fuel must be >= 0")
    st = initial_state(prog, r1, r2, mem_size)
    syms: list[T.SymInstr] = []
    for _ in range(fuel):
        if st.halted:
            break
        try:
            sym = _execute(st)
        except CPUError as e:
            return Error(e.kind, T.Trace(syms))
        if sym is not None:
            syms.append(sym)
    if st.halted:
        return Done(st, T.Trace(syms))
    return NotDone(T.Trace(syms))
