"""Assembler and decoder for the supported MIPS subset.

Dialect
-------
One instruction or directive per line, lowercase mnemonics, registers ``$0``
to ``$31``, ``#`` comments to end of line, and ``name:`` labels either on their
own line or in front of an instruction.  Data words are written ``.word N``,
``.word label`` or as a bare integer line (the listing style where the word
after ``lis`` is written on its own line).  Loads and stores accept both
``lw $t, i($s)`` and ``lw $t, i, $s``.

Encodings are the standard MIPS-I R/I formats; ``lis`` uses funct ``0x14``
with the destination in the ``rd`` field, and ``jalr $s`` is encoded with
``rd = 31``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .words import MASK32, sext16

__all__ = [
    "AssemblyError",
    "Instruction",
    "RawWord",
    "SourceLine",
    "SourceProgram",
    "MNEMONICS",
    "assemble",
    "assemble_file",
    "decode",
    "disassemble",
    "encode",
    "parse_source",
    "to_bytes",
    "from_bytes",
]


class AssemblyError(ValueError):
    """Raised for any problem turning source text into words."""


# mnemonic -> (operand format, opcode or funct)
#   R3: $d, $s, $t     R2: $s, $t     RD: $d     RS: $s
#   BR: $s, $t, target MEM: $t, i($s)
_OPS = {
    "add": ("R3", 0x20),
    "sub": ("R3", 0x22),
    "slt": ("R3", 0x2A),
    "sltu": ("R3", 0x2B),
    "mult": ("R2", 0x18),
    "multu": ("R2", 0x19),
    "div": ("R2", 0x1A),
    "divu": ("R2", 0x1B),
    "mfhi": ("RD", 0x10),
    "mflo": ("RD", 0x12),
    "lis": ("RD", 0x14),
    "jr": ("RS", 0x08),
    "jalr": ("RS", 0x09),
    "beq": ("BR", 0x04),
    "bne": ("BR", 0x05),
    "lw": ("MEM", 0x23),
    "sw": ("MEM", 0x2B),
}

MNEMONICS = tuple(_OPS)

_FUNCT_TO_OP = {code: op for op, (fmt, code) in _OPS.items() if fmt in ("R3", "R2", "RD", "RS")}
_OPCODE_TO_OP = {code: op for op, (fmt, code) in _OPS.items() if fmt in ("BR", "MEM")}


@dataclass(frozen=True)
class Instruction:
    """A decoded instruction of the subset.

    Only the fields used by ``op``'s format are meaningful; the rest stay 0.
    ``imm`` is the signed 16-bit immediate (a word offset for branches, a
    byte offset for loads and stores).
    """

    op: str
    d: int = 0
    s: int = 0
    t: int = 0
    imm: int = 0

    def __post_init__(self):
        if self.op not in _OPS:
            raise AssemblyError(f"unknown mnemonic {self.op!r}")
        for name in ("d", "s", "t"):
            r = getattr(self, name)
            if not 0 <= r <= 31:
                raise AssemblyError(f"register ${r} out of range")
        if not -0x8000 <= self.imm <= 0x7FFF:
            raise AssemblyError(f"immediate {self.imm} does not fit in 16 bits")

    @property
    def fmt(self) -> str:
        return _OPS[self.op][0]

    def __str__(self):
        fmt = self.fmt
        if fmt == "R3":
            return f"{self.op} ${self.d}, ${self.s}, ${self.t}"
        if fmt == "R2":
            return f"{self.op} ${self.s}, ${self.t}"
        if fmt == "RD":
            return f"{self.op} ${self.d}"
        if fmt == "RS":
            return f"{self.op} ${self.s}"
        if fmt == "BR":
            return f"{self.op} ${self.s}, ${self.t}, {self.imm}"
        return f"{self.op} ${self.t}, {self.imm}(${self.s})"


@dataclass(frozen=True)
class RawWord:
    """A word that is not an instruction of the subset (data, or garbage)."""

    value: int

    def __str__(self):
        return f".word 0x{self.value:08x}"


def encode(instr: Instruction | RawWord) -> int:
    if isinstance(instr, RawWord):
        return instr.value & MASK32
    fmt, code = _OPS[instr.op]
    if fmt == "R3":
        return (instr.s << 21) | (instr.t << 16) | (instr.d << 11) | code
    if fmt == "R2":
        return (instr.s << 21) | (instr.t << 16) | code
    if fmt == "RD":
        return (instr.d << 11) | code
    if fmt == "RS":
        rd = 31 if instr.op == "jalr" else 0
        return (instr.s << 21) | (rd << 11) | code
    return (code << 26) | (instr.s << 21) | (instr.t << 16) | (instr.imm & 0xFFFF)


def decode(w: int) -> Instruction | RawWord:
    """Decode a word; anything outside the subset comes back as RawWord."""
    w &= MASK32
    opcode = w >> 26
    s = (w >> 21) & 31
    t = (w >> 16) & 31
    d = (w >> 11) & 31
    shamt = (w >> 6) & 31
    funct = w & 0x3F
    if opcode == 0:
        op = _FUNCT_TO_OP.get(funct)
        if op is None or shamt != 0:
            return RawWord(w)
        fmt = _OPS[op][0]
        if fmt == "R3":
            return Instruction(op, d=d, s=s, t=t)
        if fmt == "R2" and d == 0:
            return Instruction(op, s=s, t=t)
        if fmt == "RD" and s == 0 and t == 0:
            return Instruction(op, d=d)
        if fmt == "RS" and t == 0 and d == (31 if op == "jalr" else 0):
            return Instruction(op, s=s)
        return RawWord(w)
    op = _OPCODE_TO_OP.get(opcode)
    if op is None:
        return RawWord(w)
    return Instruction(op, s=s, t=t, imm=sext16(w))


def disassemble(words) -> list[str]:
    return [f"{4 * i:08x}: {w:08x}  {decode(w)}" for i, w in enumerate(words)]


# --------------------------------------------------------------------------
# source parsing

_LABEL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*:")
_REG_RE = re.compile(r"^\$(\d+)$")
_INT_RE = re.compile(r"^[+-]?(0[xX][0-9a-fA-F]+|0[bB][01]+|\d+)$")
_PAREN_RE = re.compile(r"^(.*)\(\s*(\$\w+)\s*\)$")


@dataclass
class SourceLine:
    lineno: int
    labels: list[str]
    text: str  # instruction or directive, stripped; "" if the line has none


@dataclass
class SourceProgram:
    lines: list[SourceLine] = field(default_factory=list)
    origin: str = "<inline>"


def parse_source(text: str, origin: str = "<inline>") -> SourceProgram:
    prog = SourceProgram(origin=origin)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        labels = []
        while (m := _LABEL_RE.match(line)) is not None:
            labels.append(m.group(1))
            line = line[m.end():]
        line = line.strip()
        if labels or line:
            prog.lines.append(SourceLine(lineno, labels, line))
    return prog


def _int(tok: str) -> int | None:
    tok = tok.strip()
    if not _INT_RE.match(tok):
        return None
    sign = -1 if tok[0] == "-" else 1
    body = tok.lstrip("+-")
    return sign * int(body, 0 if body[:2].lower() in ("0x", "0b") else 10)


class _Ctx:
    def __init__(self, prog: SourceProgram, line: SourceLine, labels: dict[str, int], pc: int):
        self.prog, self.line, self.labels, self.pc = prog, line, labels, pc

    def error(self, msg: str) -> AssemblyError:
        return AssemblyError(f"{self.prog.origin}:{self.line.lineno}: {msg}")

    def reg(self, tok: str) -> int:
        tok = tok.strip()
        m = _REG_RE.match(tok)
        if m is None:
            if _int(tok) is not None:
                raise self.error(
                    f"expected a register, got literal {tok!r} (load constants with lis)"
                )
            raise self.error(f"expected a register, got {tok!r}")
        r = int(m.group(1))
        if r > 31:
            raise self.error(f"no such register {tok}")
        return r

    def imm16(self, tok: str) -> int:
        v = _int(tok)
        if v is None:
            raise self.error(f"expected an integer offset, got {tok!r}")
        if not -0x8000 <= v <= 0x7FFF:
            raise self.error(f"immediate {v} out of range [-32768, 32767]")
        return v

    def label(self, name: str) -> int:
        if name not in self.labels:
            raise self.error(f"undefined label {name!r}")
        return self.labels[name]

    def branch_target(self, tok: str) -> int:
        tok = tok.strip()
        v = _int(tok)
        if v is not None:
            return self.imm16(tok)
        offset = (self.label(tok) - (self.pc + 4)) // 4
        if not -0x8000 <= offset <= 0x7FFF:
            raise self.error(f"branch to {tok!r} is out of range")
        return offset

    def word(self, tok: str) -> int:
        tok = tok.strip()
        v = _int(tok)
        if v is None:
            if re.match(r"^[A-Za-z_]\w*$", tok):
                return self.label(tok)
            raise self.error(f"bad .word operand {tok!r}")
        if not -(1 << 31) <= v <= MASK32:
            raise self.error(f".word {v} does not fit in 32 bits")
        return v & MASK32


def _split_operands(text: str) -> list[str]:
    return [op.strip() for op in text.split(",")] if text.strip() else []


def _assemble_line(ctx: _Ctx, text: str) -> int:
    if _int(text) is not None:
        return ctx.word(text)
    head, _, rest = text.partition(" ")
    head = head.strip()
    if head == ".word":
        return ctx.word(rest)
    if head not in _OPS:
        raise ctx.error(f"unknown mnemonic {head!r}")
    fmt = _OPS[head][0]
    ops = _split_operands(rest)

    def want(n):
        if len(ops) != n:
            raise ctx.error(f"{head} takes {n} operand(s), got {len(ops)}")

    if fmt == "R3":
        want(3)
        instr = Instruction(head, d=ctx.reg(ops[0]), s=ctx.reg(ops[1]), t=ctx.reg(ops[2]))
    elif fmt == "R2":
        want(2)
        instr = Instruction(head, s=ctx.reg(ops[0]), t=ctx.reg(ops[1]))
    elif fmt == "RD":
        want(1)
        instr = Instruction(head, d=ctx.reg(ops[0]))
    elif fmt == "RS":
        want(1)
        instr = Instruction(head, s=ctx.reg(ops[0]))
    elif fmt == "BR":
        want(3)
        instr = Instruction(
            head, s=ctx.reg(ops[0]), t=ctx.reg(ops[1]), imm=ctx.branch_target(ops[2])
        )
    else:
        if len(ops) == 2:
            m = _PAREN_RE.match(ops[1])
            if m is None:
                raise ctx.error(f"expected offset($reg), got {ops[1]!r}")
            off, base = m.group(1).strip() or "0", m.group(2)
        elif len(ops) == 3:
            off, base = ops[1], ops[2]
        else:
            raise ctx.error(f"{head} takes $t, offset($s)")
        instr = Instruction(head, t=ctx.reg(ops[0]), s=ctx.reg(base), imm=ctx.imm16(off))
    return encode(instr)


def assemble(source: str | SourceProgram, origin: str = "<inline>") -> list[int]:
    """Assemble source text (or a parsed SourceProgram) into a list of words."""
    prog = parse_source(source, origin) if isinstance(source, str) else source
    labels: dict[str, int] = {}
    pc = 0
    for line in prog.lines:
        for name in line.labels:
            if name in labels:
                raise AssemblyError(f"{prog.origin}:{line.lineno}: duplicate label {name!r}")
            labels[name] = pc
        if line.text:
            pc += 4
    words = []
    pc = 0
    for line in prog.lines:
        if not line.text:
            continue
        words.append(_assemble_line(_Ctx(prog, line, labels, pc), line.text))
        pc += 4
    return words


def assemble_file(path) -> list[int]:
    path = Path(path)
    return assemble(path.read_text(encoding="utf-8"), origin=str(path))


def to_bytes(words) -> bytes:
    return b"".join((w & MASK32).to_bytes(4, "big") for w in words)


def from_bytes(data: bytes) -> list[int]:
    if len(data) % 4:
        raise ValueError("binary program length is not a multiple of 4")
    return [int.from_bytes(data[i:i + 4], "big") for i in range(0, len(data), 4)]
