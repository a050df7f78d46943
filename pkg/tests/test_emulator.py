import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mipsdiff import trace as T
from mipsdiff.assembler import Instruction, assemble, encode
from mipsdiff.emulator import (
    DEFAULT_MEM_SIZE,
    SENTINEL,
    Done,
    Error,
    ErrorKind,
    NotDone,
    initial_registers,
    initial_state,
    run,
    step,
)
from mipsdiff.words import MASK32, s32

from conftest import prog


def at(src: str, **regs):
    """Machine state poised at the first instruction of ``src``."""
    st_ = initial_state(assemble(src), 0, 0)
    for name, v in regs.items():
        st_.regs[int(name[1:])] = v & MASK32
    return st_


def test_straight_p1_adds_inputs():
    res = run(prog("straight_p1"), 1, 1, 100)
    assert isinstance(res, Done)
    assert res.output == 2


def test_counter_p2_needs_more_than_ten_steps():
    assert isinstance(run(prog("counter_p2"), 1, 1, 10), NotDone)
    res = run(prog("counter_p2"), 1, 1, 10_000)
    assert isinstance(res, Done) and res.output == 2


def test_divide_by_zero_is_boxed():
    res = run(assemble("div $1, $2"), 5, 0, 10)
    assert isinstance(res, Error) and res.kind is ErrorKind.DIVIDE_BY_ZERO
    assert [type(i) for i in res.trace] == []


@pytest.mark.parametrize("r1, r2", [(1, 1), (0, 1), (3, 0), (0x1000, 0x1000), (0xFFFFFFFF, 0)])
def test_concrete_jump_to_garbage(r1, r2):
    res = run(prog("jump"), r1, r2, 100)
    assert isinstance(res, Error) and res.kind is ErrorKind.INVALID_INSTRUCTION


def test_concrete_jump_lands_on_code():
    # $1 + $2 = 8 reaches the "good" block, a single concrete path
    res = run(prog("jump"), 4, 4, 100)
    assert isinstance(res, Done) and res.output == 8


def test_step_add():
    s0 = at("add $3, $1, $2", r1=3, r2=4)
    s1, sym = step(s0)
    assert s1.regs[3] == 7 and s1.pc == 4
    assert sym == T.Add(T.reg(3), T.reg(1), T.reg(2))
    assert s0.regs[3] == 0  # step works on a copy


def test_step_lis():
    s1, sym = step(at("lis $5\n.word 42"))
    assert s1.regs[5] == 42 and s1.pc == 8
    assert sym == T.Const(T.reg(5), 42)


def test_step_branch_not_taken():
    s1, sym = step(at("beq $4, $5, skip\nadd $1, $1, $1\nskip:", r4=1, r5=2))
    assert s1.pc == 4
    assert sym == T.PathCond(T.Rel.NE, T.reg(4), T.reg(5), pc=0)


def test_step_branch_taken():
    s1, sym = step(at("beq $4, $5, skip\nadd $1, $1, $1\nskip:", r4=9, r5=9))
    assert s1.pc == 8
    assert sym.rel is T.Rel.EQ


def test_lis_costs_one_step():
    src = "lis $3\n.word 7\nlis $4\n.word 8"
    assert isinstance(run(assemble(src), 0, 0, 1), NotDone)
    assert isinstance(run(assemble(src), 0, 0, 2), Done)


def test_initial_machine():
    st_ = initial_state(assemble("add $3, $1, $2"), 5, 6)
    assert st_.regs[1:3] == [5, 6]
    assert st_.regs[31] == SENTINEL == 0x8123456C
    assert st_.regs[30] == DEFAULT_MEM_SIZE
    assert all(st_.regs[i] == 0 for i in range(32) if i not in (1, 2, 30, 31))
    assert initial_registers() == {"r30": DEFAULT_MEM_SIZE, "r31": SENTINEL}


def test_jr_to_sentinel_terminates():
    res = run(assemble("add $3, $1, $2\njr $31\n.word 0"), 2, 3, 10)
    assert isinstance(res, Done) and res.output == 5


def test_writes_to_zero_are_discarded():
    res = run(assemble("lis $0\n.word 9\nadd $0, $1, $1\nadd $3, $0, $0"), 4, 4, 10)
    assert isinstance(res, Done) and res.output == 0
    assert res.state.regs[0] == 0
    assert not any(v == T.R0 for ins in res.trace for v in ins.defs())


def test_arith_wraps_and_compares():
    src = "add $3, $1, $2\nsub $4, $0, $1\nslt $5, $1, $2\nsltu $6, $1, $2"
    res = run(assemble(src), 0xFFFFFFFF, 1, 10)
    r = res.state.regs
    assert r[3] == 0 and r[4] == 1
    assert r[5] == 1  # -1 < 1 signed
    assert r[6] == 0  # 0xffffffff > 1 unsigned


@pytest.mark.parametrize(
    "op, a, b, hi, lo",
    [
        ("mult", -3, 5, 0xFFFFFFFF, (-15) & MASK32),
        ("multu", 0xFFFFFFFF, 2, 1, 0xFFFFFFFE),
        ("div", -7, 2, (-1) & MASK32, (-3) & MASK32),  # truncation toward zero
        ("divu", 0xFFFFFFF9, 2, 1, 0x7FFFFFFC),
        ("div", -(1 << 31), -1, 0, 1 << 31),
    ],
)
def test_hilo_semantics(op, a, b, hi, lo):
    res = run(assemble(f"{op} $1, $2\nmfhi $3\nmflo $4"), a & MASK32, b & MASK32, 10)
    assert res.state.regs[3] == hi and res.state.regs[4] == lo


def test_memory_errors():
    res = run(assemble("lis $4\n.word 42\nsw $1, 0($4)"), 0, 0, 10)
    assert res.kind is ErrorKind.UNALIGNED_ACCESS
    res = run(assemble("lw $3, 0($30)"), 0, 0, 10)
    assert res.kind is ErrorKind.OUT_OF_BOUNDS_ACCESS
    res = run(assemble("lw $3, -4($30)"), 0, 0, 10)
    assert isinstance(res, Done) and res.output == 0


def test_raw_word_is_invalid():
    res = run(assemble("add $3, $1, $2\n.word 0\nadd $3, $3, $3"), 1, 1, 10)
    assert res.kind is ErrorKind.INVALID_INSTRUCTION
    assert len(res.trace) == 1  # trace kept up to the failure


def test_trace_records_raw_forms():
    res = run(prog("fun_p1"), 5, 1, 100)
    kinds = {type(i).__name__ for i in res.trace}
    assert {"Sw", "Lw", "Const", "Jalr", "PathCond", "Sub", "Add"} <= kinds
    assert res.output == 7


# ---------------------------------------------------------------- properties

_PROGRAMS = ["straight_p1", "straight_p2", "counter_p1", "counter_p2", "hundred_p1", "hundred_p2", "jump",
             "stack_p1", "stack_p2", "fun_p1", "fun_p2", "while_p1", "while_p2",
             "infinite_p1", "div0_p1", "nested_p1", "nested_bug"]
words = st.integers(0, MASK32)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(_PROGRAMS), words, words, st.integers(0, 300), st.integers(0, 300))
def test_determinism_and_fuel_monotonicity(name, r1, r2, f, extra):
    p = prog(name)
    a = run(p, r1, r2, f)
    assert a == run(p, r1, r2, f)
    b = run(p, r1, r2, f + extra)
    if isinstance(a, (Done, Error)):
        assert type(b) is type(a)
        assert b.trace == a.trace
        if isinstance(a, Done):
            assert b.state == a.state
        else:
            assert b.kind == a.kind


_ALU = ["add", "sub", "slt", "sltu"]
small_reg = st.integers(1, 9)


@st.composite
def straight_line(draw):
    """Random straight-line programs: ALU ops, hi/lo ops, constants and memory."""
    lines = []
    for _ in range(draw(st.integers(1, 25))):
        kind = draw(st.sampled_from(["alu", "alu", "hilo", "mf", "lis", "sw", "lw"]))
        d, s, t = draw(small_reg), draw(st.integers(0, 9)), draw(st.integers(0, 9))
        if kind == "alu":
            lines.append(f"{draw(st.sampled_from(_ALU))} ${d}, ${s}, ${t}")
        elif kind == "hilo":
            op = draw(st.sampled_from(["mult", "multu", "div", "divu"]))
            if op.startswith("div"):
                # keep the divisor nonzero
                lines += ["lis $10", f".word {draw(st.integers(1, MASK32))}"]
                lines.append(f"{op} ${s}, $10")
            else:
                lines.append(f"{op} ${s}, ${t}")
        elif kind == "mf":
            lines.append(f"{draw(st.sampled_from(['mfhi', 'mflo']))} ${d}")
        elif kind == "lis":
            lines += [f"lis ${d}", f".word {draw(words)}"]
        else:
            off = 4 * draw(st.integers(-8, -1))
            op = "sw" if kind == "sw" else "lw"
            lines.append(f"{op} ${d}, {off}($30)")
    return "\n".join(lines)


@settings(max_examples=300, deadline=None)
@given(straight_line(), words, words)
def test_trace_fidelity(src, r1, r2):
    res = run(assemble(src), r1, r2, 1000)
    assert isinstance(res, Done)
    init = initial_registers()
    raw = T.evaluate(T.desugar(res.trace), r1, r2, init)
    ssa = T.evaluate(T.transform(res.trace, 50), r1, r2, init)
    for name, value in raw.registers.items():
        if name.startswith("r"):
            assert value == res.state.regs[int(name[1:])], name
        assert ssa.registers[name] == value
    # stored words agree with the machine's memory
    mem = raw.registers.get("mem", {})
    for addr, value in mem.items():
        assert res.state.mem[addr] == value
