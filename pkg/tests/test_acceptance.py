"""Exit criteria.  Each test prints one PASS/FAIL line, repeated in the
session summary.  Run alone with ``pytest tests/test_acceptance.py -s``."""

import json
import random
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from mipsdiff import trace as T
from mipsdiff.assembler import MNEMONICS, Instruction, assemble, decode, encode
from mipsdiff.bveval import check_model
from mipsdiff.emulator import Done, initial_registers, run
from mipsdiff.engine import (
    DEFAULT_DEPTH,
    DEFAULT_FUEL,
    Disequivalent,
    PossiblyEquivalent,
    Relation,
    Value,
    compare,
    compare_outcomes,
    outcome_of,
)
from mipsdiff.smt import Solver, emit_formula, solve

from conftest import CRITERIA, prog
from gen import branchy_program, raw_trace
from test_smt import REFERENCE_SCRIPT, _shape, slt_branch_prefix

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(label: str, title: str):
    try:
        yield
    except BaseException as e:
        first = (str(e).strip().splitlines() or [""])[0][:120]
        line = f"[FAIL] criterion {label}: {title} ({type(e).__name__}: {first})"
        print(line)
        CRITERIA.append(line)
        raise
    line = f"[PASS] criterion {label}: {title}"
    print(line)
    CRITERIA.append(line)


class RecordingSolver(Solver):
    """Keeps every script and sat model for the model-validity check."""

    def __init__(self):
        super().__init__()
        self.log: list[tuple[str, str, str | None]] = []

    def check(self, script):
        status, model = super().check(script)
        self.log.append((script, status, model))
        return status, model


SOLVER = RecordingSolver()
VERDICTS: list[tuple[str, list, list, int, object]] = []


def run_compare(name, p1, p2, fuel=DEFAULT_FUEL, depth=DEFAULT_DEPTH, inputs=(1, 1)):
    v = compare(p1, p2, fuel, depth, inputs=inputs, solver=SOLVER)
    VERDICTS.append((name, p1, p2, fuel, v))
    return v


def reexecutes(p1, p2, fuel, v: Disequivalent) -> bool:
    o1 = outcome_of(run(p1, v.r1, v.r2, fuel))
    o2 = outcome_of(run(p2, v.r1, v.r2, fuel))
    return (o1, o2) == (v.outcome1, v.outcome2) and compare_outcomes(o1, o2) is Relation.CONFLICT


# ---------------------------------------------------------------------------

def test_criterion_1_straight_line_equivalent():
    with criterion("1", "straight-line pair is possibly-equivalent in < 5 s"):
        start = time.perf_counter()
        v = run_compare("straight", prog("straight_p1"), prog("straight_p2"))
        elapsed = time.perf_counter() - start
        assert isinstance(v, PossiblyEquivalent), v
        assert elapsed < 5.0, f"{elapsed:.2f}s"


def test_criterion_2_counter_fuel():
    with criterion("2", "counting-loop pair: equivalent at fuel 10, disequivalent at fuel 10,000"):
        p1, p2 = prog("counter_p1"), prog("counter_p2")
        for seeds in [(1, 1), (1, 2)]:
            assert isinstance(run_compare("counter@10", p1, p2, fuel=10, inputs=seeds), PossiblyEquivalent)
        # brute-force oracle: the outputs differ exactly when $1 != $2
        for r1 in range(-3, 4):
            for r2 in range(-3, 4):
                a = outcome_of(run(p1, r1, r2, 10_000))
                b = outcome_of(run(p2, r1, r2, 10_000))
                assert (a != b) == (r1 != r2)
        # non-colliding seeds expose the difference on the first run
        v = run_compare("counter@10000", p1, p2, fuel=10_000, inputs=(1, 2))
        assert isinstance(v, Disequivalent), v
        assert v.r1 != v.r2
        assert reexecutes(p1, p2, 10_000, v)
        # with (1, 1) every loop condition is input-independent, so nothing is found
        assert isinstance(run_compare("counter@10000/1,1", p1, p2, fuel=10_000), PossiblyEquivalent)


def test_criterion_3_hundred_needs_both_programs():
    with criterion("3", "r2 == 100 pair: counterexample found by driving from P2"):
        p1, p2 = prog("hundred_p1"), prog("hundred_p2")
        v = run_compare("hundred", p1, p2, fuel=1000, depth=50)
        assert isinstance(v, Disequivalent), v
        assert v.r2 == 100
        assert v.driver == 2
        # the negated condition is P2's bne at address 12, never one of P1's
        seed_conds = T.transform(run(p2, 1, 1, 1000).trace, 50).path_conditions
        assert v.condition == seed_conds[0].negate()
        assert v.condition.pc == 12
        p1_pcs = {c.pc for r in (0, 42, 100) for c in run(p1, r, r, 1000).trace.path_conditions}
        assert 12 not in p1_pcs
        assert reexecutes(p1, p2, 1000, v)
        assert (outcome_of(run(p1, 1, 100, 1000)), outcome_of(run(p2, 1, 100, 1000))) == (Value(101), Value(201))


def test_criterion_4_slt_branch_pipeline():
    with criterion("4", "reference script reproduced and its model skips the branch"):
        prefix = slt_branch_prefix()
        f = emit_formula(prefix, initial_registers())
        ours_decls, ours_asserts = _shape(f.script)
        ref_decls, ref_asserts = _shape(REFERENCE_SCRIPT)
        assert ours_asserts == ref_asserts
        assert ours_decls - {"['declare-const', 'r0', ['_', 'BitVec', '32']]"} == ref_decls
        soln = solve(prefix, SOLVER)
        r1, r2 = soln.inputs()
        res = run(prog("slt_branch"), r1, r2, 100)
        assert isinstance(res, Done) and res.state.regs[4] == 0
        assert [c.rel for c in res.trace.path_conditions] == [T.Rel.NE]


MATRIX = {
    # name: (p1, p2, expected verdict, check)
    "stack": ("stack_p1", "stack_p2", Disequivalent, lambda v: v.r2 == 13),
    "fun": ("fun_p1", "fun_p2", Disequivalent, lambda v: v.r1 == 5),
    "while": ("while_p1", "while_p2", Disequivalent, lambda v: (2 * v.r1) & 0xFFFFFFFF == 22),
    "infinite": ("infinite_p1", "infinite_p2", PossiblyEquivalent, None),
    "div0": ("div0_p1", "div0_p2", Disequivalent, lambda v: v.r2 == 0),
    "div0-both": ("div0_p1", "div0_both_p2", PossiblyEquivalent, None),
    "nested": ("nested_p1", "nested_p2", PossiblyEquivalent, lambda v: v.stats.paths == [4, 4]),
    "nested-bug": ("nested_p1", "nested_bug", Disequivalent, lambda v: (v.r1, v.r2) == (5, 7)),
}


def test_criterion_5_test_matrix():
    with criterion("5", "test matrix: stack, fun, while, infinite, div0, nested"):
        for name, (a, b, kind, check) in MATRIX.items():
            p1, p2 = prog(a), prog(b)
            v = run_compare(name, p1, p2)
            assert isinstance(v, kind), (name, v)
            if check is not None:
                assert check(v), (name, v)
            if isinstance(v, Disequivalent):
                assert reexecutes(p1, p2, DEFAULT_FUEL, v), name
        # the while loop runs fewer times than the depth bound
        loop_conds = run(prog("while_p1"), 1, 1, DEFAULT_FUEL).trace.path_conditions
        assert len(loop_conds) < DEFAULT_DEPTH
        # error on both sides is consistent; error on one side is a conflict
        v = VERDICTS[-len(MATRIX) + list(MATRIX).index("div0")][4]
        assert str(v.outcome1) == "Failed(DivideByZero)" and v.outcome2 == Value(0)


def test_criterion_6a_ssa_single_assignment():
    with criterion("6a", "SSA single assignment on 1,000 random traces"):
        rng = random.Random(6)
        for _ in range(1000):
            out = T.transform(raw_trace(rng), rng.randint(0, 8))
            defs = [v for ins in out for v in ins.defs() if v != T.R0]
            assert len(defs) == len(set(defs))
            assert T.is_ssa_form(out)


def test_criterion_6b_model_validity():
    with criterion("6b", "every sat model satisfies its script under the local evaluator"):
        rng = random.Random(66)
        for _ in range(40):
            p = assemble(branchy_program(rng))
            run_compare("random", p, p, fuel=500, depth=6)
        for _ in range(40):
            tr = T.transform(raw_trace(rng), 4)
            tr = T.Trace([i for i in tr if not isinstance(i, (T.Quot, T.Rem))], ssa=True)
            solve(tr, SOLVER)
        sat = [(s, m) for s, status, m in SOLVER.log if status == "sat"]
        assert len(sat) >= 50, len(sat)
        bad = [s for s, m in sat if not check_model(s, m)]
        assert not bad, bad[0]


def test_criterion_6c_soundness():
    with criterion("6c", "every disequivalent verdict reproduces concretely"):
        rng = random.Random(666)
        for _ in range(30):
            p1 = assemble(branchy_program(rng, 8))
            lines = branchy_program(rng, 8)
            run_compare("random-pair", p1, assemble(lines), fuel=500, depth=6)
        dis = [(n, p1, p2, f, v) for n, p1, p2, f, v in VERDICTS if isinstance(v, Disequivalent)]
        assert len(dis) >= 10, len(dis)
        failed = [n for n, p1, p2, f, v in dis if not reexecutes(p1, p2, f, v)]
        assert not failed, failed


def test_criterion_6d_termination():
    with criterion("6d", "iterations stay within 2 * 2^(depth_used + 1)"):
        assert VERDICTS
        for name, p1, p2, fuel, v in VERDICTS:
            used = v.stats.max_depth
            assert v.stats.iterations <= 2 * 2 ** (used + 1), (name, v.stats.as_dict())
            if name in MATRIX:
                assert used <= 4, (name, used)


GOLDEN = Path(__file__).parent / "golden" / "encodings.json"


def test_criterion_7_encodings():
    with criterion("7", "encoding golden file and 10,000 randomized round trips"):
        entries = json.loads(GOLDEN.read_text())["entries"]
        assert {e["asm"].split()[0] for e in entries} == set(MNEMONICS)
        assert len(MNEMONICS) == 17
        for e in entries:
            word = int(e["word"], 16)
            assert assemble(e["asm"]) == [word], e
            assert encode(decode(word)) == word
        rng = random.Random(7)
        for _ in range(10_000):
            op = rng.choice(MNEMONICS)
            s, t, d = rng.randrange(32), rng.randrange(32), rng.randrange(32)
            fmt = Instruction(op).fmt
            ins = {
                "R3": lambda: Instruction(op, d=d, s=s, t=t),
                "R2": lambda: Instruction(op, s=s, t=t),
                "RD": lambda: Instruction(op, d=d),
                "RS": lambda: Instruction(op, s=s),
            }.get(fmt, lambda: Instruction(op, s=s, t=t, imm=rng.randint(-32768, 32767)))()
            word = encode(ins)
            assert decode(word) == ins
            assert assemble(str(ins)) == [word]


if __name__ == "__main__":
    import subprocess
    sys.exit(subprocess.call([sys.executable, "-m", "pytest", __file__, "-q", "-s"]))
