"""From a path prefix to an SMT-LIB query, a model, and new inputs.

Needs an SMT solver on PATH (z3 by default, or set MIPSDIFF_SOLVER).

Run: python demos/04_smt_query.py
"""

from mipsdiff.assembler import assemble
from mipsdiff.bveval import check_model
from mipsdiff.emulator import run
from mipsdiff.engine import PathStore
from mipsdiff.smt import Solver, emit_formula, parse_model
from mipsdiff.trace import transform

prog = assemble("""
        add $3, $1, $2
        slt $4, $1, $2
        lis $5
        .word 1
        beq $4, $5, skip
        add $6, $3, $1
skip:
""")

# With $1 < $2 the branch is taken; ask for inputs that fall through instead.
seen = transform(run(prog, 1, 2, 100).trace, 50)
target = PathStore().next_target(seen)
formula = emit_formula(target.prefix)
print(formula.script)

status, model = Solver().check(formula.script)
print(status)
print(model)
print("model satisfies every assertion:", check_model(formula.script, model))

r1, r2 = parse_model(model).inputs()
res = run(prog, r1, r2, 100)
print(f"\nre-run with $1={r1:#x} $2={r2:#x}: path {[str(c) for c in res.trace.path_conditions]}")
