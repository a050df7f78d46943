"""Lowering a raw trace: desugar, simplify, trim, then SSA conversion.

Run: python demos/03_trace_pipeline.py
"""

from mipsdiff import trace as T
from mipsdiff.assembler import assemble
from mipsdiff.emulator import run

prog = assemble("""
        mult $1, $2
        mflo $3
        beq $0, $0, next     # always taken, so simplify drops it
next:   sub $1, $1, $2
        bne $1, $3, out
        add $3, $3, $1
out:    lis $9
        .word 7
""")
raw = run(prog, 6, 2, 100).trace
print("raw:\n" + raw.dump())

cur = raw
for name, fn in [("desugar", T.desugar), ("simplify", T.simplify),
                 ("trim(1)", lambda t: T.trim(t, 1)), ("ssa", T.ssa_convert)]:
    cur = fn(cur)
    print(f"\n{name}:\n{cur.dump()}")

assert T.is_ssa_form(cur)
assert T.transform(raw, 1) == cur
