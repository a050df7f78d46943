"""Running programs on the instrumented emulator.

Every run returns Done, NotDone (out of fuel) or Error, and always carries the
symbolic trace of what executed.

Run: python demos/02_emulate.py
"""

from mipsdiff.assembler import assemble
from mipsdiff.emulator import run

COUNTER = assemble("""
        lis $4
        .word 1
        lis $5
        .word 42
        lis $7
        .word 1
loop:   slt $6, $4, $5
        beq $6, $0, end
        add $4, $4, $7
        beq $0, $0, loop
end:    add $3, $1, $1
""")

for fuel in (10, 10_000):
    res = run(COUNTER, 3, 4, fuel)
    print(f"fuel {fuel:>6}: {type(res).__name__}", getattr(res, "output", ""))

res = run(assemble("div $1, $2\nmflo $3"), 7, 0, 10)
print("divide by zero:", type(res).__name__, res.kind.value)

res = run(assemble("add $4, $1, $2\njr $4"), 1, 1, 10)
print("jump to address 2:", type(res).__name__, res.kind.value)

res = run(assemble("add $3, $1, $2\nslt $4, $1, $2\nlis $5\n.word 1\nbeq $4, $5, skip\nadd $6, $3, $1\nskip:"), 1, 1, 100)
print("\ntrace of a run with the branch not taken:")
print(res.trace.dump())
