"""Searching for inputs that make two programs disagree.

Run: python demos/05_compare.py
"""

from mipsdiff import assemble, compare

P1 = assemble("""
        add $3, $1, $2
""")

# Same result, except when $2 == 100, where $2 is added a second time.
P2 = assemble("""
        add $3, $1, $2
        lis $4
        .word 100
        bne $2, $4, end
        add $3, $3, $2
end:
""")

verdict = compare(P1, P2)
print(verdict.verdict)
print(f"  inputs  : $1 = {verdict.r1}, $2 = {verdict.r2}")
print(f"  outcomes: {verdict.outcome1} vs {verdict.outcome2}")
print(f"  found by negating '{verdict.condition}' on program {verdict.driver}'s path")
print("  stats   :", verdict.stats.as_dict())

# A program that never returns for one input is not evidence of a difference.
spin = assemble("lis $4\n.word 3\nbne $1, $4, ok\nhang: beq $0, $0, hang\nok: lis $3\n.word 7")
const = assemble("lis $3\n.word 7")
print("\nspinning vs constant:", compare(spin, const, fuel=500).verdict)

# Failing on both sides counts as agreement.
a = assemble("div $1, $2\nmflo $3")
b = assemble("bne $2, $0, ok\ndiv $2, $0\nok: div $1, $2\nmflo $3")
print("trap vs trap:", compare(a, b).verdict)
