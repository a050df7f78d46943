"""Assembling and decoding the supported instruction subset.

Run: python demos/01_assemble.py
"""

from mipsdiff.assembler import MNEMONICS, assemble, decode, disassemble, to_bytes

SOURCE = """
        lis $4            # $4 <- 1
        .word 1
loop:   sub $1, $1, $4
        bne $1, $0, loop  # offsets are relative to the next instruction
        add $3, $1, $2
"""

print(f"{len(MNEMONICS)} mnemonics:", " ".join(MNEMONICS))

words = assemble(SOURCE)
print("\nassembled words and their decodings:")
for line in disassemble(words):
    print("   ", line)

# The branch back to `loop` sits at byte 12, so its offset is (8 - 16) / 4 = -2.
branch = decode(words[3])
print(f"\nbne offset field: {branch.imm}")

# Words that do not match a subset encoding decode to RawWord, never raise.
print("decode(0):", decode(0))
print("big-endian image:", to_bytes(words).hex())
