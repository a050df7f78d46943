"""Command-line front end.

    mipsdiff compare a.asm b.asm [--fuel N] [--depth N] [--json] ...
    mipsdiff run prog.asm --r1 V --r2 V [--trace] [--json]
    mipsdiff asm prog.asm [-o prog.bin]

Exit codes: 0 possibly equivalent (or success for run/asm), 1 disequivalent,
2 usage or assembly error, 3 solver or engine failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .assembler import AssemblyError, assemble_file, disassemble, to_bytes
from .emulator import Done, run
from .engine import (
    DEFAULT_DEPTH,
    DEFAULT_FUEL,
    Disequivalent,
    EngineError,
    Failed,
    Outcome,
    Value,
    compare,
    outcome_of,
)
from .smt import DEFAULT_TIMEOUT, SOLVER_ENV, Solver
from .words import MASK32, hex32, s32

EXIT_EQUIVALENT = 0
EXIT_DISEQUIVALENT = 1
EXIT_USAGE = 2
EXIT_FAILURE = 3
JSON_VERSION = 1


def _word(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not -(1 << 31) <= v <= MASK32:
        raise argparse.ArgumentTypeError(f"{text} does not fit in 32 bits")
    return v & MASK32


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def word_json(w: int) -> dict:
    return {"dec": w, "signed": s32(w), "hex": hex32(w)}


def outcome_json(o: Outcome) -> dict:
    if isinstance(o, Value):
        return {"kind": "value", **word_json(o.word)}
    if isinstance(o, Failed):
        return {"kind": "failed", "error": o.kind.value}
    return {"kind": "timeout"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mipsdiff", description="Concolic disequivalence checker for MIPS programs.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--fuel", type=_positive, default=DEFAULT_FUEL,
                        help=f"max instructions per run (default {DEFAULT_FUEL})")
        sp.add_argument("--r1", type=_word, default=1)
        sp.add_argument("--r2", type=_word, default=1)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("-v", "--verbose", action="count", default=0)

    c = sub.add_parser("compare", help="search for inputs on which two programs differ")
    c.add_argument("prog1")
    c.add_argument("prog2")
    common(c)
    c.add_argument("--depth", type=_nonneg, default=DEFAULT_DEPTH,
                   help=f"max path conditions per trace (default {DEFAULT_DEPTH})")
    c.add_argument("--solver", default=None,
                   help=f"SMT solver binary (default ${SOLVER_ENV} or z3)")
    c.add_argument("--solver-timeout", type=float, default=DEFAULT_TIMEOUT,
                   help=f"seconds per solver query (default {DEFAULT_TIMEOUT:g})")

    r = sub.add_parser("run", help="run one program concretely")
    r.add_argument("prog")
    common(r)
    r.add_argument("--trace", action="store_true", help="also print the symbolic trace")

    a = sub.add_parser("asm", help="assemble to big-endian binary")
    a.add_argument("prog")
    a.add_argument("-o", "--output", help="write binary here (default: hex listing on stdout)")
    return p


def _cmd_compare(args) -> int:
    p1, p2 = assemble_file(args.prog1), assemble_file(args.prog2)
    solver = Solver(path=args.solver, timeout=args.solver_timeout)
    verdict = compare(p1, p2, args.fuel, args.depth, inputs=(args.r1, args.r2), solver=solver)
    stats = verdict.stats.as_dict()
    if args.json:
        doc = {"version": JSON_VERSION, "verdict": verdict.verdict,
               "fuel": args.fuel, "depth": args.depth}
        if isinstance(verdict, Disequivalent):
            doc["counterexample"] = {"r1": word_json(verdict.r1), "r2": word_json(verdict.r2)}
            doc["outcomes"] = [outcome_json(verdict.outcome1), outcome_json(verdict.outcome2)]
            doc["driver"] = verdict.driver
        doc["stats"] = stats
        print(json.dumps(doc, indent=2, sort_keys=True))
    elif isinstance(verdict, Disequivalent):
        print("disequivalent")
        print(f"  counterexample: $1 = {verdict.r1} ({hex32(verdict.r1)}), "
              f"$2 = {verdict.r2} ({hex32(verdict.r2)})")
        print(f"  {args.prog1}: {verdict.outcome1}")
        print(f"  {args.prog2}: {verdict.outcome2}")
        if verdict.driver:
            print(f"  found by negating {verdict.condition} in program {verdict.driver}")
    else:
        print("possibly equivalent")
        print(f"  runs={stats['runs']} paths={stats['paths_explored']} "
              f"queries={stats['solver_queries']} unsat={stats['unsat']}")
    return EXIT_DISEQUIVALENT if isinstance(verdict, Disequivalent) else EXIT_EQUIVALENT


def _cmd_run(args) -> int:
    prog = assemble_file(args.prog)
    res = run(prog, args.r1, args.r2, args.fuel)
    out = outcome_of(res)
    if args.json:
        doc = {"version": JSON_VERSION, "inputs": {"r1": word_json(args.r1), "r2": word_json(args.r2)},
               "outcome": outcome_json(out), "trace_length": len(res.trace)}
        if args.trace:
            doc["trace"] = [str(i) for i in res.trace]
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(out)
        if isinstance(res, Done):
            st = res.state
            print(f"  hi={hex32(st.hi)} lo={hex32(st.lo)}")
        if args.trace:
            print(res.trace.dump())
    return 0


def _cmd_asm(args) -> int:
    words = assemble_file(args.prog)
    if args.output:
        with open(args.output, "wb") as f:
            f.write(to_bytes(words))
    else:
        print("\n".join(disassemble(words)))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"compare": _cmd_compare, "run": _cmd_run, "asm": _cmd_asm}[args.command](args)
    except (OSError, AssemblyError) as e:
        print(f"mipsdiff: {e}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as e:
        print(f"mipsdiff: engine failure: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
