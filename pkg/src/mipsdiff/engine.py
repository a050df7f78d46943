"""Alternating concolic search for inputs that tell two programs apart.

Both programs are run on the seed inputs.  Each iteration then picks a
driver (alternating between the programs), negates the deepest untried path
condition of its latest trace, solves for inputs reaching the new path, and
runs *both* programs on them.  Outcomes are compared with the S-equivalence
rules: different ``$3`` values, or a failure on one side only, prove the
programs disequivalent; timeouts never justify a verdict.  When neither
program has an untried path left within ``depth`` conditions the answer is
"possibly equivalent".
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

from . import trace as T
from .emulator import DEFAULT_MEM_SIZE, Done, Error, ErrorKind, initial_registers, run
from .smt import Solver, SolverError, solve
from .words import MASK32

__all__ = [
    "DEFAULT_FUEL", "DEFAULT_DEPTH", "DEFAULT_INPUTS",
    "Value", "Failed", "Timeout", "TIMEOUT", "Outcome", "outcome_of",
    "Relation", "compare_outcomes", "PathStore", "Target", "next_target",
    "check_divergence", "Iteration", "Stats", "Disequivalent",
    "PossiblyEquivalent", "Verdict", "EngineError", "compare",
]

log = logging.getLogger(__name__)

DEFAULT_FUEL = 10_000
DEFAULT_DEPTH = 50
DEFAULT_INPUTS = (1, 1)


@dataclass(frozen=True)
class Value:
    word: int

    def __str__(self):
        return f"Value({self.word} / 0x{self.word:08x})"


@dataclass(frozen=True)
class Failed:
    kind: ErrorKind

    def __str__(self):
        return f"Failed({self.kind.value})"


@dataclass(frozen=True)
class Timeout:
    def __str__(self):
        return "Timeout"


TIMEOUT = Timeout()
Outcome = Value | Failed | Timeout


def outcome_of(res) -> Outcome:
    if isinstance(res, Done):
        return Value(res.output)
    if isinstance(res, Error):
        return Failed(res.kind)
    return TIMEOUT


class Relation(enum.Enum):
    CONFLICT = "conflict"
    CONSISTENT = "consistent"
    NO_INFERENCE = "no-inference"


def compare_outcomes(o1: Outcome, o2: Outcome) -> Relation:
    if isinstance(o1, Timeout) or isinstance(o2, Timeout):
        return Relation.NO_INFERENCE
    if isinstance(o1, Failed) and isinstance(o2, Failed):
        return Relation.CONSISTENT
    if isinstance(o1, Failed) or isinstance(o2, Failed):
        return Relation.CONFLICT
    return Relation.CONSISTENT if o1.word == o2.word else Relation.CONFLICT


# --------------------------------------------------------------------------
# path bookkeeping


def _keys(trace: T.Trace) -> tuple:
    return tuple(c.key() for c in trace.path_conditions)


@dataclass(frozen=True)
class Target:
    """A trace prefix ending in a negated path condition."""

    prefix: T.Trace
    key: tuple  # path-condition keys of the prefix, negated one last

    @property
    def condition(self) -> T.PathCond:
        return self.prefix[-1]

    @property
    def expected(self) -> list[T.PathCond]:
        return self.prefix.path_conditions


class PathStore:
    """Prefix tree of the path-condition sequences seen for one program.

    Stored flat: ``observed`` holds every prefix of every recorded path and
    ``attempted`` every negated prefix already handed to the solver.
    """

    def __init__(self):
        self.observed: set[tuple] = set()
        self.attempted: set[tuple] = set()
        self.paths: dict[tuple, T.Trace] = {}

    def record(self, trace: T.Trace) -> bool:
        """Add a path; True if it was not seen before."""
        keys = _keys(trace)
        for n in range(len(keys) + 1):
            self.observed.add(keys[:n])
        if keys in self.paths:
            return False
        self.paths[keys] = trace
        return True

    def mark(self, target: Target):
        self.attempted.add(target.key)

    def next_target(self, trace: T.Trace) -> Target | None:
        """Deepest condition of ``trace`` whose negation is untried and unseen."""
        keys = _keys(trace)
        positions = [i for i, ins in enumerate(trace) if isinstance(ins, T.PathCond)]
        for n in reversed(range(len(positions))):
            flipped = trace[positions[n]].negate()
            key = keys[:n] + (flipped.key(),)
            if key in self.observed or key in self.attempted:
                continue
            prefix = T.Trace(trace.instrs[:positions[n]] + (flipped,), trace.ssa)
            return Target(prefix, key)
        return None

    def frontier(self, latest: T.Trace | None) -> Target | None:
        """Next target, preferring the latest trace, then older paths newest first."""
        if latest is not None:
            target = self.next_target(latest)
            if target is not None:
                return target
        for tr in reversed(list(self.paths.values())):
            target = self.next_target(tr)
            if target is not None:
                return target
        return None


def next_target(store: PathStore, trace: T.Trace) -> Target | None:
    return store.next_target(trace)


def check_divergence(expected, actual: T.Trace) -> bool:
    """True iff ``actual`` follows the ``expected`` path conditions.

    (The name follows the engine's use; it answers "did the run go where we
    asked", so False means the run diverged.)
    """
    want = [c.key() for c in expected]
    got = _keys(actual)
    return got[:len(want)] == tuple(want)


# --------------------------------------------------------------------------
# verdicts


@dataclass
class Iteration:
    driver: int                 # 1 or 2
    condition: str              # negated path condition that was targeted
    sat: bool
    inputs: tuple[int, int] | None = None
    outcomes: tuple | None = None
    diverged: bool = False


@dataclass
class Stats:
    runs: int = 0
    iterations: int = 0
    queries: int = 0
    unsat: int = 0
    divergences: int = 0
    paths: list[int] = field(default_factory=lambda: [0, 0])
    max_depth: int = 0
    history: list[Iteration] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "iterations": self.iterations,
            "solver_queries": self.queries,
            "unsat": self.unsat,
            "divergences": self.divergences,
            "paths_explored": list(self.paths),
            "max_depth": self.max_depth,
        }


@dataclass
class Disequivalent:
    r1: int
    r2: int
    outcome1: Outcome
    outcome2: Outcome
    driver: int | None          # None when the seed run already disagreed
    condition: T.PathCond | None
    stats: Stats

    verdict = "disequivalent"


@dataclass
class PossiblyEquivalent:
    stats: Stats

    verdict = "possibly-equivalent"


Verdict = Disequivalent | PossiblyEquivalent


class EngineError(RuntimeError):
    """The search could not complete (solver failure, failed self-check)."""


class _Search:
    def __init__(self, progs, fuel, depth, solver, mem_size):
        self.progs = progs
        self.fuel, self.depth, self.mem_size = fuel, depth, mem_size
        self.solver = solver or Solver()
        self.initial = initial_registers(mem_size)
        self.stores = [PathStore(), PathStore()]
        self.latest: list[T.Trace | None] = [None, None]
        self.stats = Stats()

    def run_both(self, r1, r2):
        outcomes = []
        for i, prog in enumerate(self.progs):
            res = run(prog, r1, r2, self.fuel, self.mem_size)
            self.stats.runs += 1
            tr = T.transform(res.trace, self.depth)
            self.latest[i] = tr
            self.stores[i].record(tr)
            self.stats.max_depth = max(self.stats.max_depth, len(tr.path_conditions))
            outcomes.append(outcome_of(res))
        self.stats.paths = [len(s.paths) for s in self.stores]
        return tuple(outcomes)

    def self_check(self, r1, r2, o1, o2):
        again = tuple(outcome_of(run(p, r1, r2, self.fuel, self.mem_size)) for p in self.progs)
        if again != (o1, o2) or compare_outcomes(*again) is not Relation.CONFLICT:
            raise EngineError(f"counterexample ({r1}, {r2}) did not reproduce: {again}")

    def found(self, r1, r2, outcomes, driver, cond):
        self.self_check(r1, r2, *outcomes)
        log.info("disequivalent at r1=%#x r2=%#x: %s vs %s", r1, r2, *outcomes)
        return Disequivalent(r1, r2, *outcomes, driver, cond, self.stats)

    def search(self, seed) -> Verdict:
        r1, r2 = (x & MASK32 for x in seed)
        outcomes = self.run_both(r1, r2)
        log.debug("seed (%#x, %#x) -> %s, %s", r1, r2, *outcomes)
        if compare_outcomes(*outcomes) is Relation.CONFLICT:
            return self.found(r1, r2, outcomes, None, None)

        turn = 0
        while True:
            targets = [self.stores[i].frontier(self.latest[i]) for i in (0, 1)]
            if targets[0] is None and targets[1] is None:
                break
            d = turn if targets[turn] is not None else 1 - turn
            target = targets[d]
            self.stores[d].mark(target)
            turn = 1 - d
            self.stats.iterations += 1
            self.stats.queries += 1
            try:
                soln = solve(target.prefix, self.solver, self.initial)
            except SolverError as e:
                raise EngineError(str(e)) from e
            step = Iteration(driver=d + 1, condition=str(target.condition), sat=soln is not None)
            self.stats.history.append(step)
            if soln is None:
                self.stats.unsat += 1
                log.debug("P%d: %s unsat", d + 1, target.condition)
                continue
            r1, r2 = soln.inputs()
            outcomes = self.run_both(r1, r2)
            step.inputs, step.outcomes = (r1, r2), outcomes
            if not check_divergence(target.expected, self.latest[d]):
                step.diverged = True
                self.stats.divergences += 1
            log.debug("P%d drives %s with (%#x, %#x) -> %s, %s",
                      d + 1, target.condition, r1, r2, *outcomes)
            if compare_outcomes(*outcomes) is Relation.CONFLICT:
                return self.found(r1, r2, outcomes, d + 1, target.condition)
        return PossiblyEquivalent(self.stats)


def compare(p1, p2, fuel: int = DEFAULT_FUEL, depth: int = DEFAULT_DEPTH, *,
            inputs=DEFAULT_INPUTS, solver: Solver | None = None,
            mem_size: int = DEFAULT_MEM_SIZE) -> Verdict:
    """Search for an input pair on which ``p1`` and ``p2`` (word lists) differ."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    return _Search((list(p1), list(p2)), fuel, depth, solver, mem_size).search(inputs)
