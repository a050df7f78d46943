"""A small evaluator for the QF_ABV fragment the encoder emits.

Used to check solver models independently of the solver: every assertion in
a script is evaluated under the constants a model assigns.  Supports the
bitvector operations the encoder produces, ``ite``/``not``/``and``/``or``,
arrays via ``select``/``store``/``(as const ...)``, and the array shapes z3
prints in models (``as-array`` references and ``lambda``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .smt import ModelError, parse_model_values, parse_sexprs

__all__ = ["BV", "Array", "check_model", "evaluate_script"]


@dataclass(frozen=True)
class BV:
    value: int
    width: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value & ((1 << self.width) - 1))

    @property
    def signed(self) -> int:
        return self.value - (1 << self.width) if self.value >> (self.width - 1) else self.value


@dataclass
class Array:
    default: object = None
    entries: dict = field(default_factory=dict)
    fn: object = None  # callable(index BV) -> value, for lambda/as-array models

    def select(self, idx: BV):
        if idx.value in self.entries:
            return self.entries[idx.value]
        if self.fn is not None:
            return self.fn(idx)
        return self.default

    def store(self, idx: BV, val) -> "Array":
        return Array(self.default, {**self.entries, idx.value: val}, self.fn)


def _width_of(sort) -> int | None:
    if isinstance(sort, list) and sort[:2] == ["_", "BitVec"]:
        return int(sort[2])
    return None


def _zero_of(sort):
    w = _width_of(sort)
    if w is not None:
        return BV(0, w)
    if sort == "Bool":
        return False
    if isinstance(sort, list) and sort[0] == "Array":
        return Array(_zero_of(sort[2]))
    raise ModelError(f"unsupported sort {sort!r}")


def _udiv(a: BV, b: BV) -> BV:
    return BV((1 << a.width) - 1 if b.value == 0 else a.value // b.value, a.width)


def _urem(a: BV, b: BV) -> BV:
    return BV(a.value if b.value == 0 else a.value % b.value, a.width)


def _sdiv(a: BV, b: BV) -> BV:
    na, nb = a.signed < 0, b.signed < 0
    q = _udiv(BV(-a.value if na else a.value, a.width), BV(-b.value if nb else b.value, b.width))
    return BV(-q.value, a.width) if na != nb else q


def _srem(a: BV, b: BV) -> BV:
    na = a.signed < 0
    r = _urem(BV(-a.value if na else a.value, a.width), BV(-b.value if b.signed < 0 else b.value, b.width))
    return BV(-r.value, a.width) if na else r


_BINOPS = {
    "bvadd": lambda a, b: BV(a.value + b.value, a.width),
    "bvsub": lambda a, b: BV(a.value - b.value, a.width),
    "bvmul": lambda a, b: BV(a.value * b.value, a.width),
    "bvudiv": _udiv,
    "bvurem": _urem,
    "bvsdiv": _sdiv,
    "bvsrem": _srem,
    "bvslt": lambda a, b: a.signed < b.signed,
    "bvsle": lambda a, b: a.signed <= b.signed,
    "bvult": lambda a, b: a.value < b.value,
    "bvule": lambda a, b: a.value <= b.value,
    "bvand": lambda a, b: BV(a.value & b.value, a.width),
    "bvor": lambda a, b: BV(a.value | b.value, a.width),
}


class _Evaluator:
    def __init__(self, consts: dict, funs: dict):
        self.consts = consts
        self.funs = funs  # name -> (param names, body)
        self.probes: set[int] = set()  # array indices touched anywhere in the script

    def eval(self, e, scope=None):
        scope = scope or {}
        if isinstance(e, str):
            if e in scope:
                return scope[e]
            if e.startswith("#x"):
                return BV(int(e[2:], 16), 4 * (len(e) - 2))
            if e.startswith("#b"):
                return BV(int(e[2:], 2), len(e) - 2)
            if e == "true":
                return True
            if e == "false":
                return False
            if e in self.consts:
                return self.consts[e]
            if e in self.funs and not self.funs[e][0]:
                return self.eval(self.funs[e][1])
            raise ModelError(f"unknown symbol {e!r}")
        head, args = e[0], e[1:]
        if head == "_":
            if args[0].startswith("bv"):
                return BV(int(args[0][2:]), int(args[1]))
            if args[0] == "as-array":
                return self._fun_array(args[1])
            raise ModelError(f"unsupported indexed term {e!r}")
        if isinstance(head, list):
            if head[0] == "_" and head[1] == "extract":
                hi, lo = int(head[2]), int(head[3])
                x = self.eval(args[0], scope)
                return BV(x.value >> lo, hi - lo + 1)
            if head[0] == "_" and head[1] in ("sign_extend", "zero_extend"):
                k = int(head[2])
                x = self.eval(args[0], scope)
                v = x.signed if head[1] == "sign_extend" else x.value
                return BV(v, x.width + k)
            if head[0] == "as" and head[1] == "const":
                return Array(self.eval(args[0], scope))
            raise ModelError(f"unsupported application {e!r}")
        if head == "let":
            inner = dict(scope)
            for name, val in args[0]:
                inner[name] = self.eval(val, scope)
            return self.eval(args[1], inner)
        if head == "lambda":
            (pname, _), = args[0]
            body = args[1]
            return Array(fn=lambda idx: self.eval(body, {**scope, pname: idx}))
        vals = [self.eval(a, scope) for a in args]
        if head == "=":
            return all(self._equal(vals[0], v) for v in vals[1:])
        if head == "not":
            return not vals[0]
        if head == "and":
            return all(vals)
        if head == "or":
            return any(vals)
        if head == "=>":
            return (not vals[0]) or vals[1]
        if head == "ite":
            return vals[1] if vals[0] else vals[2]
        if head == "select":
            self.probes.add(vals[1].value)
            return vals[0].select(vals[1])
        if head == "store":
            self.probes.add(vals[1].value)
            return vals[0].store(vals[1], vals[2])
        if head in _BINOPS:
            out = vals[0]
            for v in vals[1:]:
                out = _BINOPS[head](out, v)
            return out
        if head in self.funs:
            params, body = self.funs[head]
            return self.eval(body, dict(zip(params, vals)))
        raise ModelError(f"unsupported operator {head!r}")

    def _equal(self, a, b) -> bool:
        if not isinstance(a, Array):
            return a == b
        # arrays are compared on every index the script touches, plus a far one
        # standing in for "everywhere else"
        keys = self.probes | a.entries.keys() | b.entries.keys() | {0xFFFFFFFC}
        return all(a.select(BV(k, 32)) == b.select(BV(k, 32)) for k in keys)

    def _fun_array(self, name):
        params, body = self.funs[name]
        return Array(fn=lambda idx: self.eval(body, {params[0]: idx}))


def evaluate_script(script: str, model_text: str) -> list[bool]:
    """Truth value of every assertion in ``script`` under ``model_text``.

    Declared constants missing from the model default to zero.
    """
    forms = parse_sexprs(script)
    model = parse_model_values(model_text)
    funs = {name: ([p[0] for p in params], body) for name, (params, _, body) in model.items()}
    ev = _Evaluator({}, funs)
    consts = {}
    for f in forms:
        if f[0] == "declare-const":
            name, sort = f[1], f[2]
            consts[name] = ev.eval(model[name][2]) if name in model else _zero_of(sort)
    ev.consts = consts
    asserts = [f[1] for f in forms if f[0] == "assert"]
    for a in asserts:  # first pass only collects array indices
        ev.eval(a)
    return [bool(ev.eval(a)) for a in asserts]


def check_model(script: str, model_text: str) -> bool:
    return all(evaluate_script(script, model_text))
