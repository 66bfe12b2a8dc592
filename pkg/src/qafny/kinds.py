"""Kinds, classical evaluation, free-variable loci and locus-domain checks.

A variable has kind C (classical constant), M (measurement result) or
Q n (an n-qubit array).  Classical variables are substituted by value
before loci are computed, so every range resolves to concrete indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import (OverlappingLoci, OverlappingQuantumOperands, RangeOutOfBounds, SymbolicBound, TypeMismatch,
                     UnboundVariable)
from .qstate import Locus, Range, alpha
from .syntax import (AExp, And, Apply, Assert, BExp, BinOp, BitRef, BoolLit, Call, CallProc, CIf, Cmp, Field, For,
                     LetC, LetM, MulMod, Neg, Not, Num, Or, PowMod, Program, QIf, QRef, RangeExpr, Reduce, Skip,
                     AddConst, Var)


@dataclass(frozen=True)
class Kind:
    tag: str  # "C", "M" or "Q"
    n: int = 0

    def __post_init__(self):
        if self.tag not in ("C", "M", "Q"):
            raise ValueError(f"unknown kind {self.tag!r}")
        if self.tag == "Q" and self.n < 1:
            raise ValueError("a quantum variable has at least one qubit")

    def __str__(self):
        return f"Q {self.n}" if self.tag == "Q" else self.tag


KC = Kind("C")
KM = Kind("M")


def KQ(n: int) -> Kind:
    return Kind("Q", n)


KindEnv = Dict[str, Kind]


@dataclass(frozen=True)
class MVal:
    """A measurement result: probability of the outcome and its value."""

    prob: float
    outcome: int

    def __post_init__(self):
        if not -1e-9 <= self.prob <= 1 + 1e-9:
            raise ValueError(f"probability {self.prob} outside [0, 1]")


def kind_env(program: Program) -> KindEnv:
    return {d.name: KQ(d.size) for d in program.decls}


def sizes_of(omega: Mapping[str, Kind]) -> Dict[str, int]:
    return {x: k.n for x, k in omega.items() if k.tag == "Q"}


# -- classical evaluation --------------------------------------------------

Values = Mapping[str, Union[int, float, MVal]]
QRead = Callable[[Range], int]


def _div(a, b):
    if b == 0:
        raise TypeMismatch("division by zero")
    if isinstance(a, int) and isinstance(b, int) and a % b == 0:
        return a // b
    return a / b


def eval_aexp(e: AExp, values: Values, sizes: Mapping[str, int], qread: Optional[QRead] = None):
    """Value of an arithmetic expression; quantum ranges go through ``qread``."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name == "pi" and e.name not in values:
            return math.pi
        if e.name not in values:
            raise UnboundVariable(f"unbound variable {e.name!r}")
        v = values[e.name]
        return v.outcome if isinstance(v, MVal) else v
    if isinstance(e, Field):
        v = values.get(e.name)
        if not isinstance(v, MVal):
            raise UnboundVariable(f"{e.name!r} is not a measurement result")
        return getattr(v, e.field)
    if isinstance(e, QRef):
        if qread is None:
            raise TypeMismatch(f"quantum range {e.rng.var} used in a classical expression")
        return qread(resolve_range(e.rng, values, sizes))
    if isinstance(e, Neg):
        return -eval_aexp(e.arg, values, sizes, qread)
    if isinstance(e, Call):
        if e.fn == "len":
            (a,) = e.args
            if isinstance(a, QRef):
                return resolve_range(a.rng, values, sizes).width
            if isinstance(a, Var) and a.name in sizes:
                return sizes[a.name]
            raise TypeMismatch("len expects a quantum variable")
        args = [eval_aexp(a, values, sizes, qread) for a in e.args]
        if e.fn == "sqrt":
            return math.sqrt(args[0])
        if e.fn == "alpha":
            return alpha(args[0])
        if e.fn == "abs":
            return abs(args[0])
        if e.fn == "log2":
            return int(args[0]).bit_length() - 1
        if e.fn == "min":
            return min(args)
        if e.fn == "max":
            return max(args)
        if e.fn == "pow":
            return pow(*[int(a) for a in args])
        raise TypeMismatch(f"unknown function {e.fn}")
    a = eval_aexp(e.left, values, sizes, qread)
    b = eval_aexp(e.right, values, sizes, qread)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        return _div(a, b)
    if e.op == "%":
        if b == 0:
            raise TypeMismatch("modulo by zero")
        return a % b
    if isinstance(a, int) and isinstance(b, int) and b >= 0:
        return a ** b
    return float(a) ** b


def eval_int(e: AExp, values: Values, sizes: Mapping[str, int]) -> int:
    v = eval_aexp(e, values, sizes)
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    if not isinstance(v, int):
        raise TypeMismatch(f"expected an integer but got {v!r}")
    return v


def _cmp(op: str, a, b) -> bool:
    return {"<": a < b, "<=": a <= b, "==": a == b, "!=": a != b, ">": a > b, ">=": a >= b}[op]


def eval_bexp(b: BExp, values: Values, sizes: Mapping[str, int], qread: Optional[QRead] = None) -> bool:
    """Truth value of a guard; a ``@`` comparison reads as its computed value."""
    if isinstance(b, BoolLit):
        return b.value
    if isinstance(b, BitRef):
        if qread is None:
            raise TypeMismatch("qubit used in a classical guard")
        return qread(resolve_range(b.rng, values, sizes)) == 1
    if isinstance(b, Cmp):
        return _cmp(b.op, eval_aexp(b.left, values, sizes, qread), eval_aexp(b.right, values, sizes, qread))
    if isinstance(b, Not):
        return not eval_bexp(b.arg, values, sizes, qread)
    if isinstance(b, And):
        return eval_bexp(b.left, values, sizes, qread) and eval_bexp(b.right, values, sizes, qread)
    return eval_bexp(b.left, values, sizes, qread) or eval_bexp(b.right, values, sizes, qread)


def resolve_range(r: RangeExpr, values: Values, sizes: Mapping[str, int]) -> Range:
    if r.var not in sizes:
        raise UnboundVariable(f"unknown quantum variable {r.var!r}")
    n = sizes[r.var]
    if r.lo is None:
        return Range(r.var, 0, n)
    try:
        lo = eval_int(r.lo, values, sizes)
        hi = lo + 1 if r.hi is None else eval_int(r.hi, values, sizes)
    except UnboundVariable as exc:
        raise SymbolicBound(f"range of {r.var} is not closed: {exc}") from None
    if not 0 <= lo <= hi <= n:
        raise RangeOutOfBounds(f"{r.var}[{lo},{hi}) is outside [0,{n})")
    return Range(r.var, lo, hi)


def resolve_locus(loc: Sequence[RangeExpr], values: Values, sizes: Mapping[str, int]) -> Locus:
    rs = [resolve_range(r, values, sizes) for r in loc]
    for i in range(len(rs)):
        for j in range(i + 1, len(rs)):
            if rs[i].overlaps(rs[j]):
                raise OverlappingLoci(f"{rs[i]} and {rs[j]} overlap")
    return Locus.make(rs)


# -- kind checking ---------------------------------------------------------

KindOrLocus = Union[Kind, Locus]


def _join(a: KindOrLocus, b: KindOrLocus) -> KindOrLocus:
    if isinstance(a, Locus) and isinstance(b, Locus):
        if a.overlaps(b):
            raise OverlappingQuantumOperands(f"{a} and {b} share qubits")
        return a + b
    if isinstance(a, Locus):
        return a
    if isinstance(b, Locus):
        return b
    return KM if KM in (a, b) else KC


def _values_for(omega: Mapping[str, Kind], values: Optional[Values]) -> Values:
    return dict(values or {})


def kind_of(omega: Mapping[str, Kind], t: Union[AExp, BExp], values: Optional[Values] = None) -> KindOrLocus:
    """C or M for scalar terms; the locus of the mentioned qubits otherwise."""
    values = _values_for(omega, values)
    sizes = sizes_of(omega)

    def go(t) -> KindOrLocus:
        if isinstance(t, (Num, BoolLit)):
            return KC
        if isinstance(t, Var):
            if t.name == "pi" and t.name not in omega:
                return KC
            if t.name not in omega:
                raise UnboundVariable(f"unbound variable {t.name!r}")
            k = omega[t.name]
            if k.tag == "Q":
                return Locus.of(t.name, 0, k.n)
            return k
        if isinstance(t, Field):
            if omega.get(t.name) != KM:
                raise UnboundVariable(f"{t.name!r} is not a measurement result")
            return KM
        if isinstance(t, QRef):
            return Locus.make([resolve_range(t.rng, values, sizes)])
        if isinstance(t, BitRef):
            r = resolve_range(t.rng, values, sizes)
            if r.width != 1:
                raise TypeMismatch(f"guard qubit {r} is not a single qubit")
            return Locus.make([r])
        if isinstance(t, Neg):
            return go(t.arg)
        if isinstance(t, Not):
            return go(t.arg)
        if isinstance(t, Call):
            if t.fn == "len":
                return KC
            out: KindOrLocus = KC
            for a in t.args:
                out = _join(out, go(a))
            return out
        if isinstance(t, (BinOp,)):
            return _join(go(t.left), go(t.right))
        if isinstance(t, (And, Or)):
            out = _join(go(t.left), go(t.right))
            if isinstance(out, Locus):
                raise TypeMismatch("quantum guards cannot be combined with && or ||")
            return out
        if isinstance(t, Cmp):
            out = _join(go(t.left), go(t.right))
            if t.at is None:
                if isinstance(out, Locus):
                    raise TypeMismatch("a quantum comparison needs a result qubit '@ x[i]'")
                return out
            r = resolve_range(t.at, values, sizes)
            if r.width != 1:
                raise TypeMismatch(f"result qubit {r} is not a single qubit")
            return _join(out if isinstance(out, Locus) else Locus(), Locus.make([r]))
        raise TypeError(t)

    return go(t)


def fv(omega: Mapping[str, Kind], t, values: Optional[Values] = None) -> Locus:
    """Locus of every qubit mentioned by ``t``, in order of first mention."""
    values = _values_for(omega, values)
    seen: List = []
    for q in _fv_qubits(omega, t, values):
        if q not in seen:
            seen.append(q)
    return Locus.from_qubits(seen)


def _fv_qubits(omega, t, values) -> List:
    sizes = sizes_of(omega)
    if isinstance(t, (Num, Var, Field, BoolLit, Skip, Assert)) or t is None:
        if isinstance(t, Var) and omega.get(t.name, KC).tag == "Q":
            return Locus.of(t.name, 0, omega[t.name].n).qubits()
        return []
    if isinstance(t, (QRef, BitRef)):
        return resolve_range(t.rng, values, sizes).qubits()
    if isinstance(t, (Neg, Not)):
        return _fv_qubits(omega, t.arg, values)
    if isinstance(t, Call):
        if t.fn == "len":
            return []
        return [q for a in t.args for q in _fv_qubits(omega, a, values)]
    if isinstance(t, (BinOp, And, Or)):
        return _fv_qubits(omega, t.left, values) + _fv_qubits(omega, t.right, values)
    if isinstance(t, Cmp):
        out = _fv_qubits(omega, t.left, values) + _fv_qubits(omega, t.right, values)
        if t.at is not None:
            out += resolve_range(t.at, values, sizes).qubits()
        return out
    if isinstance(t, tuple):
        return [q for s in t for q in _fv_qubits(omega, s, values)]
    if isinstance(t, Apply):
        return resolve_locus(t.locus, values, sizes).qubits()
    if isinstance(t, QIf):
        return _fv_qubits(omega, t.guard, values) + _fv_qubits(omega, t.body, values)
    if isinstance(t, CIf):
        out = _fv_qubits(omega, t.guard, values) + _fv_qubits(omega, t.then, values)
        return out + (_fv_qubits(omega, t.orelse, values) if t.orelse else [])
    if isinstance(t, LetC):
        v = eval_aexp(t.value, values, sizes)
        return _fv_qubits(omega, t.body, {**values, t.var: v})
    if isinstance(t, LetM):
        inner = dict(omega)
        inner[t.var] = KM
        return Locus.of(t.target, 0, sizes[t.target]).qubits() + _fv_qubits(inner, t.body, values)
    if isinstance(t, For):
        lo, hi = eval_int(t.lo, values, sizes), eval_int(t.hi, values, sizes)
        out = []
        for j in range(lo, hi):
            vj = {**values, t.var: j}
            out += _fv_qubits(omega, t.guard, vj) + _fv_qubits(omega, t.body, vj)
        return out
    if isinstance(t, CallProc):
        raise TypeMismatch("procedure calls must be inlined before computing free qubits")
    raise TypeError(t)


def wf_locus_domain(omega: Mapping[str, Kind], loci: Iterable[Locus]) -> None:
    """Every range lies inside its declaration and all ranges are disjoint."""
    seen: List[Range] = []
    for l in loci:
        for r in l.ranges:
            k = omega.get(r.var)
            if k is None or k.tag != "Q":
                raise UnboundVariable(f"unknown quantum variable {r.var!r}")
            if r.hi > k.n:
                raise RangeOutOfBounds(f"{r} is outside [0,{k.n})")
            for s in seen:
                if r.overlaps(s):
                    raise OverlappingLoci(f"{r} overlaps {s}")
            seen.append(r)


# -- procedure inlining ----------------------------------------------------

def inline_procs(program: Program) -> Program:
    """Expand every procedure call by renaming its parameters to the arguments."""
    procs = {p.name: p for p in program.procs}
    sizes = program.sizes()

    def body(stmts, depth=0):
        if depth > 32:
            raise TypeMismatch("procedure inlining does not terminate")
        out = []
        for s in stmts:
            out.extend(stmt(s, depth))
        return tuple(out)

    def stmt(s, depth):
        if isinstance(s, CallProc):
            proc = procs.get(s.name)
            if proc is None:
                raise UnboundVariable(f"unknown procedure {s.name!r}")
            if len(proc.params) != len(s.args):
                raise TypeMismatch(f"{s.name} expects {len(proc.params)} arguments")
            sub = dict(zip(proc.params, s.args))
            return list(body(_subst_stmts(proc.body, sub, sizes), depth + 1))
        if isinstance(s, (LetC, LetM, QIf, For)):
            return [replace(s, body=body(s.body, depth))]
        if isinstance(s, CIf):
            return [replace(s, then=body(s.then, depth), orelse=None if s.orelse is None else body(s.orelse, depth))]
        return [s]

    return Program(program.decls, body(program.body), ())


def _offset(arg: RangeExpr, e: AExp, sizes) -> AExp:
    if arg.lo is None:
        return e
    return BinOp("+", arg.lo, e)


def _arg_width(arg: RangeExpr, sizes) -> AExp:
    if arg.lo is None:
        return Num(sizes[arg.var])
    if arg.hi is None:
        return Num(1)
    return BinOp("-", arg.hi, arg.lo)


def _subst_range(r: RangeExpr, sub, sizes) -> RangeExpr:
    r = RangeExpr(r.var, None if r.lo is None else _subst_aexp(r.lo, sub, sizes),
                  None if r.hi is None else _subst_aexp(r.hi, sub, sizes))
    if r.var not in sub:
        return r
    arg = sub[r.var]
    if r.lo is None:
        return arg
    lo = _offset(arg, r.lo, sizes)
    hi = None if r.hi is None else _offset(arg, r.hi, sizes)
    return RangeExpr(arg.var, lo, hi)


def _subst_aexp(e, sub, sizes):
    if isinstance(e, QRef):
        return QRef(_subst_range(e.rng, sub, sizes))
    if isinstance(e, Call) and e.fn == "len" and len(e.args) == 1:
        a = e.args[0]
        if isinstance(a, QRef) and a.rng.lo is None and a.rng.var in sub:
            return _arg_width(sub[a.rng.var], sizes)
    if isinstance(e, Call):
        return Call(e.fn, tuple(_subst_aexp(a, sub, sizes) for a in e.args))
    if isinstance(e, BinOp):
        return BinOp(e.op, _subst_aexp(e.left, sub, sizes), _subst_aexp(e.right, sub, sizes))
    if isinstance(e, Neg):
        return Neg(_subst_aexp(e.arg, sub, sizes))
    return e


def _subst_bexp(b, sub, sizes):
    if b is None:
        return None
    if isinstance(b, BitRef):
        return BitRef(_subst_range(b.rng, sub, sizes))
    if isinstance(b, Cmp):
        return Cmp(b.op, _subst_aexp(b.left, sub, sizes), _subst_aexp(b.right, sub, sizes),
                   None if b.at is None else _subst_range(b.at, sub, sizes))
    if isinstance(b, Not):
        return Not(_subst_bexp(b.arg, sub, sizes))
    if isinstance(b, (And, Or)):
        return type(b)(_subst_bexp(b.left, sub, sizes), _subst_bexp(b.right, sub, sizes))
    return b


def _subst_unitary(u, sub, sizes):
    if isinstance(u, AddConst):
        return AddConst(_subst_aexp(u.k, sub, sizes))
    if isinstance(u, (MulMod, PowMod)):
        return type(u)(_subst_aexp(u.a, sub, sizes), _subst_aexp(u.modulus, sub, sizes))
    if isinstance(u, Reduce):
        return Reduce(u.bits, _subst_aexp(u.n, sub, sizes))
    return u


def _subst_stmts(stmts, sub, sizes):
    return tuple(_subst_stmt(s, sub, sizes) for s in stmts)


def _subst_stmt(s, sub, sizes):
    if isinstance(s, Apply):
        return replace(s, locus=tuple(_subst_range(r, sub, sizes) for r in s.locus),
                       op=_subst_unitary(s.op, sub, sizes))
    if isinstance(s, QIf):
        return replace(s, guard=_subst_bexp(s.guard, sub, sizes), body=_subst_stmts(s.body, sub, sizes))
    if isinstance(s, CIf):
        return replace(s, guard=_subst_bexp(s.guard, sub, sizes), then=_subst_stmts(s.then, sub, sizes),
                       orelse=None if s.orelse is None else _subst_stmts(s.orelse, sub, sizes))
    if isinstance(s, For):
        return replace(s, lo=_subst_aexp(s.lo, sub, sizes), hi=_subst_aexp(s.hi, sub, sizes),
                       guard=_subst_bexp(s.guard, sub, sizes), body=_subst_stmts(s.body, sub, sizes))
    if isinstance(s, LetC):
        return replace(s, value=_subst_aexp(s.value, sub, sizes), body=_subst_stmts(s.body, sub, sizes))
    if isinstance(s, LetM):
        target = s.target
        if target in sub:
            arg = sub[target]
            if arg.lo is not None:
                raise TypeMismatch("only a whole variable can be measured")
            target = arg.var
        return replace(s, target=target, body=_subst_stmts(s.body, sub, sizes))
    if isinstance(s, CallProc):
        return replace(s, args=tuple(_subst_range(r, sub, sizes) for r in s.args))
    return s


def check_binders(program: Program) -> None:
    """Loop and let binders must be fresh with respect to enclosing binders."""
    declared = set(program.sizes())

    def walk(stmts, bound):
        for s in stmts:
            if isinstance(s, (For, LetC, LetM)):
                if s.var in bound or s.var in declared:
                    raise TypeMismatch(f"binder {s.var!r} shadows an enclosing binder")
                walk(s.body, bound | {s.var})
            elif isinstance(s, QIf):
                walk(s.body, bound)
            elif isinstance(s, CIf):
                walk(s.then, bound)
                walk(s.orelse or (), bound)

    walk(program.body, frozenset())


# -- quantum guards --------------------------------------------------------

def guard_function(b: BExp, values: Values, sizes: Mapping[str, int], locus: Locus) -> Callable[[str], Tuple[str, bool]]:
    """Per-basis action of a quantum guard over the bits of ``locus``.

    Returns a function from the locus bits to the bits after the guard's
    side effect and the guard's truth value.  A comparison ``a < b @ x[i]``
    XORs its result into ``x[i]`` and is true when the new bit is 1; a
    bare qubit is true when it is 1 and changes nothing.
    """
    pos = {q: i for i, q in enumerate(locus.qubits())}

    def reader(bits: str) -> QRead:
        def read(r: Range) -> int:
            return int("".join(bits[pos[q]] for q in r.qubits())[::-1] or "0", 2)
        return read

    def go(g, bits: str) -> Tuple[str, bool]:
        if isinstance(g, BitRef):
            r = resolve_range(g.rng, values, sizes)
            return bits, bits[pos[r.qubits()[0]]] == "1"
        if isinstance(g, Not):
            out, t = go(g.arg, bits)
            return out, not t
        if isinstance(g, Cmp) and g.at is not None:
            v = _cmp(g.op, eval_aexp(g.left, values, sizes, reader(bits)),
                     eval_aexp(g.right, values, sizes, reader(bits)))
            i = pos[resolve_range(g.at, values, sizes).qubits()[0]]
            new = "1" if (bits[i] == "1") != v else "0"
            return bits[:i] + new + bits[i + 1:], new == "1"
        raise TypeMismatch("unsupported quantum guard")

    return lambda bits: go(b, bits)


def guard_truth(b: BExp, values: Values, sizes: Mapping[str, int], locus: Locus) -> Callable[[str], bool]:
    """Truth of a guard read off a basis without applying its side effect.

    For ``a < b @ x[i]`` this is the stored result bit ``x[i]``.
    """
    pos = {q: i for i, q in enumerate(locus.qubits())}

    def go(g, bits: str) -> bool:
        if isinstance(g, BitRef):
            return bits[pos[resolve_range(g.rng, values, sizes).qubits()[0]]] == "1"
        if isinstance(g, Not):
            return not go(g.arg, bits)
        if isinstance(g, Cmp) and g.at is not None:
            return bits[pos[resolve_range(g.at, values, sizes).qubits()[0]]] == "1"
        raise TypeMismatch("unsupported quantum guard")

    return lambda bits: go(b, bits)
