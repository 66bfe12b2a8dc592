"""OQASM: the entanglement-free oracle language.

Syntax, the Nor/Phi basis-tracking type system, the per-qubit state
semantics, syntactic inversion, the QFT adder builders and lowering to
gates.  Inside OQASM a register is read big-endian by ``QFT``: qubit 0 is
the most significant bit of ``|y>``.  The adder sandwiches itself in
``Rev`` so that its operands are little-endian numbers, as in the rest of
the toolchain.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from . import gates as G
from .errors import (BasisMismatch, FreshnessViolation, IllFormedState, NonNeutralShiftUnderCU,
                     TypeMismatch, UnsupportedOracleLowering)
from .lexer import TokenStream

Pos = Tuple[str, int]


# -- syntax ----------------------------------------------------------------

@dataclass(frozen=True)
class ID:
    p: Pos


@dataclass(frozen=True)
class X:
    p: Pos


@dataclass(frozen=True)
class RZ:
    q: int
    p: Pos


@dataclass(frozen=True)
class RZinv:
    q: int
    p: Pos


@dataclass(frozen=True)
class SR:
    m: int
    x: str


@dataclass(frozen=True)
class SRinv:
    m: int
    x: str


@dataclass(frozen=True)
class QFT:
    n: int
    x: str


@dataclass(frozen=True)
class RQFT:
    n: int
    x: str


@dataclass(frozen=True)
class CU:
    p: Pos
    body: "OqInstr"


@dataclass(frozen=True)
class Lshift:
    x: str


@dataclass(frozen=True)
class Rshift:
    x: str


@dataclass(frozen=True)
class Rev:
    x: str


@dataclass(frozen=True)
class Seq:
    first: "OqInstr"
    second: "OqInstr"


OqInstr = Union[ID, X, RZ, RZinv, SR, SRinv, QFT, RQFT, CU, Lshift, Rshift, Rev, Seq]


def seq(*instrs: OqInstr) -> OqInstr:
    """Right-nested sequence; a single instruction is returned as is."""
    if not instrs:
        raise ValueError("empty OQASM sequence")
    out = instrs[-1]
    for i in reversed(instrs[:-1]):
        out = Seq(i, out)
    return out


def flatten_seq(i: OqInstr) -> List[OqInstr]:
    if isinstance(i, Seq):
        return flatten_seq(i.first) + flatten_seq(i.second)
    return [i]


# -- text ------------------------------------------------------------------

_POS_OPS = {"ID": ID, "X": X}
_ROT_OPS = {"RZ": RZ, "RZinv": RZinv}
_VAR_INT_OPS = {"SR": SR, "SRinv": SRinv, "QFT": QFT, "RQFT": RQFT}
_VAR_OPS = {"Lshift": Lshift, "Rshift": Rshift, "Rev": Rev}
KEYWORDS = set(_POS_OPS) | set(_ROT_OPS) | set(_VAR_INT_OPS) | set(_VAR_OPS) | {"CU"}


def _parse_pos(ts: TokenStream) -> Pos:
    ts.expect("(")
    x = ts.ident()
    ts.expect(",")
    n = ts.integer()
    ts.expect(")")
    return (x, n)


def parse_instr(ts: TokenStream) -> OqInstr:
    t = ts.peek()
    if t.kind != "ident" or t.text not in KEYWORDS:
        ts.error(f"expected an OQASM instruction but found {t.text!r}")
    op = ts.next().text
    if op in _POS_OPS:
        return _POS_OPS[op](_parse_pos(ts))
    if op in _ROT_OPS:
        q = ts.integer()
        return _ROT_OPS[op](q, _parse_pos(ts))
    if op in _VAR_INT_OPS:
        n = ts.integer()
        return _VAR_INT_OPS[op](n, ts.ident())
    if op in _VAR_OPS:
        return _VAR_OPS[op](ts.ident())
    p = _parse_pos(ts)
    if ts.accept("{"):
        body = parse_instrs(ts, "}")
        ts.expect("}")
    else:
        body = parse_instr(ts)
    return CU(p, body)


def parse_instrs(ts: TokenStream, stop: Optional[str] = None) -> OqInstr:
    instrs = []
    while not ts.at_eof() and not (stop and ts.at(stop)):
        instrs.append(parse_instr(ts))
        while ts.accept(";"):
            pass
    if not instrs:
        ts.error("empty OQASM block")
    return seq(*instrs)


def parse_oqasm(text: str) -> OqInstr:
    ts = TokenStream(text)
    out = parse_instrs(ts)
    if not ts.at_eof():
        ts.error(f"unexpected {ts.peek().text!r}")
    return out


def _fmt_pos(p: Pos) -> str:
    return f"({p[0]},{p[1]})"


def _fmt_one(i: OqInstr, sep: str) -> str:
    if isinstance(i, (ID, X)):
        return f"{type(i).__name__} {_fmt_pos(i.p)}"
    if isinstance(i, (RZ, RZinv)):
        return f"{type(i).__name__} {i.q} {_fmt_pos(i.p)}"
    if isinstance(i, (SR, SRinv)):
        return f"{type(i).__name__} {i.m} {i.x}"
    if isinstance(i, (QFT, RQFT)):
        return f"{type(i).__name__} {i.n} {i.x}"
    if isinstance(i, (Lshift, Rshift, Rev)):
        return f"{type(i).__name__} {i.x}"
    if isinstance(i, CU):
        body = flatten_seq(i.body)
        if len(body) == 1 and not isinstance(body[0], CU):
            return f"CU {_fmt_pos(i.p)} {_fmt_one(body[0], sep)}"
        return "CU " + _fmt_pos(i.p) + " { " + sep.join(_fmt_one(b, sep) for b in body) + " }"
    raise TypeError(i)


def print_oqasm(i: OqInstr, inline: bool = False) -> str:
    """One instruction per line, or ``; ``-separated when ``inline``."""
    parts = [_fmt_one(x, "; ") for x in flatten_seq(i)]
    return "; ".join(parts) if inline else "\n".join(parts) + "\n"


# -- typing ----------------------------------------------------------------

NOR = ("Nor",)


def phi(n: int) -> Tuple[str, int]:
    return ("Phi", n)


def _check_pos(sizes: Dict[str, int], p: Pos):
    if p[0] not in sizes:
        raise TypeMismatch(f"unknown OQASM variable {p[0]!r}")
    if not 0 <= p[1] < sizes[p[0]]:
        raise TypeMismatch(f"position {_fmt_pos(p)} outside size {sizes[p[0]]}")


def _check_var(sizes: Dict[str, int], x: str):
    if x not in sizes:
        raise TypeMismatch(f"unknown OQASM variable {x!r}")


def positions_used(i: OqInstr, sizes: Dict[str, int]) -> set:
    if isinstance(i, (ID, X, RZ, RZinv)):
        return {i.p}
    if isinstance(i, (SR, SRinv)):
        return {(i.x, k) for k in range(i.m + 1)}
    if isinstance(i, (QFT, RQFT, Lshift, Rshift, Rev)):
        return {(i.x, k) for k in range(sizes[i.x])}
    if isinstance(i, CU):
        return {i.p} | positions_used(i.body, sizes)
    return positions_used(i.first, sizes) | positions_used(i.second, sizes)


def shift_perm(i: OqInstr, sizes: Dict[str, int]) -> Dict[str, List[int]]:
    """Net slot permutation per variable; ``perm[k]`` is the old slot now at k."""
    out: Dict[str, List[int]] = {}
    for ins in flatten_seq(i):
        if isinstance(ins, (Lshift, Rshift, Rev)):
            d = sizes[ins.x]
            cur = out.get(ins.x, list(range(d)))
            out[ins.x] = [cur[j] for j in _slot_map(ins, d)]
    return out


def _slot_map(ins: OqInstr, d: int) -> List[int]:
    if isinstance(ins, Lshift):
        return [(k - 1) % d for k in range(d)]
    if isinstance(ins, Rshift):
        return [(k + 1) % d for k in range(d)]
    return [d - 1 - k for k in range(d)]


def is_neutral(i: OqInstr, sizes: Dict[str, int]) -> bool:
    return all(p == sorted(p) for p in shift_perm(i, sizes).values())


def oq_typecheck(sizes: Dict[str, int], env: Dict[str, tuple], i: OqInstr) -> Dict[str, tuple]:
    """Type ``i`` from basis environment ``env``; returns the output environment."""
    env = dict(env)
    for ins in flatten_seq(i):
        env = _type_one(sizes, env, ins)
    return env


def _need_nor(env, x, what):
    if env.get(x) != NOR:
        raise BasisMismatch(f"{what} needs {x} in the Nor basis, found {env.get(x)}")


def _type_one(sizes, env, ins):
    if isinstance(ins, ID):
        _check_pos(sizes, ins.p)
    elif isinstance(ins, (X, RZ, RZinv)):
        _check_pos(sizes, ins.p)
        _need_nor(env, ins.p[0], type(ins).__name__)
    elif isinstance(ins, (SR, SRinv)):
        _check_var(sizes, ins.x)
        t = env.get(ins.x)
        if not (t and t[0] == "Phi" and 0 <= ins.m < t[1]):
            raise BasisMismatch(f"{type(ins).__name__} {ins.m} needs {ins.x} in Phi(n) with {ins.m} < n, found {t}")
    elif isinstance(ins, QFT):
        _check_var(sizes, ins.x)
        _need_nor(env, ins.x, "QFT")
        if not 0 < ins.n <= sizes[ins.x]:
            raise TypeMismatch(f"QFT precision {ins.n} outside (0, {sizes[ins.x]}]")
        env[ins.x] = phi(ins.n)
    elif isinstance(ins, RQFT):
        _check_var(sizes, ins.x)
        if env.get(ins.x) != phi(ins.n):
            raise BasisMismatch(f"RQFT {ins.n} needs {ins.x} in Phi({ins.n}), found {env.get(ins.x)}")
        env[ins.x] = NOR
    elif isinstance(ins, (Lshift, Rshift, Rev)):
        _check_var(sizes, ins.x)
        _need_nor(env, ins.x, type(ins).__name__)
    elif isinstance(ins, CU):
        _check_pos(sizes, ins.p)
        _need_nor(env, ins.p[0], "CU control")
        if ins.p in positions_used(ins.body, sizes):
            raise FreshnessViolation(f"CU control {_fmt_pos(ins.p)} is used by its body")
        if not is_neutral(ins.body, sizes):
            raise NonNeutralShiftUnderCU(f"CU body under {_fmt_pos(ins.p)} does not restore its shifts")
        out = oq_typecheck(sizes, env, ins.body)
        if out != env:
            raise BasisMismatch(f"CU body under {_fmt_pos(ins.p)} changes bases {env} -> {out}")
    else:
        raise TypeError(ins)
    return env


# -- state and semantics ---------------------------------------------------

@dataclass(frozen=True)
class OqQubit:
    """``alpha(g)`` times either a Nor bit or a Phi phase (in turns)."""

    g: Fraction
    basis: str  # "Nor" or "Phi"
    val: Union[int, Fraction]


OqState = Dict[str, Tuple[OqQubit, ...]]

_ZERO = Fraction(0)


def _f(r) -> Fraction:
    return Fraction(r) % 1


def nor_state(values: Dict[str, int], sizes: Dict[str, int]) -> OqState:
    """All-Nor state; ``values[x]`` is read little-endian into x's slots."""
    return {x: tuple(OqQubit(_ZERO, "Nor", (values.get(x, 0) >> k) & 1) for k in range(n))
            for x, n in sizes.items()}


def bits_state(bits: Dict[str, str]) -> OqState:
    return {x: tuple(OqQubit(_ZERO, "Nor", int(b)) for b in s) for x, s in bits.items()}


def read_nor(state: OqState, x: str) -> int:
    """Little-endian integer held by an all-Nor variable."""
    out = 0
    for k, q in enumerate(state[x]):
        if q.basis != "Nor":
            raise IllFormedState(f"{x} is not in the Nor basis")
        out |= q.val << k
    return out


def read_bits(state: OqState, x: str) -> str:
    if any(q.basis != "Nor" for q in state[x]):
        raise IllFormedState(f"{x} is not in the Nor basis")
    return "".join(str(q.val) for q in state[x])


def global_phase(state: OqState) -> Fraction:
    return sum((q.g for qs in state.values() for q in qs), _ZERO) % 1


def _set(state: OqState, x: str, k: int, q: OqQubit) -> OqState:
    qs = list(state[x])
    qs[k] = q
    out = dict(state)
    out[x] = tuple(qs)
    return out


def _add_phase(q: OqQubit, r: Fraction) -> OqQubit:
    if q.basis == "Nor":
        return OqQubit((q.g + r * q.val) % 1, "Nor", q.val) if q.val else q
    return OqQubit(q.g, "Phi", (q.val + r) % 1)


def oq_eval(sizes: Dict[str, int], i: OqInstr, state: OqState) -> OqState:
    for ins in flatten_seq(i):
        state = _eval_one(sizes, ins, state)
    return state


def _eval_one(sizes, ins, st):
    if isinstance(ins, ID):
        return st
    if isinstance(ins, X):
        x, k = ins.p
        q = st[x][k]
        if q.basis == "Nor":
            return _set(st, x, k, OqQubit(q.g, "Nor", 1 - q.val))
        # X (|0> + a(r)|1>) = a(r) (|0> + a(-r)|1>)
        return _set(st, x, k, OqQubit((q.g + q.val) % 1, "Phi", (-q.val) % 1))
    if isinstance(ins, (RZ, RZinv)):
        x, k = ins.p
        r = Fraction(1, 2 ** ins.q) * (1 if isinstance(ins, RZ) else -1)
        return _set(st, x, k, _add_phase(st[x][k], r))
    if isinstance(ins, CU):
        x, k = ins.p
        q = st[x][k]
        if q.basis != "Nor":
            raise IllFormedState(f"CU control {_fmt_pos(ins.p)} is not in the Nor basis")
        return oq_eval(sizes, ins.body, st) if q.val else st
    if isinstance(ins, (SR, SRinv)):
        sign = 1 if isinstance(ins, SR) else -1
        for k in range(ins.m + 1):
            q = st[ins.x][k]
            if q.basis != "Phi":
                raise IllFormedState(f"{type(ins).__name__} on {ins.x} outside the Phi basis")
            st = _set(st, ins.x, k, _add_phase(q, sign * Fraction(1, 2 ** (ins.m - k + 1))))
        return st
    if isinstance(ins, QFT):
        qs = st[ins.x]
        if any(q.basis != "Nor" for q in qs):
            raise IllFormedState(f"QFT on {ins.x} outside the Nor basis")
        d = len(qs)
        y = sum(q.val << (d - 1 - k) for k, q in enumerate(qs))
        out = dict(st)
        out[ins.x] = tuple(OqQubit(q.g, "Phi", Fraction(y, 2 ** ins.n) * 2 ** k % 1) for k, q in enumerate(qs))
        return out
    if isinstance(ins, RQFT):
        qs = st[ins.x]
        if any(q.basis != "Phi" for q in qs):
            raise IllFormedState(f"RQFT on {ins.x} outside the Phi basis")
        d, n = len(qs), ins.n
        v = qs[0].val * 2 ** n
        if v.denominator != 1:
            raise IllFormedState(f"{ins.x} does not hold a Phi({n}) value")
        y = int(v) % 2 ** n
        for k, q in enumerate(qs):
            if (Fraction(y, 2 ** n) * 2 ** k - q.val) % 1 != 0:
                raise IllFormedState(f"{ins.x} does not hold a Phi({n}) value")
        out = dict(st)
        out[ins.x] = tuple(OqQubit(q.g, "Nor", (y >> (d - 1 - k)) & 1) for k, q in enumerate(qs))
        return out
    if isinstance(ins, (Lshift, Rshift, Rev)):
        qs = st[ins.x]
        out = dict(st)
        out[ins.x] = tuple(qs[j] for j in _slot_map(ins, len(qs)))
        return out
    raise TypeError(ins)


def oq_wellformed(sizes: Dict[str, int], env: Dict[str, tuple], state: OqState) -> bool:
    """Every Nor variable is all-Nor and every Phi(n) variable encodes one integer."""
    for x, n in sizes.items():
        qs = state.get(x)
        if qs is None or len(qs) != n:
            return False
        t = env.get(x, NOR)
        if t == NOR:
            if any(q.basis != "Nor" or q.val not in (0, 1) for q in qs):
                return False
            continue
        prec = t[1]
        if any(q.basis != "Phi" for q in qs):
            return False
        v = qs[0].val * 2 ** prec
        if v.denominator != 1:
            return False
        if any((Fraction(int(v), 2 ** prec) * 2 ** k - q.val) % 1 != 0 for k, q in enumerate(qs)):
            return False
    return True


# -- inversion -------------------------------------------------------------

def oq_invert(i: OqInstr) -> OqInstr:
    if isinstance(i, (ID, X, Rev)):
        return i
    if isinstance(i, RZ):
        return RZinv(i.q, i.p)
    if isinstance(i, RZinv):
        return RZ(i.q, i.p)
    if isinstance(i, SR):
        return SRinv(i.m, i.x)
    if isinstance(i, SRinv):
        return SR(i.m, i.x)
    if isinstance(i, QFT):
        return RQFT(i.n, i.x)
    if isinstance(i, RQFT):
        return QFT(i.n, i.x)
    if isinstance(i, Lshift):
        return Rshift(i.x)
    if isinstance(i, Rshift):
        return Lshift(i.x)
    if isinstance(i, CU):
        return CU(i.p, oq_invert(i.body))
    return Seq(oq_invert(i.second), oq_invert(i.first))


# -- builders --------------------------------------------------------------

def rz_adder_core(a: str, b: str, n: int) -> OqInstr:
    """``CU (a,m) (SR m b)`` for m = n-1 down to 0, closed by ``ID (a,0)``."""
    return seq(*[CU((a, m), SR(m, b)) for m in reversed(range(n))], ID((a, 0)))


def build_rz_adder(a: str, b: str, n: int) -> OqInstr:
    """b := (a + b) mod 2^n with a and b little-endian."""
    return seq(Rev(a), Rev(b), QFT(n, b), rz_adder_core(a, b, n), RQFT(n, b), Rev(b), Rev(a))


def build_rz_subtractor(a: str, b: str, n: int) -> OqInstr:
    """b := (b - a) mod 2^n, the inverse of the adder."""
    return oq_invert(build_rz_adder(a, b, n))


def build_const_adder(x: str, n: int, k: int) -> OqInstr:
    """x := (x + k) mod 2^n using SR steps in the Fourier basis."""
    steps = [SR(n - 1 - t, x) for t in range(n) if (k >> t) & 1]
    if not steps:
        return ID((x, 0))
    return seq(Rev(x), QFT(n, x), *steps, RQFT(n, x), Rev(x))


# -- lowering --------------------------------------------------------------

Layout = Dict[Pos, int]


def _qft_gates(qs: Sequence[int]) -> List[G.Gate]:
    out: List[G.Gate] = []
    for k, q in enumerate(qs):
        out.append(G.H(q))
        for j in range(k + 1, len(qs)):
            out.append(G.CtrlBlock(qs[j], (G.RZ(j - k + 1, q),)))
    return out


def oq_lower(sizes: Dict[str, int], i: OqInstr, layout: Layout) -> Tuple[List[G.Gate], Layout]:
    """Gates for ``i`` and the final logical-to-physical map.

    Shifts and ``Rev`` only rename slots in the map and emit nothing.
    """
    layout = dict(layout)
    out: List[G.Gate] = []
    for ins in flatten_seq(i):
        if isinstance(ins, ID):
            continue
        if isinstance(ins, X):
            out.append(G.X(layout[ins.p]))
        elif isinstance(ins, (RZ, RZinv)):
            out.append(G.RZ(ins.q, layout[ins.p], isinstance(ins, RZinv)))
        elif isinstance(ins, (SR, SRinv)):
            for k in range(ins.m + 1):
                out.append(G.RZ(ins.m - k + 1, layout[(ins.x, k)], isinstance(ins, SRinv)))
        elif isinstance(ins, (QFT, RQFT)):
            if ins.n != sizes[ins.x]:
                raise UnsupportedOracleLowering(
                    f"approximate QFT {ins.n} on {sizes[ins.x]} qubits is not unitary")
            g = _qft_gates([layout[(ins.x, k)] for k in range(sizes[ins.x])])
            out.extend(g if isinstance(ins, QFT) else G.inverse_gates(g))
        elif isinstance(ins, (Lshift, Rshift, Rev)):
            d = sizes[ins.x]
            old = [layout[(ins.x, k)] for k in range(d)]
            for k, j in enumerate(_slot_map(ins, d)):
                layout[(ins.x, k)] = old[j]
        elif isinstance(ins, CU):
            body, after = oq_lower(sizes, ins.body, layout)
            if after != layout:
                raise NonNeutralShiftUnderCU("CU body does not restore its layout")
            out.append(G.CtrlBlock(layout[ins.p], tuple(body)))
        else:
            raise TypeError(ins)
    return out, layout
