"""Lowering of Qafny statements to flat gate programs and OpenQASM 2.0."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from . import gates as G
from .errors import ParseError, TypeMismatch, UnsupportedOracleLowering
from .gates import AncillaPool, GateProgram, inverse_gates, mcx
from .kinds import KC, KM, _cmp, eval_aexp, eval_bexp, fv, kind_env, resolve_locus, resolve_range, sizes_of
from .oqasm import _qft_gates
from .oracles import lower_oracle
from .qstate import Locus, Qubit, int_to_bits
from .syntax import (ORACLES, Apply, Assert, BitRef, CIf, Cmp, For, Gate, LetC, LetM, Not, Program, QIf, Reduce,
                     Skip, Stmt)
from .typecheck import guard_kind, loop_bounds, loop_iteration, oracle_args


@dataclass
class Layout:
    """Declaration-order map from (variable, index) to wire, ancillas after."""

    wires: Dict[Qubit, int]
    n: int
    pool: AncillaPool = None

    def __post_init__(self):
        if self.pool is None:
            self.pool = AncillaPool(self.n)

    @staticmethod
    def of(program: Program) -> "Layout":
        wires, k = {}, 0
        for d in program.decls:
            for i in range(d.size):
                wires[(d.name, i)] = k
                k += 1
        return Layout(wires, k)

    def __getitem__(self, q: Qubit) -> int:
        return self.wires[q]


def _swap(a: int, b: int) -> List[G.Gate]:
    return [G.CX(a, b), G.CX(b, a), G.CX(a, b)]


def qft_circuit(qs: Sequence[int]) -> List[G.Gate]:
    """Little-endian Fourier transform: reverse the wires, then the Fourier ladder."""
    out: List[G.Gate] = []
    n = len(qs)
    for k in range(n // 2):
        out.extend(_swap(qs[k], qs[n - 1 - k]))
    return out + _qft_gates(qs)


def mcz(qs: Sequence[int], pool: AncillaPool) -> List[G.Gate]:
    """Phase -1 on the all-ones basis state of ``qs``."""
    if len(qs) == 1:
        return [G.RZ(1, qs[0])]
    t = qs[-1]
    return [G.H(t)] + mcx([(q, 1) for q in qs[:-1]], t, pool) + [G.H(t)]


def dis_circuit(qs: Sequence[int], pool: AncillaPool) -> List[G.Gate]:
    """2|s><s| - I: H X (-(I - 2|1..1><1..1|)) X H, with the sign fixed exactly."""
    hs = [G.H(q) for q in qs]
    xs = [G.X(q) for q in qs]
    # X RZ1 X RZ1 on one wire is -I, which keeps the circuit exact under control
    minus = [G.X(qs[0]), G.RZ(1, qs[0]), G.X(qs[0]), G.RZ(1, qs[0])]
    return hs + xs + mcz(qs, pool) + xs + hs + minus


def comparator(guard: Cmp, values, sizes, layout: Layout) -> List[G.Gate]:
    """XOR the comparison into the result qubit, one pattern at a time."""
    ranges = []
    for side in (guard.left, guard.right):
        for r in _ranges(side):
            ranges.append(resolve_range(r, values, sizes))
    qubits: List[Qubit] = []
    for r in ranges:
        for q in r.qubits():
            if q not in qubits:
                qubits.append(q)
    target = resolve_range(guard.at, values, sizes).qubits()[0]
    pos = {q: i for i, q in enumerate(qubits)}
    out: List[G.Gate] = []
    for v in range(1 << len(qubits)):
        bits = int_to_bits(v, len(qubits))

        def read(r, bits=bits):
            return int("".join(bits[pos[q]] for q in r.qubits())[::-1] or "0", 2)
        if _cmp(guard.op, eval_aexp(guard.left, values, sizes, read), eval_aexp(guard.right, values, sizes, read)):
            ctrls = [(layout[q], int(bits[pos[q]])) for q in qubits]
            out.extend(mcx(ctrls, layout[target], layout.pool))
    return out


def _ranges(e) -> list:
    from .syntax import BinOp, Call, Neg, QRef
    if isinstance(e, QRef):
        return [e.rng]
    if isinstance(e, BinOp):
        return _ranges(e.left) + _ranges(e.right)
    if isinstance(e, Neg):
        return _ranges(e.arg)
    if isinstance(e, Call) and e.fn != "len":
        return [r for a in e.args for r in _ranges(a)]
    return []


class Compiler:
    def __init__(self, omega, layout: Layout):
        self.omega = dict(omega)
        self.layout = layout
        self.values: Dict[str, object] = {}
        self.measured: set = set()

    @property
    def sizes(self):
        return sizes_of(self.omega)

    def block(self, stmts: Sequence[Stmt]) -> List[G.Gate]:
        out: List[G.Gate] = []
        for s in stmts:
            out.extend(self.stmt(s))
        return out

    def _check_live(self, qs):
        for q in qs:
            if q in self.measured:
                raise UnsupportedOracleLowering(f"qubit {q[0]}[{q[1]}] is used after it was measured")

    def stmt(self, s: Stmt) -> List[G.Gate]:
        if isinstance(s, (Skip, Assert)):
            return []
        if isinstance(s, Apply):
            return self.apply(s)
        if isinstance(s, LetC):
            self.values[s.var] = eval_aexp(s.value, self.values, self.sizes)
            self.omega[s.var] = KC
            try:
                return self.block(s.body)
            finally:
                self.values.pop(s.var, None)
                self.omega.pop(s.var, None)
        if isinstance(s, LetM):
            qs = Locus.of(s.target, 0, self.sizes[s.target]).qubits()
            self._check_live(qs)
            out: List[G.Gate] = [G.Measure(self.layout[q], self.layout[q]) for q in qs]
            self.measured.update(qs)
            self.omega[s.var] = KM
            try:
                return out + self.block(s.body)
            finally:
                self.omega.pop(s.var, None)
        if isinstance(s, QIf):
            return self.qif(s)
        if isinstance(s, CIf):
            if guard_kind(self.omega, s.guard, self.values) != "C":
                raise UnsupportedOracleLowering("a conditional on a measurement result has no static circuit")
            if eval_bexp(s.guard, self.values, self.sizes):
                return self.block(s.then)
            return self.block(s.orelse or ())
        if isinstance(s, For):
            lo, hi = loop_bounds(s, self.values, self.sizes)
            self.omega[s.var] = KC
            out = []
            try:
                for j in range(lo, hi):
                    self.values[s.var] = j
                    inner = loop_iteration(s, self.omega, self.values)
                    out.extend(self.block(s.body) if inner is None else self.stmt(inner))
            finally:
                self.values.pop(s.var, None)
                self.omega.pop(s.var, None)
            return out
        raise TypeMismatch(f"cannot compile {type(s).__name__}")

    def apply(self, s: Apply) -> List[G.Gate]:
        target = resolve_locus(s.locus, self.values, self.sizes)
        self._check_live(target.qubits())
        qs = [self.layout[q] for q in target.qubits()]
        op = s.op
        if isinstance(op, Gate):
            if op.name == "H":
                return [G.H(q) for q in qs]
            if op.name == "QFT":
                return qft_circuit(qs)
            if op.name == "RQFT":
                return inverse_gates(qft_circuit(qs))
            if op.name == "dis":
                return dis_circuit(qs, self.layout.pool)
        if isinstance(op, Reduce):
            raise UnsupportedOracleLowering("reduce has no gate realization")
        if isinstance(op, ORACLES):
            args = oracle_args(op, self.values, self.sizes)
            return lower_oracle(op, [r.width for r in target.ranges], args, qs, self.layout.pool)
        raise TypeMismatch(f"cannot compile {op}")

    def qif(self, s: QIf) -> List[G.Gate]:
        self._check_live(fv(self.omega, s, self.values).qubits())
        pre, ctrl, negate = self.guard(s.guard)
        body = self.block(s.body)
        flip = [G.X(ctrl)] if negate else []
        return pre + flip + [G.CtrlBlock(ctrl, tuple(body))] + flip

    def guard(self, g) -> Tuple[List[G.Gate], int, bool]:
        if isinstance(g, BitRef):
            return [], self.layout[resolve_range(g.rng, self.values, self.sizes).qubits()[0]], False
        if isinstance(g, Not):
            pre, c, neg = self.guard(g.arg)
            return pre, c, not neg
        if isinstance(g, Cmp) and g.at is not None:
            tq = resolve_range(g.at, self.values, self.sizes).qubits()[0]
            return comparator(g, self.values, self.sizes, self.layout), self.layout[tq], False
        raise TypeMismatch("unsupported quantum guard")


def compile(omega, stmts: Sequence[Stmt], layout: Layout, flat: bool = True) -> GateProgram:  # noqa: A001
    """Gate program for ``stmts``; CtrlBlocks are expanded when ``flat``."""
    c = Compiler(omega, layout)
    gates = c.block(stmts)
    pool = layout.pool
    if flat:
        gates = G.flatten_gates(gates, pool)
    return GateProgram(pool.base + pool.size, gates)


def compile_program(program: Program, flat: bool = True) -> Tuple[GateProgram, Layout]:
    from .kinds import inline_procs
    if program.procs:
        program = inline_procs(program)
    layout = Layout.of(program)
    return compile(kind_env(program), program.body, layout, flat), layout


# -- OpenQASM 2.0 ----------------------------------------------------------

def emit_qasm(prog: GateProgram) -> str:
    if not prog.is_flat():
        raise TypeMismatch("controlled blocks must be flattened before emission")
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{prog.d}]; creg c[{prog.d}];"]
    for g in prog.gates:
        if isinstance(g, G.H):
            lines.append(f"h q[{g.q}];")
        elif isinstance(g, G.X):
            lines.append(f"x q[{g.q}];")
        elif isinstance(g, G.RZ):
            if g.k == 0:
                continue
            sign = "-" if g.inv else ""
            lines.append(f"rz({sign}pi/2^{g.k - 1}) q[{g.q}];")
        elif isinstance(g, G.CX):
            lines.append(f"cx q[{g.a}],q[{g.b}];")
        elif isinstance(g, G.CCX):
            lines.append(f"ccx q[{g.a}],q[{g.b}],q[{g.c}];")
        elif isinstance(g, G.Measure):
            lines.append(f"measure q[{g.q}] -> c[{g.cbit}];")
    return "\n".join(lines) + "\n"


_QARG = r"q\[(\d+)\]"
_LINE_RES = [
    (re.compile(rf"^h {_QARG};$"), lambda m: G.H(int(m[1]))),
    (re.compile(rf"^x {_QARG};$"), lambda m: G.X(int(m[1]))),
    (re.compile(rf"^rz\((-?)pi/2\^(\d+)\) {_QARG};$"), lambda m: G.RZ(int(m[2]) + 1, int(m[3]), m[1] == "-")),
    (re.compile(rf"^cx {_QARG},{_QARG};$"), lambda m: G.CX(int(m[1]), int(m[2]))),
    (re.compile(rf"^ccx {_QARG},{_QARG},{_QARG};$"), lambda m: G.CCX(int(m[1]), int(m[2]), int(m[3]))),
    (re.compile(rf"^measure {_QARG} -> c\[(\d+)\];$"), lambda m: G.Measure(int(m[1]), int(m[2]))),
]


def read_qasm(text: str) -> GateProgram:
    """Read back the OpenQASM subset written by :func:`emit_qasm`."""
    d = None
    gates: List[G.Gate] = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//")[0].strip()
        if not line or line in ("OPENQASM 2.0;", 'include "qelib1.inc";'):
            continue
        m = re.match(r"^qreg q\[(\d+)\];(?:\s*creg c\[\d+\];)?$", line)
        if m:
            d = int(m[1])
            continue
        if re.match(r"^creg c\[(\d+)\];$", line):
            continue
        for rx, build in _LINE_RES:
            m = rx.match(line)
            if m:
                gates.append(build(m))
                break
        else:
            raise ParseError(f"unsupported QASM line {line!r}", no, 1)
    if d is None:
        raise ParseError("missing qreg declaration", 1, 1)
    return GateProgram(d, gates)
