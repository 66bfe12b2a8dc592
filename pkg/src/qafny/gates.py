"""Flat gate programs over concrete qubits and their controlled versions.

``RZ(k, q)`` is the phase gate diag(1, alpha(1/2^k)) and ``RZ(k, q, inv=True)``
its inverse, matching the OQASM ``rz``/``rrz`` semantics.  Controlled blocks
are flattened with the usual decompositions; CCX gates under a control
borrow a clean ancilla from an :class:`AncillaPool`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple, Union

from .errors import ControlTargetOverlap, QafnyError


@dataclass(frozen=True)
class H:
    q: int


@dataclass(frozen=True)
class X:
    q: int


@dataclass(frozen=True)
class RZ:
    k: int
    q: int
    inv: bool = False


@dataclass(frozen=True)
class CX:
    a: int
    b: int


@dataclass(frozen=True)
class CCX:
    a: int
    b: int
    c: int


@dataclass(frozen=True)
class Measure:
    q: int
    cbit: int


@dataclass(frozen=True)
class CtrlBlock:
    control: int
    body: Tuple["Gate", ...]


Gate = Union[H, X, RZ, CX, CCX, Measure, CtrlBlock]


def gate_qubits(g: Gate) -> List[int]:
    if isinstance(g, (H, X, RZ, Measure)):
        return [g.q]
    if isinstance(g, CX):
        return [g.a, g.b]
    if isinstance(g, CCX):
        return [g.a, g.b, g.c]
    out = [g.control]
    for h in g.body:
        out.extend(gate_qubits(h))
    return out


@dataclass
class GateProgram:
    d: int
    gates: List[Gate] = field(default_factory=list)

    def qubits(self) -> set:
        out = set()
        for g in self.gates:
            out.update(gate_qubits(g))
        return out

    def is_flat(self) -> bool:
        return not any(isinstance(g, CtrlBlock) for g in self.gates)

    def to_json(self) -> dict:
        return {"qubits": self.d, "gates": [_gate_json(g) for g in self.gates]}


def _gate_json(g: Gate) -> dict:
    if isinstance(g, CtrlBlock):
        return {"op": "ctrl", "control": g.control, "body": [_gate_json(h) for h in g.body]}
    name = type(g).__name__.lower()
    if isinstance(g, RZ):
        return {"op": "rzinv" if g.inv else "rz", "k": g.k, "q": g.q}
    if isinstance(g, Measure):
        return {"op": name, "q": g.q, "c": g.cbit}
    return {"op": name, "q": gate_qubits(g)}


class AncillaPool:
    """Clean scratch qubits appended after the declared register.

    Ancillas are keyed by purpose so that a borrower at one control depth
    never reuses a qubit that is live at another depth.
    """

    def __init__(self, base: int):
        self.base = base
        self.slots: Dict[Tuple, int] = {}

    def get(self, key: Tuple) -> int:
        if key not in self.slots:
            self.slots[key] = self.base + len(self.slots)
        return self.slots[key]

    @property
    def size(self) -> int:
        return len(self.slots)

    @property
    def qubits(self) -> List[int]:
        return sorted(self.slots.values())


def cz(a: int, b: int) -> List[Gate]:
    return [H(b), CX(a, b), H(b)]


def _vdag(t: int) -> List[Gate]:
    # V = S H T H S^dagger rotates Z onto the H axis: V Z V^dagger = H.
    return [RZ(2, t, True), H(t), RZ(3, t, True), H(t), RZ(2, t)]


def _v(t: int) -> List[Gate]:
    return [RZ(2, t, True), H(t), RZ(3, t), H(t), RZ(2, t)]


def _ctrl_one(c: int, g: Gate, pool: AncillaPool, level: int) -> List[Gate]:
    if c in gate_qubits(g):
        raise ControlTargetOverlap(f"control qubit {c} is also used by {g}")
    if isinstance(g, X):
        return [CX(c, g.q)]
    if isinstance(g, CX):
        return [CCX(c, g.a, g.b)]
    if isinstance(g, CCX):
        z = pool.get(("wrap", level))
        return [CCX(c, g.a, z), CCX(z, g.b, g.c), CCX(c, g.a, z)]
    if isinstance(g, H):
        return _vdag(g.q) + cz(c, g.q) + _v(g.q)
    if isinstance(g, RZ):
        # controlled phase phi = P(phi/2)_c ; CX ; P(-phi/2)_t ; CX ; P(phi/2)_t
        return [RZ(g.k + 1, c, g.inv), RZ(g.k + 1, g.q, g.inv), CX(c, g.q),
                RZ(g.k + 1, g.q, not g.inv), CX(c, g.q)]
    raise QafnyError(f"cannot control {type(g).__name__}")


def flatten_gates(gates: Iterable[Gate], pool: AncillaPool, level: int = 0) -> List[Gate]:
    out: List[Gate] = []
    for g in gates:
        if isinstance(g, CtrlBlock):
            inner = flatten_gates(g.body, pool, level + 1)
            for h in inner:
                out.extend(_ctrl_one(g.control, h, pool, level))
        else:
            out.append(g)
    return out


def flatten(prog: GateProgram, pool: AncillaPool = None) -> GateProgram:
    """Expand every CtrlBlock; the register grows by the ancillas borrowed."""
    pool = pool or AncillaPool(prog.d)
    gates = flatten_gates(prog.gates, pool)
    return GateProgram(max(prog.d, pool.base + pool.size), gates)


def ctrl_wrap(control: int, eps: GateProgram, pool: AncillaPool = None, level: int = 0) -> GateProgram:
    """Controlled version of ``eps``; acts as the identity when ``control`` is 0."""
    pool = pool or AncillaPool(max(eps.d, control + 1))
    body = flatten_gates(eps.gates, pool, level + 1)
    gates: List[Gate] = []
    for g in body:
        gates.extend(_ctrl_one(control, g, pool, level))
    return GateProgram(max(eps.d, control + 1, pool.base + pool.size), gates)


def mcx(controls: Sequence[Tuple[int, int]], target: int, pool: AncillaPool, level: int = 0) -> List[Gate]:
    """X on ``target`` when every ``(qubit, value)`` control matches.

    Negative controls are conjugated by X; more than two controls use a
    CCX ladder over ancillas reserved for this control depth.
    """
    flips = [X(q) for q, v in controls if v == 0]
    qs = [q for q, _ in controls]
    if target in qs:
        raise ControlTargetOverlap(f"target {target} is also a control")
    if not qs:
        core: List[Gate] = [X(target)]
    elif len(qs) == 1:
        core = [CX(qs[0], target)]
    elif len(qs) == 2:
        core = [CCX(qs[0], qs[1], target)]
    else:
        anc = [pool.get(("mcx", level, i)) for i in range(len(qs) - 2)]
        up = [CCX(qs[0], qs[1], anc[0])]
        for i in range(2, len(qs) - 1):
            up.append(CCX(qs[i], anc[i - 2], anc[i - 1]))
        core = up + [CCX(qs[-1], anc[-1], target)] + list(reversed(up))
    return flips + core + flips


def inverse_gates(gates: Sequence[Gate]) -> List[Gate]:
    out: List[Gate] = []
    for g in reversed(gates):
        if isinstance(g, RZ):
            out.append(RZ(g.k, g.q, not g.inv))
        elif isinstance(g, CtrlBlock):
            out.append(CtrlBlock(g.control, tuple(inverse_gates(g.body))))
        elif isinstance(g, Measure):
            raise QafnyError("a measurement has no inverse")
        else:
            out.append(g)
    return out
