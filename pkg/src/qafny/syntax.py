"""Abstract syntax of Qafny programs, predicates and ket expressions.

Nodes are frozen dataclasses so structural equality is plain ``==``.
Source positions are carried on statements but excluded from equality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from .oqasm import OqInstr


# -- arithmetic ------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Union[int, float]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Field:
    """``u.prob`` or ``u.outcome`` of a measurement result."""

    name: str
    field: str


@dataclass(frozen=True)
class RangeExpr:
    """``x[lo,hi)``; ``x[i]`` when ``hi`` is None; the whole of ``x`` when ``lo`` is None."""

    var: str
    lo: Optional["AExp"] = None
    hi: Optional["AExp"] = None


@dataclass(frozen=True)
class QRef:
    """A quantum range read as a little-endian number."""

    rng: RangeExpr


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / % ^
    left: "AExp"
    right: "AExp"


@dataclass(frozen=True)
class Neg:
    arg: "AExp"


@dataclass(frozen=True)
class Call:
    fn: str
    args: Tuple["AExp", ...]


AExp = Union[Num, Var, Field, QRef, BinOp, Neg, Call]

ARITH_FUNCS = {"sqrt", "alpha", "len", "abs", "log2", "min", "max", "pow"}


# -- booleans --------------------------------------------------------------

@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Cmp:
    """``left op right``, storing into ``at`` when it names a result qubit."""

    op: str  # < <= == != > >=
    left: AExp
    right: AExp
    at: Optional[RangeExpr] = None


@dataclass(frozen=True)
class BitRef:
    """A bare qubit used as a guard."""

    rng: RangeExpr


@dataclass(frozen=True)
class Not:
    arg: "BExp"


@dataclass(frozen=True)
class And:
    left: "BExp"
    right: "BExp"


@dataclass(frozen=True)
class Or:
    left: "BExp"
    right: "BExp"


BExp = Union[BoolLit, Cmp, BitRef, Not, And, Or]


# -- unitaries -------------------------------------------------------------

@dataclass(frozen=True)
class Gate:
    name: str  # H, QFT, RQFT, dis


@dataclass(frozen=True)
class Reduce:
    bits: str
    n: AExp


@dataclass(frozen=True)
class AddConst:
    k: AExp


@dataclass(frozen=True)
class MulMod:
    a: AExp
    modulus: AExp


@dataclass(frozen=True)
class PowMod:
    a: AExp
    modulus: AExp


@dataclass(frozen=True)
class OqBlock:
    params: Tuple[Tuple[str, int], ...]
    body: OqInstr


Unitary = Union[Gate, Reduce, AddConst, MulMod, PowMod, OqBlock]
ORACLES = (AddConst, MulMod, PowMod, OqBlock)


# -- ket expressions and predicates ----------------------------------------

@dataclass(frozen=True)
class Bits:
    text: str


@dataclass(frozen=True)
class Rep:
    """The bit ``digit`` repeated ``count`` times."""

    digit: AExp
    count: AExp


@dataclass(frozen=True)
class NumBits:
    """``value`` written little-endian on ``width`` bits."""

    value: AExp
    width: AExp


Segment = Union[Bits, Rep, NumBits]


@dataclass(frozen=True)
class KetLit:
    segments: Tuple[Segment, ...]


@dataclass(frozen=True)
class KTerm:
    amp: Optional[AExp]
    kets: Tuple[KetLit, ...]


@dataclass(frozen=True)
class KSum:
    var: str
    lo: AExp
    hi: AExp
    body: "KetExpr"


@dataclass(frozen=True)
class KAdd:
    left: "KetExpr"
    right: "KetExpr"
    sign: int = 1


KetExpr = Union[KTerm, KSum, KAdd]


@dataclass(frozen=True)
class PM:
    """Measurement transformer locus M(x, n, kappa)."""

    var: str
    n: AExp
    locus: Tuple[RangeExpr, ...]


@dataclass(frozen=True)
class PF:
    """Freeze transformer locus F(b, kappa, kappa')."""

    guard: BExp
    locus: Tuple[RangeExpr, ...]
    rest: Tuple[RangeExpr, ...]


@dataclass(frozen=True)
class PU:
    """Unfreeze transformer locus U(b, kappa, kappa')."""

    guard: BExp
    locus: Tuple[RangeExpr, ...]
    rest: Tuple[RangeExpr, ...]


PLocus = Union[Tuple[RangeExpr, ...], PM, PF, PU]


@dataclass(frozen=True)
class PMaps:
    locus: PLocus
    ket: KetExpr


@dataclass(frozen=True)
class PCmp:
    op: str
    left: AExp
    right: AExp


@dataclass(frozen=True)
class PTrue:
    pass


@dataclass(frozen=True)
class PStar:
    left: "Pred"
    right: "Pred"


@dataclass(frozen=True)
class PAnd:
    left: "Pred"
    right: "Pred"


Pred = Union[PMaps, PCmp, PTrue, PStar, PAnd]


# -- statements ------------------------------------------------------------

@dataclass(frozen=True)
class Skip:
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class LetC:
    var: str
    value: AExp
    body: Tuple["Stmt", ...]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class LetM:
    var: str
    target: str
    body: Tuple["Stmt", ...]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class Apply:
    locus: Tuple[RangeExpr, ...]
    op: Unitary
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class QIf:
    guard: BExp
    body: Tuple["Stmt", ...]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class CIf:
    guard: BExp
    then: Tuple["Stmt", ...]
    orelse: Optional[Tuple["Stmt", ...]] = None
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class For:
    var: str
    lo: AExp
    hi: AExp
    guard: Optional[BExp]
    body: Tuple["Stmt", ...]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class Assert:
    pred: Pred
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


@dataclass(frozen=True)
class CallProc:
    name: str
    args: Tuple[RangeExpr, ...]
    pos: Optional[Tuple[int, int]] = field(default=None, compare=False)


Stmt = Union[Skip, LetC, LetM, Apply, QIf, CIf, For, Assert, CallProc]


@dataclass(frozen=True)
class QubitDecl:
    name: str
    size: int


@dataclass(frozen=True)
class ProcDef:
    name: str
    params: Tuple[str, ...]
    body: Tuple[Stmt, ...]


@dataclass(frozen=True)
class Program:
    decls: Tuple[QubitDecl, ...]
    body: Tuple[Stmt, ...]
    procs: Tuple[ProcDef, ...] = ()

    def sizes(self):
        return {d.name: d.size for d in self.decls}
