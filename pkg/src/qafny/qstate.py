"""Loci, quantum values and the state algebra.

A locus is an ordered list of disjoint qubit ranges.  A state maps loci to
values of one of three forms:

* ``Nor``: a single basis vector ``z|c>`` (with a frozen stack),
* ``Had``: a product of ``(|0> + alpha(r_j)|1>)/sqrt 2`` factors,
* ``EN``: a sum of basis kets, each with amplitude, basis and stack.

Basis strings are little-endian: position 0 is the least significant bit.
Phases are kept in turns (``alpha(r) = exp(2 pi i r)``) reduced mod 1.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import EmptyStack, NotSeparable, WidthMismatch

TOL = 1e-9
ZERO_AMP = 1e-12

Qubit = Tuple[str, int]


# -- scalars and bits ------------------------------------------------------

def frac(r):
    """Reduce a phase (in turns) into [0, 1)."""
    r = r % 1
    if isinstance(r, float) and r > 1 - 1e-13:
        return 0.0
    return r


def alpha(r) -> complex:
    """The unit complex number exp(2 pi i r) with exact values at quarter turns."""
    r = frac(r)
    quarter = r * 4
    if quarter == int(quarter):
        return (1, 1j, -1, -1j)[int(quarter)]
    return cmath.exp(2j * math.pi * float(r))


def bits_to_int(bits: str) -> int:
    return int(bits[::-1], 2) if bits else 0


def int_to_bits(value: int, width: int) -> str:
    if width == 0:
        return ""
    return format(value % (1 << width), f"0{width}b")[::-1]


def all_bitstrings(width: int) -> Iterator[str]:
    """All bitstrings of the given width ordered by their little-endian value."""
    for v in range(1 << width):
        yield int_to_bits(v, width)


# -- ranges and loci -------------------------------------------------------

@dataclass(frozen=True, order=True)
class Range:
    var: str
    lo: int
    hi: int

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError(f"bad range {self.var}[{self.lo},{self.hi})")

    @property
    def width(self) -> int:
        return self.hi - self.lo

    def qubits(self) -> List[Qubit]:
        return [(self.var, i) for i in range(self.lo, self.hi)]

    def overlaps(self, other: "Range") -> bool:
        return self.var == other.var and self.lo < other.hi and other.lo < self.hi

    def __str__(self) -> str:
        return f"{self.var}[{self.lo},{self.hi})"


@dataclass(frozen=True)
class Locus:
    """Ordered concatenation of disjoint ranges, kept in coalesced form."""

    ranges: Tuple[Range, ...] = ()

    @staticmethod
    def make(ranges: Iterable[Range]) -> "Locus":
        out: List[Range] = []
        for r in ranges:
            if r.width == 0:
                continue
            if out and out[-1].var == r.var and out[-1].hi == r.lo:
                out[-1] = Range(r.var, out[-1].lo, r.hi)
            else:
                out.append(r)
        return Locus(tuple(out))

    @staticmethod
    def from_qubits(qubits: Iterable[Qubit]) -> "Locus":
        return Locus.make(Range(v, i, i + 1) for v, i in qubits)

    @staticmethod
    def of(var: str, lo: int, hi: int) -> "Locus":
        return Locus.make([Range(var, lo, hi)])

    @property
    def width(self) -> int:
        return sum(r.width for r in self.ranges)

    def qubits(self) -> List[Qubit]:
        out: List[Qubit] = []
        for r in self.ranges:
            out.extend(r.qubits())
        return out

    def qubit_set(self) -> frozenset:
        return frozenset(self.qubits())

    def index(self, q: Qubit) -> int:
        pos = 0
        for r in self.ranges:
            if r.var == q[0] and r.lo <= q[1] < r.hi:
                return pos + q[1] - r.lo
            pos += r.width
        raise KeyError(q)

    def __contains__(self, q) -> bool:
        return any(r.var == q[0] and r.lo <= q[1] < r.hi for r in self.ranges)

    def overlaps(self, other: "Locus") -> bool:
        return any(a.overlaps(b) for a in self.ranges for b in other.ranges)

    def is_disjoint(self) -> bool:
        rs = self.ranges
        return not any(rs[i].overlaps(rs[j]) for i in range(len(rs)) for j in range(i + 1, len(rs)))

    def __add__(self, other: "Locus") -> "Locus":
        return Locus.make(self.ranges + other.ranges)

    def prefix(self, n: int) -> "Locus":
        return Locus.from_qubits(self.qubits()[:n])

    def drop(self, n: int) -> "Locus":
        return Locus.from_qubits(self.qubits()[n:])

    def __len__(self) -> int:
        return self.width

    def __bool__(self) -> bool:
        return bool(self.ranges)

    def __str__(self) -> str:
        return " ++ ".join(str(r) for r in self.ranges) if self.ranges else "{}"


EMPTY = Locus()


# -- values ----------------------------------------------------------------

Stack = Tuple[str, ...]


@dataclass(frozen=True)
class Ket:
    amp: complex
    basis: str
    stack: Stack = ()


@dataclass(frozen=True)
class Nor:
    amp: complex
    bits: str
    stack: Stack = ()

    @property
    def width(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class Had:
    phases: Tuple = ()

    @property
    def width(self) -> int:
        return len(self.phases)


@dataclass(frozen=True)
class EN:
    kets: Tuple[Ket, ...]
    width: int

    def __post_init__(self):
        for k in self.kets:
            if len(k.basis) != self.width:
                raise WidthMismatch(f"ket basis {k.basis!r} does not have width {self.width}")


Value = Union[Nor, Had, EN]


def type_name(v: Value) -> str:
    return type(v).__name__


def nor(bits: str, amp: complex = 1) -> Nor:
    return Nor(complex(amp), bits)


def en(kets: Iterable, width: Optional[int] = None) -> EN:
    """Build an EN value from ``Ket`` objects or ``(amp, basis[, stack])`` tuples."""
    ks = []
    for k in kets:
        if not isinstance(k, Ket):
            k = Ket(complex(k[0]), k[1], tuple(k[2]) if len(k) > 2 else ())
        ks.append(k)
    if width is None:
        if not ks:
            raise WidthMismatch("width of an empty EN value must be given")
        width = len(ks[0].basis)
    return EN(tuple(ks), width)


# -- equivalence rewrites --------------------------------------------------

def nor_to_en(v: Nor) -> EN:
    return EN((Ket(v.amp, v.bits, v.stack),), v.width)


def en_to_nor(v: EN) -> Nor:
    if len(v.kets) != 1:
        raise NotSeparable("only a single-ket EN value is a Nor value")
    k = v.kets[0]
    return Nor(k.amp, k.basis, k.stack)


def had_to_en(v: Had) -> EN:
    n = v.width
    scale = 1 / math.sqrt(2 ** n)
    kets = []
    for bits in all_bitstrings(n):
        r = sum((p for p, b in zip(v.phases, bits) if b == "1"), 0)
        kets.append(Ket(alpha(r) * scale, bits))
    return merge_kets(EN(tuple(kets), n))


def to_en(v: Value) -> EN:
    if isinstance(v, EN):
        return v
    if isinstance(v, Nor):
        return nor_to_en(v)
    return had_to_en(v)


def merge_kets(v: EN) -> EN:
    """Sum like kets, drop vanishing ones and sort by (basis, stack)."""
    acc: Dict[Tuple[str, Stack], complex] = {}
    for k in v.kets:
        key = (k.basis, k.stack)
        acc[key] = acc.get(key, 0j) + k.amp
    kets = [Ket(z, b, s) for (b, s), z in acc.items() if abs(z) >= ZERO_AMP]
    kets.sort(key=lambda k: (k.basis, k.stack))
    return EN(tuple(kets), v.width)


def width_of(v: Value) -> int:
    return v.width


def norm_sq(v: Value) -> float:
    if isinstance(v, Had):
        return 1.0
    if isinstance(v, Nor):
        return abs(v.amp) ** 2
    return sum(abs(k.amp) ** 2 for k in v.kets)


def _swap_segments(s, n: int, i: int, k: int):
    return s[:n] + s[n + i:n + i + k] + s[n:n + i] + s[n + i + k:]


def permute_value(v: Value, n: int, i: int, k: int) -> Value:
    """Swap the adjacent position segments [n, n+i) and [n+i, n+i+k)."""
    if n < 0 or i < 0 or k < 0 or n + i + k > v.width:
        raise WidthMismatch(f"permutation <{n},{i},{k}> exceeds width {v.width}")
    if isinstance(v, Nor):
        return Nor(v.amp, _swap_segments(v.bits, n, i, k), v.stack)
    if isinstance(v, Had):
        return Had(tuple(_swap_segments(list(v.phases), n, i, k)))
    return merge_kets(EN(tuple(Ket(kt.amp, _swap_segments(kt.basis, n, i, k), kt.stack)
                               for kt in v.kets), v.width))


def reorder_value(v: Value, order: Sequence[int]) -> Value:
    """New position p takes old position ``order[p]``."""
    if sorted(order) != list(range(v.width)):
        raise WidthMismatch(f"{list(order)} is not a permutation of {v.width} positions")

    def pick(s):
        return "".join(s[j] for j in order)

    if isinstance(v, Nor):
        return Nor(v.amp, pick(v.bits), v.stack)
    if isinstance(v, Had):
        return Had(tuple(v.phases[j] for j in order))
    return merge_kets(EN(tuple(Ket(k.amp, pick(k.basis), k.stack) for k in v.kets), v.width))


def _join_stacks(s1: Stack, s2: Stack) -> Stack:
    if not s1:
        return s2
    if not s2:
        return s1
    if len(s1) != len(s2):
        raise WidthMismatch("cannot join values frozen under different conditional depths")
    return tuple(a + b for a, b in zip(s1, s2))


def join_values(q1: Value, q2: Value) -> Value:
    """The join product of the value of a left locus with that of a right locus."""
    if isinstance(q1, Nor) and isinstance(q2, Nor):
        return Nor(q1.amp * q2.amp, q1.bits + q2.bits, _join_stacks(q1.stack, q2.stack))
    if isinstance(q1, Had) and isinstance(q2, Had):
        return Had(q1.phases + q2.phases)
    width = q1.width + q2.width
    if isinstance(q1, Nor) and isinstance(q2, EN):
        kets = [Ket(q1.amp * k.amp, q1.bits + k.basis, _join_stacks(q1.stack, k.stack)) for k in q2.kets]
        return merge_kets(EN(tuple(kets), width))
    if isinstance(q1, EN) and isinstance(q2, Nor):
        kets = [Ket(k.amp * q2.amp, k.basis + q2.bits, _join_stacks(k.stack, q2.stack)) for k in q1.kets]
        return merge_kets(EN(tuple(kets), width))
    if isinstance(q1, Had) and q1.width == 1 and isinstance(q2, EN):
        s = 1 / math.sqrt(2)
        a1 = alpha(q1.phases[0])
        kets = [Ket(s * k.amp, "0" + k.basis, k.stack) for k in q2.kets]
        kets += [Ket(s * a1 * k.amp, "1" + k.basis, k.stack) for k in q2.kets]
        return merge_kets(EN(tuple(kets), width))
    e1, e2 = to_en(q1), to_en(q2)
    kets = [Ket(a.amp * b.amp, a.basis + b.basis, _join_stacks(a.stack, b.stack))
            for a in e1.kets for b in e2.kets]
    return merge_kets(EN(tuple(kets), width))


def split_value(v: Value, n: int) -> Tuple[Value, Value]:
    """Cut a value into its first n positions and the rest."""
    if not 0 < n < v.width:
        raise WidthMismatch(f"split point {n} must lie strictly inside width {v.width}")
    if isinstance(v, Nor):
        return Nor(v.amp, v.bits[:n], v.stack), Nor(1 + 0j, v.bits[n:])
    if isinstance(v, Had):
        return Had(v.phases[:n]), Had(v.phases[n:])
    suffixes = {k.basis[n:] for k in v.kets}
    if len(suffixes) != 1:
        raise NotSeparable(f"EN value has {len(suffixes)} distinct suffixes past position {n}")
    (suffix,) = suffixes
    left = merge_kets(EN(tuple(Ket(k.amp, k.basis[:n], k.stack) for k in v.kets), n))
    return left, Nor(1 + 0j, suffix)


def push_frozen(v: EN, n: int) -> EN:
    """Move the leading n basis bits of every ket onto its frozen stack."""
    if n > v.width:
        raise WidthMismatch(f"cannot freeze {n} bits of a width-{v.width} value")
    kets = tuple(Ket(k.amp, k.basis[n:], (k.basis[:n],) + k.stack) for k in v.kets)
    return EN(kets, v.width - n)


def pop_frozen(v: EN) -> EN:
    """Restore the top frozen entry of every ket as its basis prefix."""
    widths = set()
    kets = []
    for k in v.kets:
        if not k.stack:
            raise EmptyStack("ket has no frozen basis to restore")
        widths.add(len(k.stack[0]))
        kets.append(Ket(k.amp, k.stack[0] + k.basis, k.stack[1:]))
    if len(widths) > 1:
        raise WidthMismatch("frozen entries have different widths")
    top = widths.pop() if widths else 0
    return merge_kets(EN(tuple(kets), v.width + top))


def partition_kets(v: EN, width: int, test: Callable[[str], bool]) -> Tuple[EN, EN]:
    """Split kets by whether their leading ``width`` bits satisfy ``test``."""
    if width > v.width:
        raise WidthMismatch(f"guard width {width} exceeds value width {v.width}")
    yes = tuple(k for k in v.kets if test(k.basis[:width]))
    no = tuple(k for k in v.kets if not test(k.basis[:width]))
    return EN(yes, v.width), EN(no, v.width)


def add_values(a: EN, b: EN) -> EN:
    if a.width != b.width:
        raise WidthMismatch("cannot add values of different widths")
    return merge_kets(EN(a.kets + b.kets, a.width))


def map_kets(v: EN, fn: Callable[[Ket], Iterable[Ket]], width: Optional[int] = None) -> EN:
    kets: List[Ket] = []
    for k in v.kets:
        kets.extend(fn(k))
    return merge_kets(EN(tuple(kets), v.width if width is None else width))


# -- comparison and embedding ----------------------------------------------

def strip_stacks(v: EN) -> EN:
    return merge_kets(EN(tuple(Ket(k.amp, k.basis) for k in v.kets), v.width))


def values_equal(a: Value, b: Value, tol: float = TOL, ignore_stack: bool = False) -> bool:
    if a.width != b.width:
        return False
    ea, eb = merge_kets(to_en(a)), merge_kets(to_en(b))
    if ignore_stack:
        ea, eb = strip_stacks(ea), strip_stacks(eb)
    da = {(k.basis, k.stack): k.amp for k in ea.kets}
    db = {(k.basis, k.stack): k.amp for k in eb.kets}
    for key in set(da) | set(db):
        if abs(da.get(key, 0j) - db.get(key, 0j)) > tol:
            return False
    return True


def densify_value(v: Value) -> np.ndarray:
    """Dense vector of a value, index = little-endian integer of the basis."""
    vec = np.zeros(1 << v.width, dtype=complex)
    for k in to_en(v).kets:
        vec[bits_to_int(k.basis)] += k.amp
    return vec


# -- states ----------------------------------------------------------------

class State:
    """Ordered map from disjoint loci to values."""

    def __init__(self, entries: Union[Dict[Locus, Value], Iterable[Tuple[Locus, Value]], None] = None):
        self.entries: Dict[Locus, Value] = dict(entries.items() if isinstance(entries, dict) else (entries or ()))
        for l, v in self.entries.items():
            if l.width != v.width:
                raise WidthMismatch(f"locus {l} has width {l.width} but value has width {v.width}")

    def copy(self) -> "State":
        return State(dict(self.entries))

    def loci(self) -> List[Locus]:
        return list(self.entries)

    def __getitem__(self, l: Locus) -> Value:
        return self.entries[l]

    def __contains__(self, l: Locus) -> bool:
        return l in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def locus_of(self, q: Qubit) -> Optional[Locus]:
        for l in self.entries:
            if q in l:
                return l
        return None

    def replace(self, removed: Sequence[Locus], added: Sequence[Tuple[Locus, Value]]) -> "State":
        """Swap out loci, inserting the new ones where the first removed locus sat."""
        out: Dict[Locus, Value] = {}
        inserted = False
        for l, v in self.entries.items():
            if l in removed:
                if not inserted:
                    for nl, nv in added:
                        out[nl] = nv
                    inserted = True
                continue
            out[l] = v
        if not inserted:
            for nl, nv in added:
                out[nl] = nv
        return State(out)

    def to_json(self) -> dict:
        loci = []
        for l, v in self.entries.items():
            item = {"ranges": [[r.var, r.lo, r.hi] for r in l.ranges], "type": type_name(v)}
            if isinstance(v, Had):
                item["phases"] = [float(p) for p in v.phases]
            else:
                kets = nor_to_en(v).kets if isinstance(v, Nor) else v.kets
                item["kets"] = [_ket_json(k) for k in kets]
            loci.append(item)
        return {"loci": loci}

    @staticmethod
    def from_json(data: dict) -> "State":
        entries = []
        for item in data["loci"]:
            l = Locus.make(Range(v, lo, hi) for v, lo, hi in item["ranges"])
            if item["type"] == "Had":
                val: Value = Had(tuple(item["phases"]))
            else:
                kets = [Ket(complex(k["re"], k["im"]), k["basis"], tuple(k.get("stack", ()))) for k in item["kets"]]
                val = EN(tuple(kets), l.width)
                if item["type"] == "Nor":
                    val = en_to_nor(val)
            entries.append((l, val))
        return State(entries)


def _clean(x: float) -> float:
    x = round(x, 12)
    return 0.0 if x == 0 else x


def _ket_json(k: Ket) -> dict:
    return {"re": _clean(k.amp.real), "im": _clean(k.amp.imag), "basis": k.basis, "stack": list(k.stack)}


def state_wellformed(state: State, mode: str = "C", tol: float = TOL) -> List[str]:
    """Problems that keep ``state`` from being well-formed; empty when it is."""
    problems = []
    seen: List[Locus] = []
    for l, v in state.items():
        if not l.is_disjoint():
            problems.append(f"locus {l} is not disjoint")
        if any(l.overlaps(o) for o in seen):
            problems.append(f"locus {l} overlaps another locus")
        seen.append(l)
        if l.width != v.width:
            problems.append(f"locus {l} width differs from its value")
        if isinstance(v, EN):
            if len({(k.basis, k.stack) for k in v.kets}) != len(v.kets):
                problems.append(f"locus {l} has unmerged kets")
            for k in v.kets:
                if abs(k.amp) > 1 + tol:
                    problems.append(f"locus {l} has amplitude above 1")
        n = norm_sq(v)
        if mode == "C":
            if abs(n - 1) > tol:
                problems.append(f"locus {l} has norm {n}")
            stacks = [v.stack] if isinstance(v, Nor) else [k.stack for k in v.kets] if isinstance(v, EN) else []
            if any(stacks):
                problems.append(f"locus {l} has a frozen stack in mode C")
        elif n > 1 + tol:
            problems.append(f"locus {l} has norm {n} above 1")
    return problems
