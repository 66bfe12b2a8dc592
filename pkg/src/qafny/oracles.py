"""Oracle operations: their basis-ket semantics and their gate lowering.

Every oracle acts on a basis value of its target locus as a permutation,
possibly with a phase.  Bits are little-endian in locus order.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple

from . import gates as G
from . import oqasm as oq
from .errors import BasisMismatch, OracleError
from .qstate import bits_to_int, int_to_bits
from .syntax import AddConst, MulMod, OqBlock, PowMod

# A basis function maps a bitstring to (phase in turns, new bitstring).
BasisFn = Callable[[str], Tuple[Fraction, str]]


def check_oqblock(op: OqBlock, width: int) -> None:
    """The block's parameters must tile the target and leave it in Nor basis."""
    total = sum(n for _, n in op.params)
    if total != width:
        raise OracleError(f"oqasm block binds {total} qubits but its target has {width}")
    names = [x for x, _ in op.params]
    if len(set(names)) != len(names):
        raise OracleError("oqasm block parameters must be distinct")
    sizes = dict(op.params)
    env = {x: oq.NOR for x in sizes}
    out = oq.oq_typecheck(sizes, env, op.body)
    bad = [x for x, t in out.items() if t != oq.NOR]
    if bad:
        raise BasisMismatch(f"oqasm block leaves {', '.join(bad)} outside the Nor basis")


def _modinv_ok(a: int, n: int) -> None:
    if n < 1:
        raise OracleError(f"modulus {n} must be positive")
    if math.gcd(a, n) != 1:
        raise OracleError(f"{a} is not invertible modulo {n}")


def basis_fn(op, widths: Sequence[int], args: Sequence[int] = ()) -> BasisFn:
    """Basis function of an oracle on a target made of ranges of ``widths``.

    ``args`` holds the already evaluated classical parameters.
    """
    w = sum(widths)
    if isinstance(op, AddConst):
        (k,) = args
        m = 1 << w

        def add(bits: str):
            return Fraction(0), int_to_bits((bits_to_int(bits) + k) % m, w)
        return add
    if isinstance(op, MulMod):
        a, n = args
        _modinv_ok(a, n)
        if n > (1 << w):
            raise OracleError(f"modulus {n} does not fit in {w} qubits")

        def mul(bits: str):
            y = bits_to_int(bits)
            return Fraction(0), bits if y >= n else int_to_bits(a * y % n, w)
        return mul
    if isinstance(op, PowMod):
        a, n = args
        _modinv_ok(a, n)
        if len(widths) < 2:
            raise OracleError("powmod needs an exponent range followed by a target")
        e_w = widths[0]
        t_w = w - e_w
        if n > (1 << t_w):
            raise OracleError(f"modulus {n} does not fit in {t_w} qubits")

        def powm(bits: str):
            e = bits_to_int(bits[:e_w])
            y = bits_to_int(bits[e_w:])
            if y >= n:
                return Fraction(0), bits
            return Fraction(0), bits[:e_w] + int_to_bits(y * pow(a, e, n) % n, t_w)
        return powm
    if isinstance(op, OqBlock):
        check_oqblock(op, w)
        sizes = dict(op.params)

        def block(bits: str):
            vals, pos = {}, 0
            for x, n in op.params:
                vals[x] = bits[pos:pos + n]
                pos += n
            out = oq.oq_eval(sizes, op.body, oq.bits_state(vals))
            return oq.global_phase(out), "".join(oq.read_bits(out, x) for x, _ in op.params)
        return block
    raise TypeError(op)


# -- gate lowering ---------------------------------------------------------

def _swap(a: int, b: int) -> List[G.Gate]:
    return [G.CX(a, b), G.CX(b, a), G.CX(a, b)]


def restore_layout(final: Dict, initial: Dict) -> List[G.Gate]:
    """Physical swaps that move each logical slot back to its original wire."""
    cur = dict(final)
    where = {v: k for k, v in cur.items()}
    out: List[G.Gate] = []
    for slot, home in initial.items():
        here = cur[slot]
        if here == home:
            continue
        other = where[home]
        out.extend(_swap(here, home))
        cur[slot], cur[other] = home, here
        where[home], where[here] = slot, other
    return out


def lower_oqasm(params: Sequence[Tuple[str, int]], body: oq.OqInstr, qubits: Sequence[int]) -> List[G.Gate]:
    sizes = dict(params)
    layout, pos = {}, 0
    for x, n in params:
        for k in range(n):
            layout[(x, k)] = qubits[pos + k]
        pos += n
    gates, final = oq.oq_lower(sizes, body, layout)
    return gates + restore_layout(final, layout)


def _gray_step(a: int, b: int, qubits: Sequence[int], pool: G.AncillaPool, level: int) -> List[G.Gate]:
    """Swap basis states a and b, which differ in exactly one bit."""
    t = (a ^ b).bit_length() - 1
    controls = [(q, (a >> i) & 1) for i, q in enumerate(qubits) if i != t]
    return G.mcx(controls, qubits[t], pool, level)


def transposition(a: int, b: int, qubits: Sequence[int], pool: G.AncillaPool, level: int = 0) -> List[G.Gate]:
    """Swap basis states a and b by walking a Gray path between them."""
    path = [a]
    cur = a
    for i in range(len(qubits)):
        if ((a ^ b) >> i) & 1:
            cur ^= 1 << i
            path.append(cur)
    steps = [(path[i], path[i + 1]) for i in range(len(path) - 1)]
    out: List[G.Gate] = []
    for x, y in steps:
        out.extend(_gray_step(x, y, qubits, pool, level))
    for x, y in reversed(steps[:-1]):
        out.extend(_gray_step(x, y, qubits, pool, level))
    return out


def permutation_gates(f: Callable[[int], int], qubits: Sequence[int], pool: G.AncillaPool,
                      level: int = 0) -> List[G.Gate]:
    """Generic circuit for the basis permutation y -> f(y) on ``qubits``."""
    size = 1 << len(qubits)
    image = [f(y) for y in range(size)]
    if sorted(image) != list(range(size)):
        raise OracleError("oracle is not a permutation of basis states")
    cur = list(range(size))  # cur[y]: where the amplitude of |y> sits now
    at = list(range(size))   # at[p]: which y sits at p
    out: List[G.Gate] = []
    for y in range(size):
        pos, target = cur[y], image[y]
        if pos == target:
            continue
        out.extend(transposition(pos, target, qubits, pool, level))
        other = at[target]
        cur[y], cur[other] = target, pos
        at[target], at[pos] = y, other
    return out


def lower_oracle(op, widths: Sequence[int], args: Sequence[int], qubits: Sequence[int],
                 pool: G.AncillaPool) -> List[G.Gate]:
    """Gates realizing an oracle on ``qubits`` (locus order, little-endian)."""
    w = len(qubits)
    if isinstance(op, AddConst):
        (k,) = args
        k %= 1 << w
        if k == 0:
            return []
        if w == 1:
            return [G.X(qubits[0])]
        return lower_oqasm((("x", w),), oq.build_const_adder("x", w, k), qubits)
    if isinstance(op, MulMod):
        fn = basis_fn(op, widths, args)
        return permutation_gates(lambda y: bits_to_int(fn(int_to_bits(y, w))[1]), qubits, pool)
    if isinstance(op, PowMod):
        basis_fn(op, widths, args)  # validates the parameters
        a, n = args
        e_w = widths[0]
        target = list(qubits[e_w:])
        out: List[G.Gate] = []
        for i in range(e_w):
            step = MulMod(None, None)
            body = lower_oracle(step, [len(target)], [pow(a, 1 << i, n), n], target, pool)
            if body:
                out.append(G.CtrlBlock(qubits[i], tuple(body)))
        return out
    if isinstance(op, OqBlock):
        check_oqblock(op, w)
        return lower_oqasm(op.params, op.body, qubits)
    raise TypeError(op)
