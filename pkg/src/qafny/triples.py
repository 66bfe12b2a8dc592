"""Predicates over symbolic states, the freeze/unfreeze/measure transformers,
and a semantic checker for Hoare triples with state-literal preconditions.

The transformers are thin wrappers over the primitives the interpreter
uses, so a proof-level step and the semantics it abbreviates compute the
same kets by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .errors import IllFormedPredicate, NonLiteralPrecondition, QafnyError
from .interp import Forced, Interp, enumerate_runs, guard_split, initial_state, measure_value
from .kinds import MVal, eval_aexp, eval_int, fv, guard_truth, kind_env, resolve_locus, sizes_of
from .qstate import (EN, TOL, Ket, bits_to_int, Locus, Nor, State, add_values, int_to_bits, merge_kets, pop_frozen,
                     push_frozen, reorder_value, state_wellformed, strip_stacks, to_en, values_equal)
from .syntax import (Assert, Bits, KAdd, KSum, KTerm, Not, NumBits, PAnd, PCmp, PF, PM, PMaps, PStar, PTrue, PU,
                     Program, QIf, Rep)
from .typecheck import ENT, TypeEnv, typecheck

# -- ket expressions -------------------------------------------------------


def _segment_bits(seg, values, sizes) -> str:
    if isinstance(seg, Bits):
        return seg.text
    if isinstance(seg, Rep):
        d = eval_int(seg.digit, values, sizes)
        if d not in (0, 1):
            raise IllFormedPredicate(f"rep digit {d} is not a bit")
        return str(d) * eval_int(seg.count, values, sizes)
    if isinstance(seg, NumBits):
        v, n = eval_int(seg.value, values, sizes), eval_int(seg.width, values, sizes)
        if not 0 <= v < 1 << n:
            raise IllFormedPredicate(f"{v} does not fit in {n} bits")
        return int_to_bits(v, n)
    raise TypeError(seg)


def _ket_terms(e, values, sizes, scale: complex, out: Dict[str, complex]) -> None:
    if isinstance(e, KAdd):
        _ket_terms(e.left, values, sizes, scale, out)
        _ket_terms(e.right, values, sizes, scale * e.sign, out)
    elif isinstance(e, KSum):
        lo, hi = eval_int(e.lo, values, sizes), eval_int(e.hi, values, sizes)
        inner = dict(values)
        for d in range(lo, hi):
            inner[e.var] = d
            _ket_terms(e.body, inner, sizes, scale, out)
    elif isinstance(e, KTerm):
        amp = 1 if e.amp is None else eval_aexp(e.amp, values, sizes)
        basis = "".join(_segment_bits(s, values, sizes) for k in e.kets for s in k.segments)
        out[basis] = out.get(basis, 0j) + scale * complex(amp)
    else:
        raise TypeError(e)


def eval_ketexpr(e, width: int, values=None, sizes=None) -> EN:
    """The EN value a ket expression denotes on a locus of ``width`` qubits."""
    terms: Dict[str, complex] = {}
    _ket_terms(e, dict(values or {}), dict(sizes or {}), 1 + 0j, terms)
    bad = sorted({len(b) for b in terms} - {width})
    if bad:
        raise IllFormedPredicate(f"ket of width {bad[0]} on a locus of width {width}")
    return merge_kets(EN(tuple(Ket(a, b) for b, a in sorted(terms.items())), width))


# -- frames ----------------------------------------------------------------

def _factor(v: EN, n: int) -> Optional[Tuple[EN, EN]]:
    """Product decomposition of a stackless value at position ``n``, if any."""
    m: Dict[Tuple[str, str], complex] = {}
    for k in v.kets:
        m[(k.basis[:n], k.basis[n:])] = m.get((k.basis[:n], k.basis[n:]), 0j) + k.amp
    if not m:
        return EN((), n), EN((), v.width - n)
    (p0, s0), a0 = max(m.items(), key=lambda kv: abs(kv[1]))
    rows = {p for p, _ in m}
    cols = {s for _, s in m}
    for p in rows:
        for s in cols:
            want = m.get((p, s0), 0j) * m.get((p0, s), 0j) / a0
            if abs(m.get((p, s), 0j) - want) > TOL:
                return None
    left = {p: m.get((p, s0), 0j) for p in rows}
    right = {s: m.get((p0, s), 0j) / a0 for s in cols}
    nl = math.sqrt(sum(abs(a) ** 2 for a in left.values()))
    return (merge_kets(EN(tuple(Ket(a / nl, p) for p, a in sorted(left.items())), n)),
            merge_kets(EN(tuple(Ket(a * nl, s) for s, a in sorted(right.items())), v.width - n)))


@dataclass
class Frame:
    value: EN
    split: bool  # True when the frame was cut out of a larger locus


def frame(state: State, loc: Locus) -> Optional[Frame]:
    """The value of ``loc`` carved out of ``state``; None if it is entangled with the rest."""
    want = loc.qubits()
    wanted = set(want)
    parts: List[Tuple[List, EN]] = []
    covered = set()
    split = False
    for l, v in state.items():
        qs = l.qubits()
        inside = [i for i, q in enumerate(qs) if q in wanted]
        if not inside:
            continue
        e = strip_stacks(to_en(v))
        if len(inside) < len(qs):
            outside = [i for i in range(len(qs)) if qs[i] not in wanted]
            fac = _factor(reorder_value(e, inside + outside), len(inside))
            if fac is None:
                return None
            e = fac[0]
            split = True
        got = [qs[i] for i in inside]
        covered.update(got)
        parts.append((got, e))
    if covered != wanted:
        missing = ", ".join(f"{x}[{i}]" for x, i in sorted(wanted - covered))
        raise IllFormedPredicate(f"qubits {missing} are not defined in the state")
    order: List = []
    value: Optional[EN] = None
    for got, e in parts:
        order += got
        value = e if value is None else _tensor(value, e)
    pos = {q: i for i, q in enumerate(order)}
    return Frame(reorder_value(value, [pos[q] for q in want]), split)


def _tensor(a: EN, b: EN) -> EN:
    return merge_kets(EN(tuple(Ket(x.amp * y.amp, x.basis + y.basis) for x in a.kets for y in b.kets),
                         a.width + b.width))


def _same(a: EN, b: EN, up_to_phase: bool, tol: float = 1e-9) -> bool:
    if up_to_phase and a.kets and b.kets:
        ka = max(a.kets, key=lambda k: abs(k.amp))
        kb = {k.basis: k.amp for k in b.kets}.get(ka.basis, 0j)
        if abs(kb) > tol:
            ph = ka.amp / kb
            ph /= abs(ph)
            b = EN(tuple(Ket(k.amp * ph, k.basis, k.stack) for k in b.kets), b.width)
    return values_equal(a, b, tol, ignore_stack=True)


# -- transformers ----------------------------------------------------------

def transform_F(guard, kappa: Locus, rest: Locus, v: EN, values=None, sizes=None) -> Tuple[EN, EN]:
    """Freeze: apply the guard, keep the satisfying kets with ``kappa`` on the stack.

    Returns the frozen value over ``rest`` and the unsatisfying part over
    ``kappa ++ rest``.
    """
    yes, no = guard_split(to_en(v), kappa, guard, dict(values or {}), dict(sizes or {}))
    return push_frozen(yes, kappa.width), no


def transform_U(frozen_post: EN, no: EN) -> EN:
    """Unfreeze: pop the guard bits back and add the kets the guard rejected."""
    back = pop_frozen(frozen_post) if frozen_post.kets else EN((), no.width)
    return add_values(back, no)


def transform_M(n: int, v: EN, outcome: int) -> Tuple[EN, MVal]:
    """Measure the first ``n`` positions with a forced outcome."""
    return measure_value(to_en(v), n, Forced([outcome]))


# -- model checking --------------------------------------------------------

def _conjuncts(p, star: bool) -> List:
    kind = PStar if star else PAnd
    if isinstance(p, kind):
        return _conjuncts(p.left, star) + _conjuncts(p.right, star)
    return [p]


def _is_neg(a, b) -> bool:
    return (isinstance(a, Not) and a.arg == b) or (isinstance(b, Not) and b.arg == a)


def _cmp_pred(op: str, a, b) -> bool:
    if op in ("==", "!=") and (isinstance(a, float) or isinstance(b, float) or isinstance(a, complex)):
        eq = abs(a - b) <= 1e-9
        return eq if op == "==" else not eq
    return {"<": a < b, "<=": a <= b, "==": a == b, "!=": a != b, ">": a > b, ">=": a >= b}[op]


def _pred_loci(p, vals, sizes) -> List[Locus]:
    if isinstance(p, (PAnd, PStar)):
        return _pred_loci(p.left, vals, sizes) + _pred_loci(p.right, vals, sizes)
    if isinstance(p, PMaps):
        loc = p.locus
        if isinstance(loc, PM):
            return [resolve_locus(loc.locus, vals, sizes)]
        if isinstance(loc, (PF, PU)):
            return [resolve_locus(loc.locus + loc.rest, vals, sizes)]
        return [resolve_locus(loc, vals, sizes)]
    return []


class _Checker:
    def __init__(self, omega, state: State, store: Mapping[str, MVal], values):
        self.omega = omega
        self.sizes = sizes_of(omega)
        self.state = state
        self.vals = dict(values or {})
        self.vals.update(store)

    def holds(self, p) -> bool:
        if isinstance(p, PTrue):
            return True
        if isinstance(p, PCmp):
            return _cmp_pred(p.op, eval_aexp(p.left, self.vals, self.sizes), eval_aexp(p.right, self.vals, self.sizes))
        if isinstance(p, PAnd):
            return self.holds(p.left) and self.holds(p.right)
        if isinstance(p, PStar):
            return self.star(_conjuncts(p, True))
        if isinstance(p, PMaps):
            if isinstance(p.locus, PU):
                raise IllFormedPredicate("an unfreeze locus needs its negated partner in the same conjunction")
            return self.maps(p)
        raise IllFormedPredicate(f"unknown predicate {type(p).__name__}")

    def star(self, parts: List) -> bool:
        loci = [l for q in parts for l in _pred_loci(q, self.vals, self.sizes)]
        for i in range(len(loci)):
            for j in range(i + 1, len(loci)):
                if loci[i].overlaps(loci[j]) and not self._paired(parts, loci[i], loci[j]):
                    raise IllFormedPredicate(f"separated loci {loci[i]} and {loci[j]} overlap")
        us = [q for q in parts if isinstance(q, PMaps) and isinstance(q.locus, PU)]
        used = set()
        for i, a in enumerate(us):
            if i in used:
                continue
            for j in range(i + 1, len(us)):
                b = us[j]
                if j not in used and _is_neg(a.locus.guard, b.locus.guard) \
                        and a.locus.locus == b.locus.locus and a.locus.rest == b.locus.rest:
                    used |= {i, j}
                    if not self.unfreeze_pair(a, b):
                        return False
                    break
            else:
                raise IllFormedPredicate("an unfreeze locus needs its negated partner in the same conjunction")
        return all(self.holds(q) for q in parts if not (isinstance(q, PMaps) and isinstance(q.locus, PU)))

    def _paired(self, parts, l1, l2) -> bool:
        # the two halves of an unfreeze pair describe the same locus
        return l1 == l2 and sum(1 for q in parts if isinstance(q, PMaps) and isinstance(q.locus, PU)) >= 2

    def _frame(self, loc: Locus) -> Optional[Frame]:
        return frame(self.state, loc)

    def maps(self, p: PMaps) -> bool:
        loc = p.locus
        if isinstance(loc, PM):
            kappa = resolve_locus(loc.locus, self.vals, self.sizes)
            mv = self.vals.get(loc.var)
            if not isinstance(mv, MVal):
                raise IllFormedPredicate(f"{loc.var} is not bound to a measurement result")
            n = eval_int(loc.n, self.vals, self.sizes)
            fr = self._frame(kappa)
            if fr is None:
                return False
            try:
                rest, got = transform_M(n, fr.value, mv.outcome)
            except QafnyError:
                return False
            if abs(got.prob - mv.prob) > 1e-9:
                return False
            return _same(rest, eval_ketexpr(p.ket, kappa.width - n, self.vals, self.sizes), fr.split)
        if isinstance(loc, PF):
            kappa = resolve_locus(loc.locus, self.vals, self.sizes)
            rest = resolve_locus(loc.rest, self.vals, self.sizes)
            fr = self._frame(kappa + rest)
            if fr is None:
                return False
            frozen, _ = transform_F(loc.guard, kappa, rest, fr.value, self.vals, self.sizes)
            return _same(strip_stacks(frozen), eval_ketexpr(p.ket, rest.width, self.vals, self.sizes), fr.split)
        kappa = resolve_locus(loc, self.vals, self.sizes)
        fr = self._frame(kappa)
        if fr is None:
            return False
        return _same(fr.value, eval_ketexpr(p.ket, kappa.width, self.vals, self.sizes), fr.split)

    def unfreeze_pair(self, a: PMaps, b: PMaps) -> bool:
        kappa = resolve_locus(a.locus.locus, self.vals, self.sizes)
        rest = resolve_locus(a.locus.rest, self.vals, self.sizes)
        whole = kappa + rest
        fr = self._frame(whole)
        if fr is None:
            return False
        e1 = eval_ketexpr(a.ket, whole.width, self.vals, self.sizes)
        e2 = eval_ketexpr(b.ket, whole.width, self.vals, self.sizes)
        for e, guard in ((e1, a.locus.guard), (e2, b.locus.guard)):
            truth = guard_truth(guard, self.vals, self.sizes, kappa)
            if any(abs(k.amp) > TOL and not truth(k.basis[:kappa.width]) for k in e.kets):
                return False
        return _same(fr.value, add_values(e1, e2), fr.split)


def model_check_pred(omega, env, state: State, store: Mapping[str, MVal], pred, values=None) -> bool:
    """Does ``state`` (with classical store ``store``) satisfy ``pred``?"""
    return _Checker(omega, state, store, values).holds(pred)


# -- triples ---------------------------------------------------------------

def state_from_literal(program: Program, pred, values=None) -> State:
    """The state a state-literal precondition describes; unmentioned qubits are |0>."""
    omega = kind_env(program)
    sizes = sizes_of(omega)
    vals = dict(values or {})
    entries: Dict[Locus, object] = {}
    for c in _conjuncts_all(pred):
        if isinstance(c, PTrue):
            continue
        if isinstance(c, PCmp):
            try:
                ok = _cmp_pred(c.op, eval_aexp(c.left, vals, sizes), eval_aexp(c.right, vals, sizes))
            except QafnyError as exc:
                raise NonLiteralPrecondition(f"comparison is not closed: {exc}") from None
            if not ok:
                raise NonLiteralPrecondition("the precondition contains a false comparison")
            continue
        if not isinstance(c, PMaps) or not isinstance(c.locus, tuple):
            raise NonLiteralPrecondition("preconditions may only map plain loci to kets")
        loc = resolve_locus(c.locus, vals, sizes)
        if any(loc.overlaps(l) for l in entries):
            raise NonLiteralPrecondition(f"locus {loc} is described twice")
        v = eval_ketexpr(c.ket, loc.width, vals, sizes)
        v = EN(tuple(k for k in v.kets if abs(k.amp) > TOL), v.width)
        entries[loc] = Nor(v.kets[0].amp, v.kets[0].basis) if len(v.kets) == 1 else v
    covered = {q for l in entries for q in l.qubits()}
    for d in program.decls:
        run = [i for i in range(d.size) if (d.name, i) not in covered]
        for lo in run:
            if lo - 1 in run:
                continue
            hi = lo
            while hi in run:
                hi += 1
            entries[Locus.of(d.name, lo, hi)] = Nor(1 + 0j, "0" * (hi - lo))
    order = {d.name: i for i, d in enumerate(program.decls)}
    st = State(sorted(entries.items(), key=lambda kv: (order[kv[0].ranges[0].var], kv[0].ranges[0].lo)))
    bad = state_wellformed(st, "C")
    if bad:
        raise NonLiteralPrecondition("precondition is not a well-formed state: " + "; ".join(bad))
    return st


def _conjuncts_all(p) -> List:
    if isinstance(p, (PAnd, PStar)):
        return _conjuncts_all(p.left) + _conjuncts_all(p.right)
    return [p]


@dataclass
class BranchReport:
    outcomes: Tuple[int, ...]
    prob: float
    post: Optional[bool]
    asserts: List[Tuple[Tuple, bool]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.post is not False and all(ok for _, ok in self.asserts)


@dataclass
class TripleReport:
    branches: List[BranchReport]
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.branches) and all(b.passed for b in self.branches)

    def lines(self) -> List[str]:
        out = []
        for b in self.branches:
            tag = ",".join(map(str, b.outcomes)) or "-"
            for path, ok in b.asserts:
                site = ".".join(map(str, path))
                out.append(f"branch {tag}\tassert {site}\t{'pass' if ok else 'fail'}")
            if b.post is not None:
                out.append(f"branch {tag}\tpost\t{'pass' if b.post else 'fail'}")
        return out + self.notes


def _assert_hook(interp: Interp, env, st: State, stmt: Assert) -> bool:
    try:
        return model_check_pred(interp.omega, env, st, interp.store, stmt.pred, interp._env_values())
    except IllFormedPredicate:
        return False


def _final_store(res) -> Dict[str, MVal]:
    return {var: MVal(prob, bits_to_int(bits)) for var, bits, prob in res.outcomes}


def check_triple(program: Program, pre=None, post=None, values=None) -> TripleReport:
    """Run ``program`` from the state ``pre`` describes and check ``post`` on every branch.

    Every ``assert`` met on the way is checked too.  Without ``pre`` the run
    starts from the all-zero state.
    """
    start = state_from_literal(program, pre, values) if pre is not None else initial_state(program)
    omega = kind_env(program)
    out = []
    for b in enumerate_runs(program, state=start, on_assert=_assert_hook):
        ok = None
        if post is not None:
            try:
                ok = model_check_pred(omega, b.result.env, b.result.state, _final_store(b.result), post, values)
            except IllFormedPredicate:
                ok = False
        out.append(BranchReport(b.outcomes, b.prob, ok, list(b.result.asserts)))
    return TripleReport(out)


def check_program(program: Program) -> TripleReport:
    """Check a program's asserts; a leading state-literal assert fixes the start state."""
    pre = None
    notes = []
    if program.body and isinstance(program.body[0], Assert):
        try:
            state_from_literal(program, program.body[0].pred)
            pre = program.body[0].pred
        except NonLiteralPrecondition as exc:
            notes.append(f"leading assert is not a state literal ({exc}); starting from all zeros")
    rep = check_triple(program, pre)
    rep.notes += notes
    return rep


# -- transformer / semantics coincidence ----------------------------------

class _Witness(Interp):
    """Interpreter that re-derives every quantum conditional through F, body, U."""

    def __init__(self, *args, records=None, **kw):
        super().__init__(*args, **kw)
        self.records = [] if records is None else records

    def qif(self, env, st, s: QIf, path):
        env0, st0 = self._replay(env, st, path)
        gl = fv(self.omega, s.guard, self.values)
        l = st0.locus_of(gl.qubits()[0])
        rest = l.drop(gl.width)
        frozen, no = transform_F(s.guard, gl, rest, to_en(st0[l]), self._env_values(), self.sizes)
        inner_env = TypeEnv({rest: ENT})
        typed = typecheck(self.omega, inner_env, "M", s.body, values=self.values)
        sub = _Witness(self.omega, typed.plans, self.policy, values=self.values, records=self.records)
        sub.store = dict(self.store)
        _, out = sub.block(inner_env, State({rest: frozen}), "M", s.body, ())
        (final,) = out.loci()
        v = out[final]
        if final != rest:
            pos = {q: i for i, q in enumerate(final.qubits())}
            v = reorder_value(to_en(v), [pos[q] for q in rest.qubits()])
        derived = transform_U(to_en(v), no)
        env1, st1 = super().qif(env, st, s, path)
        self.records.append((path, values_equal(st1[l], derived, 1e-12)))
        return env1, st1


def coincidence(program: Program, state: Optional[State] = None, policy=None) -> List[Tuple[Tuple, bool]]:
    """For each quantum conditional executed: does U . body . F equal the interpreter?"""
    from .interp import Seeded, env_of_state
    from .kinds import check_binders, inline_procs
    if program.procs:
        program = inline_procs(program)
    check_binders(program)
    omega = kind_env(program)
    order = {d.name: i for i, d in enumerate(program.decls)}
    st = state if state is not None else initial_state(program)
    env = env_of_state(st)
    typed = typecheck(omega, env, "C", program.body, decl_order=order)
    w = _Witness(omega, typed.plans, policy or Seeded(0))
    w.block(env, st, "C", program.body, ())
    return w.records
