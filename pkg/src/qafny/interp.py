"""Big-step symbolic interpreter driven by the typechecker's rewrite plans."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import ForcedOutcomeImpossible, QafnyError, TypeMismatch, WidthMismatch
from .kinds import KC, KM, MVal, Kind, eval_aexp, eval_bexp, guard_function, kind_env, resolve_locus, sizes_of
from .oracles import basis_fn
from .qstate import (EN, ZERO_AMP, Had, Ket, Locus, Nor, State, add_values, all_bitstrings, alpha, bits_to_int, frac,
                     int_to_bits, merge_kets, partition_kets, pop_frozen, push_frozen, to_en)
from .syntax import ORACLES, Apply, Assert, CIf, For, Gate, LetC, LetM, Program, QIf, Reduce, Skip, Stmt
from .typecheck import (ENT, TypeEnv, TypeResult, loop_bounds, loop_iteration, oracle_args, reduce_n, replay_env,
                        replay_state, result_type, typecheck)


# -- measurement policies --------------------------------------------------

@dataclass
class Seeded:
    seed: int = 0

    def __post_init__(self):
        self.rng = random.Random(self.seed)

    def choose(self, dist: Dict[str, float]) -> str:
        outcomes = sorted(dist)
        return self.rng.choices(outcomes, weights=[dist[o] for o in outcomes])[0]


@dataclass
class Forced:
    """Outcomes (little-endian integers of the measured variable) in site order."""

    outcomes: Sequence[int] = ()
    used: int = 0

    def choose(self, dist: Dict[str, float]) -> str:
        if self.used >= len(self.outcomes):
            raise NeedOutcome(dist)
        v = self.outcomes[self.used]
        self.used += 1
        width = len(next(iter(dist)))
        if not 0 <= v < 1 << width:
            raise ForcedOutcomeImpossible(f"outcome {v} does not fit in {width} bits")
        c = int_to_bits(v, width)
        if dist.get(c, 0.0) <= ZERO_AMP:
            raise ForcedOutcomeImpossible(f"outcome {v} has probability zero")
        return c


class NeedOutcome(QafnyError):
    """Raised by a Forced policy that ran out of outcomes."""

    exit_code = 3

    def __init__(self, dist: Dict[str, float]):
        super().__init__("no forced outcome left for a measurement")
        self.dist = dist


# -- ket-wise semantics ----------------------------------------------------

def _prefix_map(v: EN, w: int, fn: Callable[[complex, str], List[Tuple[complex, str]]]) -> EN:
    kets = []
    for k in v.kets:
        for amp, c in fn(k.amp, k.basis[:w]):
            kets.append(Ket(amp, c + k.basis[w:], k.stack))
    return merge_kets(EN(tuple(kets), v.width))


def h_kets(v: EN, w: int) -> EN:
    s = 1 / math.sqrt(2 ** w)
    outs = list(all_bitstrings(w))

    def fn(amp, c):
        res = []
        for j in outs:
            par = sum(1 for a, b in zip(c, j) if a == "1" and b == "1") & 1
            res.append((amp * s * (-1 if par else 1), j))
        return res
    return _prefix_map(v, w, fn)


def qft_kets(v: EN, w: int, inverse: bool = False) -> EN:
    s = 1 / math.sqrt(2 ** w)
    sign = -1 if inverse else 1

    def fn(amp, c):
        y = bits_to_int(c)
        return [(amp * s * alpha(Fraction(sign * y * k, 2 ** w)), int_to_bits(k, w)) for k in range(2 ** w)]
    return _prefix_map(v, w, fn)


def oracle_kets(v: EN, w: int, f) -> EN:
    def fn(amp, c):
        r, c2 = f(c)
        return [(amp * alpha(r), c2)]
    return _prefix_map(v, w, fn)


def _grouped(v: EN, w: int) -> Dict[Tuple[str, tuple], Dict[str, complex]]:
    groups: Dict[Tuple[str, tuple], Dict[str, complex]] = {}
    for k in v.kets:
        g = groups.setdefault((k.basis[w:], k.stack), {})
        g[k.basis[:w]] = g.get(k.basis[:w], 0j) + k.amp
    return groups


def dis_value(v: EN, w: int) -> EN:
    """Reflection about the mean over the 2^w prefix slots of each suffix group."""
    kets = []
    slots = list(all_bitstrings(w))
    for (suffix, stack), amps in _grouped(v, w).items():
        total = sum(amps.values())
        for c in slots:
            z = total / 2 ** (w - 1) - amps.get(c, 0j)
            kets.append(Ket(z, c + suffix, stack))
    return merge_kets(EN(tuple(kets), v.width))


def reduce_value(v: EN, w: int, c: str, n: int) -> EN:
    """The amplification function evaluated literally on each suffix group."""
    if len(c) != w:
        raise WidthMismatch(f"reduce bitstring {c} does not have width {w}")
    hit = 1 / (2 ** n) ** 0.25
    miss = math.sqrt(1 - 1 / math.sqrt(2 ** n))
    slots = [int_to_bits(u, w) for u in range(2 ** w)]
    weight = {u: (hit if u == c else miss) for u in slots}
    kets = []
    for (suffix, stack), amps in _grouped(v, w).items():
        total = sum(weight[u] * amps.get(u, 0j) for u in slots)
        for j in slots:
            z = total / 2 ** (w - 1) - weight[j] * amps.get(j, 0j)
            kets.append(Ket(z, j + suffix, stack))
    return merge_kets(EN(tuple(kets), v.width))


def _had_from_bits(bits: str) -> Had:
    # alpha(1/2^c) for c in {0, 1}, as turns reduced mod 1
    return Had(tuple(Fraction(1, 2 ** int(b)) % 1 for b in bits))


def _bits_from_had(v: Had) -> str:
    out = []
    for r in v.phases:
        r = frac(r)
        if r == 0:
            out.append("0")
        elif r == Fraction(1, 2):
            out.append("1")
        else:
            raise TypeMismatch(f"H on a Had qubit with phase {r} does not give a basis state")
    return "".join(out)


def apply_op_value(op, v, w: int, values, sizes, widths: Sequence[int]):
    """Apply a unitary to the leading ``w`` positions of a value."""
    if isinstance(op, Gate) and op.name == "H":
        if isinstance(v, Nor):
            return _had_from_bits(v.bits)
        if isinstance(v, Had):
            return Nor(1 + 0j, _bits_from_had(v))
        return h_kets(v, w)
    if isinstance(op, Gate) and op.name == "QFT":
        return qft_kets(to_en(v), w)
    if isinstance(op, Gate) and op.name == "RQFT":
        return qft_kets(to_en(v), w, inverse=True)
    if isinstance(op, Gate) and op.name == "dis":
        return dis_value(to_en(v), w)
    if isinstance(op, Reduce):
        return reduce_value(to_en(v), w, op.bits, reduce_n(op, values, sizes))
    if isinstance(op, ORACLES):
        f = basis_fn(op, widths, oracle_args(op, values, sizes))
        if isinstance(v, Nor):
            r, c = f(v.bits)
            return Nor(v.amp * alpha(r), c, v.stack)
        return oracle_kets(to_en(v), w, f)
    raise TypeMismatch(f"cannot apply {op}")


# -- the interpreter -------------------------------------------------------

@dataclass
class RunResult:
    state: State
    store: Dict[str, MVal]
    env: TypeEnv
    trace: List[dict] = field(default_factory=list)
    outcomes: List[Tuple[str, str, float]] = field(default_factory=list)  # (variable, bits, prob)
    asserts: List[Tuple[Tuple, bool]] = field(default_factory=list)


class Interp:
    def __init__(self, omega: Dict[str, Kind], plans, policy=None, trace: bool = False,
                 on_assert: Optional[Callable] = None, values=None):
        self.omega = dict(omega)
        self.plans = plans
        self.policy = policy if policy is not None else Seeded(0)
        self.values: Dict[str, object] = dict(values or {})
        self.store: Dict[str, MVal] = {}
        self.trace_on = trace
        self.trace: List[dict] = []
        self.outcomes: List[Tuple[str, str, float]] = []
        self.on_assert = on_assert
        self.asserts: List[Tuple[Tuple, bool]] = []

    @property
    def sizes(self):
        return sizes_of(self.omega)

    def _env_values(self):
        vals = dict(self.values)
        vals.update(self.store)
        return vals

    def _replay(self, env: TypeEnv, st: State, path: Tuple) -> Tuple[TypeEnv, State]:
        plan = self.plans.get(path, ())
        return replay_env(env, plan), replay_state(st, plan)

    def _post(self, env, st, mode, path):
        if mode == "C":
            env, st = self._replay(env, st, path + ("post",))
            if self.trace_on:
                self.trace.append({"site": ".".join(map(str, path)), "state": st.to_json()})
        return env, st

    def block(self, env, st, mode, stmts, prefix):
        for i, s in enumerate(stmts):
            env, st = self.stmt(env, st, mode, s, prefix + (i,))
        return env, st

    def stmt(self, env: TypeEnv, st: State, mode: str, s: Stmt, path: Tuple):
        if isinstance(s, Skip):
            return self._post(env, st, mode, path)
        if isinstance(s, Assert):
            if self.on_assert is not None:
                ok = self.on_assert(self, env, st, s)
                self.asserts.append((path, ok))
            return self._post(env, st, mode, path)
        if isinstance(s, Apply):
            env, st = self.apply(env, st, s, path)
            return self._post(env, st, mode, path)
        if isinstance(s, LetC):
            self.values[s.var] = eval_aexp(s.value, self._env_values(), self.sizes)
            self.omega[s.var] = KC
            try:
                env, st = self.block(env, st, mode, s.body, path + ("body",))
            finally:
                self.values.pop(s.var, None)
                self.omega.pop(s.var, None)
            return self._post(env, st, mode, path)
        if isinstance(s, LetM):
            env, st, mv = self.measure(env, st, s, path)
            self.store[s.var] = mv
            self.omega[s.var] = KM
            try:
                env, st = self.block(env, st, mode, s.body, path + ("body",))
            finally:
                self.store.pop(s.var, None)
                self.omega.pop(s.var, None)
            return self._post(env, st, mode, path)
        if isinstance(s, QIf):
            env, st = self.qif(env, st, s, path)
            return self._post(env, st, mode, path)
        if isinstance(s, CIf):
            if eval_bexp(s.guard, self._env_values(), self.sizes):
                env, st = self.block(env, st, mode, s.then, path + ("then",))
            elif s.orelse is not None:
                env, st = self.block(env, st, mode, s.orelse, path + ("else",))
            return self._post(env, st, mode, path)
        if isinstance(s, For):
            lo, hi = loop_bounds(s, self.values, self.sizes)
            self.omega[s.var] = KC
            try:
                for j in range(lo, hi):
                    self.values[s.var] = j
                    inner = loop_iteration(s, self.omega, self._env_values())
                    if inner is None:
                        env, st = self.block(env, st, mode, s.body, path + ("for", j))
                    else:
                        env, st = self.stmt(env, st, mode, inner, path + ("for", j))
            finally:
                self.values.pop(s.var, None)
                self.omega.pop(s.var, None)
            return self._post(env, st, mode, path)
        raise TypeMismatch(f"cannot run {type(s).__name__}")

    def _prefixed(self, st: State, first) -> Locus:
        l = st.locus_of(first)
        if l is None:
            raise TypeMismatch("target qubits are not in the state")
        return l

    def apply(self, env, st, s: Apply, path):
        target = resolve_locus(s.locus, self.values, self.sizes)
        env, st = self._replay(env, st, path)
        return self.apply_unitary(env, st, target, s.op)

    def apply_unitary(self, env, st, target: Locus, op):
        """Apply ``op`` to ``target``, which a replayed plan put at the head of a locus."""
        l = self._prefixed(st, target.qubits()[0])
        if l.qubits()[:target.width] != target.qubits():
            raise TypeMismatch(f"{target} is not a prefix of {l}")
        v = st[l]
        out = apply_op_value(op, v, target.width, self.values, self.sizes, [r.width for r in target.ranges])
        return env.replace([l], [(l, result_type(op, env[l]))]), st.replace([l], [(l, out)])

    def measure(self, env, st, s: LetM, path):
        env, st = self._replay(env, st, path)
        n = self.sizes[s.target]
        target = Locus.of(s.target, 0, n)
        l = self._prefixed(st, target.qubits()[0])
        v = to_en(st[l])
        rest_v, mv = measure_value(v, n, self.policy)
        self.outcomes.append((s.var, int_to_bits(mv.outcome, n), mv.prob))
        rest = l.drop(n)
        if rest:
            return env.replace([l], [(rest, ENT)]), st.replace([l], [(rest, rest_v)]), mv
        return env.replace([l], []), st.replace([l], []), mv

    def qif(self, env, st, s: QIf, path):
        from .kinds import fv
        env, st = self._replay(env, st, path)
        gl = fv(self.omega, s.guard, self.values)
        l = self._prefixed(st, gl.qubits()[0])
        v = to_en(st[l])
        yes, no = guard_split(v, gl, s.guard, self._env_values(), self.sizes)
        rest = l.drop(gl.width)
        inner_env = TypeEnv({rest: ENT})
        inner_st = State({rest: push_frozen(yes, gl.width)})
        inner_env, inner_st = self.block(inner_env, inner_st, "M", s.body, path + ("body",))
        inner_env, inner_st = self._replay(inner_env, inner_st, path + ("exit",))
        (final,) = inner_st.loci()
        back = pop_frozen(inner_st[final]) if inner_st[final].kets else EN((), l.width)
        out = add_values(back, no)
        return env.replace([l], [(l, ENT)]), st.replace([l], [(l, out)])


def guard_split(v: EN, gl: Locus, guard, values, sizes) -> Tuple[EN, EN]:
    """Apply the guard's side effect and partition the kets by its truth."""
    g = guard_function(guard, values, sizes, gl)
    w = gl.width
    truth = {}
    kets = []
    for k in v.kets:
        new, t = g(k.basis[:w])
        kets.append(Ket(k.amp, new + k.basis[w:], k.stack))
        truth[new] = t
    moved = merge_kets(EN(tuple(kets), v.width))
    return partition_kets(moved, w, lambda c: truth[c])


def measure_value(v: EN, n: int, policy) -> Tuple[EN, MVal]:
    """Measure the leading ``n`` positions: the filtered remainder and the result."""
    dist: Dict[str, float] = {}
    for k in v.kets:
        dist[k.basis[:n]] = dist.get(k.basis[:n], 0.0) + abs(k.amp) ** 2
    c = policy.choose(dist)
    r = dist[c]
    scale = 1 / math.sqrt(r)
    kets = tuple(Ket(k.amp * scale, k.basis[n:], k.stack) for k in v.kets if k.basis[:n] == c)
    rest = merge_kets(EN(kets, v.width - n))
    return rest, MVal(r, bits_to_int(c))


# -- program entry points --------------------------------------------------

def initial_state(program: Program) -> State:
    return State({Locus.of(d.name, 0, d.size): Nor(1 + 0j, "0" * d.size) for d in program.decls})


def run_program(program: Program, policy=None, trace: bool = False, state: Optional[State] = None,
                env: Optional[TypeEnv] = None, on_assert=None, typed: Optional[TypeResult] = None) -> RunResult:
    """Typecheck then run a program from the all-zero state (or ``state``)."""
    from .kinds import check_binders, inline_procs
    if program.procs:
        program = inline_procs(program)
    check_binders(program)
    omega = kind_env(program)
    order = {d.name: i for i, d in enumerate(program.decls)}
    if state is None:
        state = initial_state(program)
    if env is None:
        env = env_of_state(state)
    if typed is None:
        typed = typecheck(omega, env, "C", program.body, decl_order=order)
    it = Interp(omega, typed.plans, policy, trace, on_assert)
    out_env, out_st = it.block(env, state, "C", program.body, ())
    return RunResult(out_st, dict(it.store), out_env, it.trace, it.outcomes, it.asserts)


def env_of_state(st: State) -> TypeEnv:
    return TypeEnv({l: type(v).__name__ for l, v in st.items()})


@dataclass
class Branch:
    outcomes: Tuple[int, ...]
    prob: float
    result: RunResult


def enumerate_runs(program: Program, state: Optional[State] = None, on_assert=None,
                   typed: Optional[TypeResult] = None) -> List[Branch]:
    """Every measurement branch with nonzero probability, found by forcing outcomes."""
    out: List[Branch] = []
    pending: List[Tuple[int, ...]] = [()]
    while pending:
        forced = pending.pop()
        try:
            res = run_program(program, Forced(list(forced)), state=state, on_assert=on_assert, typed=typed)
        except NeedOutcome as need:
            for c in sorted(need.dist, reverse=True):
                if need.dist[c] > ZERO_AMP:
                    pending.append(forced + (bits_to_int(c),))
            continue
        prob = 1.0
        for _, _, p in res.outcomes:
            prob *= p
        out.append(Branch(forced, prob, res))
    out.sort(key=lambda b: b.outcomes)
    return out
