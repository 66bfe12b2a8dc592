"""Flow-sensitive locus typing with rewrite plans.

The checker walks a program with concrete classical values, unrolling
loops, and keeps an ordered type environment from loci to Nor/Had/EN.
Before each statement it plans the environment rewrites that bring the
statement's target qubits to the front of one locus.  Each plan step has
a twin on states, so the interpreter replays exactly what was checked.

Plans are stored by site path: a statement at index ``i`` of a block has
path ``prefix + (i,)``; bodies extend it with ``("body", i)``,
``("then", i)``, ``("else", i)`` and loop iterations with ``("for", j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import (CloneViolation, MeasureInQuantumConditional, NotASubtype, OracleError, SymbolicBound,
                     TypeMismatch, UnboundLocus, UnboundVariable, WidthMismatch)
from .kinds import KC, KM, Kind, eval_aexp, eval_bexp, fv, kind_of, resolve_locus, sizes_of
from .oracles import check_oqblock
from .qstate import Locus, Qubit, State, join_values, permute_value, split_value, to_en
from .syntax import (ORACLES, AddConst, Apply, Assert, CIf, For, Gate, LetC, LetM, MulMod, OqBlock, PowMod, Program,
                     QIf, Reduce, Skip, Stmt)

NOR, HAD, ENT = "Nor", "Had", "EN"
_SUB = {(NOR, ENT), (HAD, ENT)}


def subtype_cast(t: str, t2: str) -> None:
    if t != t2 and (t, t2) not in _SUB:
        raise NotASubtype(f"{t} is not a subtype of {t2}")


def is_subtype(t: str, t2: str) -> bool:
    return t == t2 or (t, t2) in _SUB


def join_type(t1: str, t2: str) -> str:
    return t1 if t1 == t2 and t1 in (NOR, HAD) else ENT


class TypeEnv:
    """Ordered map from disjoint loci to quantum types."""

    def __init__(self, entries=None):
        self.entries: Dict[Locus, str] = dict(entries or {})

    def copy(self) -> "TypeEnv":
        return TypeEnv(self.entries)

    def loci(self) -> List[Locus]:
        return list(self.entries)

    def items(self):
        return self.entries.items()

    def __getitem__(self, l: Locus) -> str:
        return self.entries[l]

    def __contains__(self, l) -> bool:
        return l in self.entries

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, TypeEnv) and list(self.entries.items()) == list(other.entries.items())

    def locus_of(self, q: Qubit) -> Optional[Locus]:
        for l in self.entries:
            if q in l:
                return l
        return None

    def replace(self, removed: Sequence[Locus], added: Sequence[Tuple[Locus, str]]) -> "TypeEnv":
        out: Dict[Locus, str] = {}
        inserted = False
        for l, t in self.entries.items():
            if l in removed:
                if not inserted:
                    out.update(added)
                    inserted = True
                continue
            out[l] = t
        if not inserted:
            out.update(added)
        return TypeEnv(out)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{l}: {t}" for l, t in self.entries.items()) + "}"

    __repr__ = __str__


# -- plan steps ------------------------------------------------------------

def _need(container, l: Locus):
    if l not in container:
        raise UnboundLocus(f"locus {l} is not in the environment")


@dataclass(frozen=True)
class Cast:
    """Subtype cast of a whole locus to EN."""

    locus: Locus

    def apply_env(self, env: TypeEnv) -> TypeEnv:
        _need(env, self.locus)
        subtype_cast(env[self.locus], ENT)
        return env.replace([self.locus], [(self.locus, ENT)])

    def apply_state(self, st: State) -> State:
        _need(st, self.locus)
        return st.replace([self.locus], [(self.locus, to_en(st[self.locus]))])


@dataclass(frozen=True)
class Split:
    locus: Locus
    n: int

    def apply_env(self, env: TypeEnv) -> TypeEnv:
        _need(env, self.locus)
        t = env[self.locus]
        return env.replace([self.locus], [(self.locus.prefix(self.n), t), (self.locus.drop(self.n), t)])

    def apply_state(self, st: State) -> State:
        _need(st, self.locus)
        a, b = split_value(st[self.locus], self.n)
        return st.replace([self.locus], [(self.locus.prefix(self.n), a), (self.locus.drop(self.n), b)])


@dataclass(frozen=True)
class Join:
    left: Locus
    right: Locus

    def apply_env(self, env: TypeEnv) -> TypeEnv:
        _need(env, self.left)
        _need(env, self.right)
        t = join_type(env[self.left], env[self.right])
        return env.replace([self.left, self.right], [(self.left + self.right, t)])

    def apply_state(self, st: State) -> State:
        _need(st, self.left)
        _need(st, self.right)
        v = join_values(st[self.left], st[self.right])
        return st.replace([self.left, self.right], [(self.left + self.right, v)])


def _permuted(l: Locus, n: int, i: int, k: int) -> Locus:
    qs = l.qubits()
    return Locus.from_qubits(qs[:n] + qs[n + i:n + i + k] + qs[n:n + i] + qs[n + i + k:])


@dataclass(frozen=True)
class Permute:
    """Swap the position segments [n, n+i) and [n+i, n+i+k) of a locus."""

    locus: Locus
    n: int
    i: int
    k: int

    @property
    def result(self) -> Locus:
        return _permuted(self.locus, self.n, self.i, self.k)

    def apply_env(self, env: TypeEnv) -> TypeEnv:
        _need(env, self.locus)
        return env.replace([self.locus], [(self.result, env[self.locus])])

    def apply_state(self, st: State) -> State:
        _need(st, self.locus)
        return st.replace([self.locus], [(self.result, permute_value(st[self.locus], self.n, self.i, self.k))])


Step = object
Plan = List[Step]


def replay_env(env: TypeEnv, plan: Sequence[Step]) -> TypeEnv:
    for s in plan:
        env = s.apply_env(env)
    return env


def replay_state(st: State, plan: Sequence[Step]) -> State:
    for s in plan:
        st = s.apply_state(st)
    return st


def permute_steps(locus: Locus, front: Sequence[Qubit]) -> Tuple[Plan, Locus]:
    """Permute steps that bring ``front`` (in order) to the head of ``locus``."""
    cur = locus.qubits()
    steps: Plan = []
    p = 0
    while p < len(front):
        idx = cur.index(front[p])
        if idx == p:
            p += 1
            continue
        k = 1
        while idx + k < len(cur) and p + k < len(front) and cur[idx + k] == front[p + k]:
            k += 1
        l = Locus.from_qubits(cur)
        steps.append(Permute(l, p, idx - p, k))
        cur = cur[:p] + cur[idx:idx + k] + cur[p:idx] + cur[idx + k:]
        p += k
    return steps, Locus.from_qubits(cur)


# -- planning --------------------------------------------------------------

def env_rewrite_to_prefix(env: TypeEnv, target: Sequence[Qubit], shortcut: Sequence[str] = ()) -> Tuple[TypeEnv, Plan, Locus]:
    """Plan rewrites so that ``target`` heads one locus.

    Nor/Had loci are split at the boundaries of the target, EN loci are
    taken whole.  When every fragment is of one type listed in
    ``shortcut`` the fragments are joined without casting and the result
    locus is exactly the target; otherwise everything is cast to EN.
    """
    target = list(target)
    tset = set(target)
    if len(tset) != len(target):
        raise TypeMismatch("target qubits repeat")
    order = {q: i for i, q in enumerate(target)}
    touched: List[Locus] = []
    for q in target:
        l = env.locus_of(q)
        if l is None:
            raise UnboundLocus(f"qubit {q[0]}[{q[1]}] is not in the environment")
        if l not in touched:
            touched.append(l)
    plan: Plan = []
    frags: List[Locus] = []
    for l in touched:
        if env[l] == ENT:
            frags.append(l)
            continue
        qs = l.qubits()
        runs: List[List[Qubit]] = []
        for q in qs:
            if runs and (q in tset) == (runs[-1][0] in tset):
                runs[-1].append(q)
            else:
                runs.append([q])
        rest = l
        for run in runs[:-1]:
            step = Split(rest, len(run))
            plan.append(step)
            env = step.apply_env(env)
            if run[0] in tset:
                frags.append(rest.prefix(len(run)))
            rest = rest.drop(len(run))
        if runs[-1][0] in tset:
            frags.append(rest)
    frags.sort(key=lambda f: min(order[q] for q in f.qubits() if q in tset))
    types = {env[f] for f in frags}
    use_shortcut = len(types) == 1 and next(iter(types)) in shortcut and next(iter(types)) in (NOR, HAD)
    if not use_shortcut:
        for f in frags:
            if env[f] != ENT:
                plan.append(Cast(f))
                env = plan[-1].apply_env(env)
    cur = frags[0]
    for f in frags[1:]:
        step = Join(cur, f)
        plan.append(step)
        env = step.apply_env(env)
        cur = cur + f
    steps, cur = permute_steps(cur, target)
    for s in steps:
        env = s.apply_env(env)
    plan.extend(steps)
    return env, plan, cur


def sort_key(decl_order: Mapping[str, int]):
    return lambda q: (decl_order.get(q[0], len(decl_order)), q[1])


def normalize_env(env: TypeEnv, decl_order: Mapping[str, int]) -> Tuple[TypeEnv, Plan]:
    """Sort every locus by declaration order then index."""
    plan: Plan = []
    key = sort_key(decl_order)
    for l in env.loci():
        want = sorted(l.qubits(), key=key)
        steps, _ = permute_steps(l, want)
        plan.extend(steps)
    return replay_env(env, plan), plan


# -- per-operation typing --------------------------------------------------

def shortcut_types(op) -> Tuple[str, ...]:
    if isinstance(op, Gate):
        return (NOR, HAD) if op.name == "H" else ()
    if isinstance(op, ORACLES):
        return (NOR,)
    return ()


def result_type(op, t: str) -> str:
    if t == ENT:
        return ENT
    if isinstance(op, Gate) and op.name == "H":
        return HAD if t == NOR else NOR
    return t


def oracle_args(op, values, sizes) -> List[int]:
    try:
        if isinstance(op, AddConst):
            raw = [eval_aexp(op.k, values, sizes)]
        elif isinstance(op, (MulMod, PowMod)):
            raw = [eval_aexp(op.a, values, sizes), eval_aexp(op.modulus, values, sizes)]
        else:
            return []
    except UnboundVariable as exc:
        raise SymbolicBound(f"oracle parameter is not classical: {exc}") from None
    out = []
    for v in raw:
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        if not isinstance(v, int):
            raise TypeMismatch(f"oracle parameter {v!r} is not an integer")
        out.append(v)
    return out


def reduce_n(op: Reduce, values, sizes) -> int:
    try:
        n = eval_aexp(op.n, values, sizes)
    except UnboundVariable as exc:
        raise SymbolicBound(f"reduce parameter is not classical: {exc}") from None
    if isinstance(n, float) and n.is_integer():
        n = int(n)
    if not isinstance(n, int) or n < 0:
        raise TypeMismatch(f"reduce parameter {n!r} is not a natural number")
    return n


def guard_kind(omega, guard, values):
    """``"C"``, ``"M"`` or the guard locus."""
    k = kind_of(omega, guard, values)
    if isinstance(k, Locus):
        return k
    return k.tag


def loop_iteration(s: For, omega, values):
    """The statements one loop iteration runs: the body, or a synthesized conditional."""
    if s.guard is None:
        return None
    g = guard_kind(omega, s.guard, values)
    if isinstance(g, Locus):
        return QIf(s.guard, s.body, s.pos)
    return CIf(s.guard, s.body, None, s.pos)


def loop_bounds(s: For, values, sizes) -> Tuple[int, int]:
    try:
        lo = eval_aexp(s.lo, values, sizes)
        hi = eval_aexp(s.hi, values, sizes)
    except UnboundVariable as exc:
        raise SymbolicBound(f"loop bound is not classical: {exc}") from None
    if not (isinstance(lo, int) and isinstance(hi, int)):
        raise SymbolicBound("loop bounds must be integers")
    return lo, hi


# -- the checker -----------------------------------------------------------

@dataclass
class TypeResult:
    env: TypeEnv
    plans: Dict[Tuple, Plan]
    dump: List[Tuple[Tuple, str]] = field(default_factory=list)


def initial_env(program: Program) -> TypeEnv:
    return TypeEnv({Locus.of(d.name, 0, d.size): NOR for d in program.decls})


class Checker:
    def __init__(self, omega: Dict[str, Kind], decl_order: Mapping[str, int], values=None):
        self.omega = dict(omega)
        self.values = dict(values or {})
        self.decl_order = dict(decl_order)
        self.plans: Dict[Tuple, Plan] = {}
        self.dump: List[Tuple[Tuple, str]] = []

    @property
    def sizes(self):
        return sizes_of(self.omega)

    def block(self, env: TypeEnv, mode: str, stmts: Sequence[Stmt], prefix: Tuple) -> TypeEnv:
        for i, s in enumerate(stmts):
            env = self.stmt(env, mode, s, prefix + (i,))
        return env

    def _post(self, env: TypeEnv, mode: str, path: Tuple) -> TypeEnv:
        if mode == "C":
            env, plan = normalize_env(env, self.decl_order)
            if plan:
                self.plans[path + ("post",)] = plan
        self.dump.append((path, str(env)))
        return env

    def stmt(self, env: TypeEnv, mode: str, s: Stmt, path: Tuple) -> TypeEnv:
        if isinstance(s, (Skip, Assert)):
            return self._post(env, mode, path)
        if isinstance(s, Apply):
            return self._post(self.apply(env, s, path), mode, path)
        if isinstance(s, LetC):
            try:
                v = eval_aexp(s.value, self.values, self.sizes)
            except UnboundVariable as exc:
                raise SymbolicBound(f"let value is not classical: {exc}") from None
            self.omega[s.var] = KC
            self.values[s.var] = v
            try:
                env = self.block(env, mode, s.body, path + ("body",))
            finally:
                self.omega.pop(s.var, None)
                self.values.pop(s.var, None)
            return self._post(env, mode, path)
        if isinstance(s, LetM):
            if mode != "C":
                raise MeasureInQuantumConditional(f"measure({s.target}) inside a quantum conditional")
            env = self.measure(env, s, path)
            self.omega[s.var] = KM
            try:
                env = self.block(env, mode, s.body, path + ("body",))
            finally:
                self.omega.pop(s.var, None)
            return self._post(env, mode, path)
        if isinstance(s, QIf):
            return self._post(self.qif(env, s, path), mode, path)
        if isinstance(s, CIf):
            g = guard_kind(self.omega, s.guard, self.values)
            if isinstance(g, Locus):
                raise TypeMismatch("a classical conditional cannot have a quantum guard")
            if g == "C":
                if eval_bexp(s.guard, self.values, self.sizes):
                    env = self.block(env, mode, s.then, path + ("then",))
                elif s.orelse is not None:
                    env = self.block(env, mode, s.orelse, path + ("else",))
                return self._post(env, mode, path)
            env_t = self.block(env.copy(), mode, s.then, path + ("then",))
            env_f = self.block(env.copy(), mode, s.orelse or (), path + ("else",))
            if env_t != env_f:
                raise TypeMismatch(f"branches end in different environments {env_t} and {env_f}")
            return self._post(env_t, mode, path)
        if isinstance(s, For):
            lo, hi = loop_bounds(s, self.values, self.sizes)
            if s.var in self.omega:
                raise TypeMismatch(f"loop variable {s.var!r} is not fresh")
            self.omega[s.var] = KC
            try:
                for j in range(lo, hi):
                    self.values[s.var] = j
                    inner = loop_iteration(s, self.omega, self.values)
                    if inner is None:
                        env = self.block(env, mode, s.body, path + ("for", j))
                    else:
                        env = self.stmt(env, mode, inner, path + ("for", j))
            finally:
                self.omega.pop(s.var, None)
                self.values.pop(s.var, None)
            return self._post(env, mode, path)
        raise TypeMismatch(f"cannot typecheck {type(s).__name__}; procedure calls must be inlined")

    def apply(self, env: TypeEnv, s: Apply, path: Tuple) -> TypeEnv:
        target = resolve_locus(s.locus, self.values, self.sizes)
        op = s.op
        if isinstance(op, Reduce):
            if len(op.bits) != target.width:
                raise WidthMismatch(f"reduce bitstring {op.bits} does not match width {target.width}")
            reduce_n(op, self.values, self.sizes)
        if isinstance(op, Gate) and op.name not in ("H", "QFT", "RQFT", "dis"):
            raise TypeMismatch(f"unknown gate {op.name}")
        if isinstance(op, OqBlock):
            check_oqblock(op, target.width)
        if isinstance(op, (AddConst, MulMod, PowMod)):
            args = oracle_args(op, self.values, self.sizes)
            if isinstance(op, PowMod) and len(target.ranges) < 2:
                raise OracleError("powmod needs an exponent range followed by a target")
            if isinstance(op, (MulMod, PowMod)):
                from .oracles import basis_fn
                basis_fn(op, [r.width for r in target.ranges], args)
        env, plan, l = env_rewrite_to_prefix(env, target.qubits(), shortcut_types(op))
        self.plans[path] = plan
        return env.replace([l], [(l, result_type(op, env[l]))])

    def measure(self, env: TypeEnv, s: LetM, path: Tuple) -> TypeEnv:
        if s.target not in self.sizes:
            raise UnboundVariable(f"unknown quantum variable {s.target!r}")
        target = Locus.of(s.target, 0, self.sizes[s.target])
        env, plan, l = env_rewrite_to_prefix(env, target.qubits())
        self.plans[path] = plan
        rest = l.drop(target.width)
        return env.replace([l], [(rest, ENT)] if rest else [])

    def qif(self, env: TypeEnv, s: QIf, path: Tuple) -> TypeEnv:
        g = guard_kind(self.omega, s.guard, self.values)
        if not isinstance(g, Locus):
            raise TypeMismatch("a quantum conditional needs a quantum guard")
        gq = fv(self.omega, s.guard, self.values).qubits()
        bq = fv(self.omega, s.body, self.values).qubits()
        clash = set(gq) & set(bq)
        if clash:
            names = ", ".join(f"{x}[{i}]" for x, i in sorted(clash))
            raise CloneViolation(f"{names} used in both the guard and the body")
        env, plan, l = env_rewrite_to_prefix(env, gq + bq)
        self.plans[path] = plan
        rest = l.drop(len(gq))
        inner = TypeEnv({rest: ENT})
        inner = self.block(inner, "M", s.body, path + ("body",))
        if len(inner) != 1:
            raise TypeMismatch("a conditional body must keep its locus whole")
        (final,) = inner.loci()
        if final.qubit_set() != rest.qubit_set():
            raise TypeMismatch("a conditional body changed its locus")
        steps, _ = permute_steps(final, rest.qubits())
        if steps:
            self.plans[path + ("exit",)] = steps
        return env


def typecheck(omega: Dict[str, Kind], env: TypeEnv, mode: str, stmts: Sequence[Stmt], values=None,
              decl_order: Optional[Mapping[str, int]] = None) -> TypeResult:
    """Check ``stmts`` from ``env`` in context mode ``mode``."""
    if decl_order is None:
        decl_order = {x: i for i, x in enumerate(x for x, k in omega.items() if k.tag == "Q")}
    ck = Checker(omega, decl_order, values)
    out = ck.block(env, mode, stmts, ())
    return TypeResult(out, ck.plans, ck.dump)


def typecheck_program(program: Program, env: Optional[TypeEnv] = None) -> TypeResult:
    from .kinds import check_binders, inline_procs, kind_env
    if program.procs:
        program = inline_procs(program)
    check_binders(program)
    omega = kind_env(program)
    order = {d.name: i for i, d in enumerate(program.decls)}
    return typecheck(omega, env or initial_env(program), "C", program.body, decl_order=order)
