"""Reference statevector simulation and the interpreter/circuit crosscheck."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from . import gates as G
from .errors import DimensionMismatch, IncompleteCoverage, NonEmptyStack, QafnyError
from .qstate import State, alpha, to_en

DEFAULT_MAX_QUBITS = 14
_S = 1 / math.sqrt(2)


def densify(state: State, layout, d: Optional[int] = None) -> np.ndarray:
    """Dense vector of a C-mode state; qubit ``layout[q]`` is index bit ``layout[q]``."""
    wires = layout.wires if hasattr(layout, "wires") else dict(layout)
    if d is None:
        d = max(wires.values(), default=-1) + 1
    covered = set()
    idx = np.zeros(1, dtype=np.int64)
    amp = np.ones(1, dtype=complex)
    for l, v in state.items():
        qs = l.qubits()
        covered.update(qs)
        e = to_en(v)
        li = np.zeros(len(e.kets), dtype=np.int64)
        la = np.zeros(len(e.kets), dtype=complex)
        for t, k in enumerate(e.kets):
            if k.stack:
                raise NonEmptyStack(f"locus {l} still has frozen bases")
            li[t] = sum(1 << wires[q] for q, b in zip(qs, k.basis) if b == "1")
            la[t] = k.amp
        idx = (idx[:, None] + li[None, :]).ravel()
        amp = (amp[:, None] * la[None, :]).ravel()
    missing = set(wires) - covered
    if missing:
        names = ", ".join(f"{x}[{i}]" for x, i in sorted(missing))
        raise IncompleteCoverage(f"qubits {names} are not in the state")
    vec = np.zeros(1 << d, dtype=complex)
    np.add.at(vec, idx, amp)
    return vec


def zero_state(d: int) -> np.ndarray:
    v = np.zeros(1 << d, dtype=complex)
    v[0] = 1
    return v


def simulate_gates(prog: G.GateProgram, vec: np.ndarray, kernels=None) -> np.ndarray:
    """Apply every gate of a flat program; measurements are deferred (skipped)."""
    kern = kernels or K
    if vec.shape != (1 << prog.d,):
        raise DimensionMismatch(f"vector of length {vec.shape[0]} for {prog.d} qubits")
    v = np.ascontiguousarray(vec, dtype=np.complex128).copy()
    for g in prog.gates:
        if isinstance(g, G.H):
            kern.apply_1q(v, _S, _S, _S, -_S, g.q)
        elif isinstance(g, G.X):
            kern.apply_1q(v, 0j, 1 + 0j, 1 + 0j, 0j, g.q)
        elif isinstance(g, G.RZ):
            kern.apply_phase(v, g.q, alpha((-1 if g.inv else 1) / 2 ** g.k))
        elif isinstance(g, G.CX):
            kern.apply_cx(v, g.a, g.b)
        elif isinstance(g, G.CCX):
            kern.apply_ccx(v, g.a, g.b, g.c)
        elif isinstance(g, G.Measure):
            continue
        else:
            raise DimensionMismatch(f"cannot simulate {type(g).__name__}; flatten first")
    return v


def gate_matrix(prog: G.GateProgram) -> np.ndarray:
    """Dense unitary of a flat program, column by column."""
    n = 1 << prog.d
    cols = [simulate_gates(prog, np.eye(n, dtype=complex)[:, j]) for j in range(n)]
    return np.stack(cols, axis=1)


def phase_distance(v1: np.ndarray, v2: np.ndarray) -> float:
    """min over theta of ||v1 - e^{i theta} v2||, theta from the largest entry."""
    i = int(np.argmax(np.abs(v1)))
    if abs(v2[i]) < 1e-15:
        return float(np.linalg.norm(v1 - v2))
    ph = v1[i] / v2[i]
    ph /= abs(ph)
    return float(np.linalg.norm(v1 - ph * v2))


def split_ancillas(vec: np.ndarray, n: int) -> Tuple[np.ndarray, float]:
    """Declared-qubit block with all ancillas at 0, and the weight outside it."""
    head = vec[:1 << n]
    rest = float(np.linalg.norm(vec[1 << n:]))
    return head, rest


def marginal(vec: np.ndarray, wires: Sequence[int]) -> Dict[Tuple[int, ...], float]:
    """Outcome probabilities of the given wires (bit values in wire order)."""
    p = np.abs(vec) ** 2
    idx = np.arange(vec.shape[0])
    out: Dict[Tuple[int, ...], float] = {}
    keys = np.zeros(vec.shape[0], dtype=np.int64)
    for t, w in enumerate(wires):
        keys |= ((idx >> w) & 1) << t
    sums = np.bincount(keys, weights=p, minlength=1 << len(wires))
    for k, s in enumerate(sums):
        if s > 1e-15:
            out[tuple((k >> t) & 1 for t in range(len(wires)))] = float(s)
    return out


# -- crosscheck ------------------------------------------------------------

@dataclass
class Row:
    program: str
    qubits: int
    distance: float
    passed: bool
    note: str = ""

    def tsv(self) -> str:
        return f"{self.program}\t{self.qubits}\t{self.distance:.3e}\t{'pass' if self.passed else 'fail'}"


def _has_measure(prog: G.GateProgram) -> bool:
    return any(isinstance(g, G.Measure) for g in prog.gates)


def crosscheck(program, inputs: Optional[Iterable[State]] = None, tolerance: float = 1e-7, name: str = "program",
               max_qubits: int = DEFAULT_MAX_QUBITS) -> List[Row]:
    """Compare the interpreter with the compiled circuit, one row per input state."""
    from .circuit import compile_program
    from .interp import enumerate_runs, initial_state, run_program
    from .kinds import inline_procs

    try:
        if program.procs:
            program = inline_procs(program)
        prog, layout = compile_program(program)
    except QafnyError as exc:
        return [Row(name, 0, math.inf, False, f"{type(exc).__name__}: {exc}")]
    if prog.d > max_qubits:
        return [Row(name, prog.d, math.inf, False, f"needs {prog.d} qubits, limit {max_qubits}")]
    rows = []
    for st in list(inputs) if inputs is not None else [initial_state(program)]:
        try:
            vin = np.zeros(1 << prog.d, dtype=complex)
            vin[:1 << layout.n] = densify(st, layout, layout.n)
            vout = simulate_gates(prog, vin)
            head, leak = split_ancillas(vout, layout.n)
            if leak > tolerance:
                rows.append(Row(name, prog.d, leak, False, "ancilla left dirty"))
                continue
            if not _has_measure(prog):
                res = run_program(program, state=st)
                dist = phase_distance(densify(res.state, layout, layout.n), head)
            else:
                dist = _measure_distance(program, st, prog, head, layout, enumerate_runs)
            rows.append(Row(name, prog.d, dist, dist <= tolerance))
        except QafnyError as exc:
            rows.append(Row(name, prog.d, math.inf, False, f"{type(exc).__name__}: {exc}"))
    return rows


def _measure_distance(program, st, prog, head, layout, enumerate_runs) -> float:
    """Largest gap between interpreter and dense outcome probabilities."""
    wires: List[int] = []
    for g in prog.gates:
        if isinstance(g, G.Measure) and g.q not in wires:
            wires.append(g.q)
    dense = marginal(head, wires)
    sym: Dict[Tuple[int, ...], float] = {}
    for b in enumerate_runs(program, state=st):
        bits: Dict[int, int] = {}
        for (var, c, _), in zip(b.result.outcomes):
            for i, ch in enumerate(c):
                bits[layout.wires[(var_target(program, var), i)]] = int(ch)
        key = tuple(bits[w] for w in wires)
        sym[key] = sym.get(key, 0.0) + b.prob
    keys = set(dense) | set(sym)
    return max((abs(dense.get(k, 0.0) - sym.get(k, 0.0)) for k in keys), default=0.0)


def var_target(program, var: str) -> str:
    """The quantum variable measured into ``var``."""
    from .syntax import CIf, For, LetC, LetM, QIf

    def walk(stmts):
        for s in stmts:
            if isinstance(s, LetM):
                if s.var == var:
                    return s.target
                r = walk(s.body)
                if r:
                    return r
            elif isinstance(s, (LetC, For, QIf)):
                r = walk(s.body)
                if r:
                    return r
            elif isinstance(s, CIf):
                r = walk(s.then) or walk(s.orelse or ())
                if r:
                    return r
        return None

    return walk(program.body)


def _crosscheck_file(path: str, tolerance: float, max_qubits: int) -> List[Row]:
    from .surface import parse_program

    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    name = os.path.basename(path)
    try:
        p = parse_program(text)
    except QafnyError as exc:
        return [Row(name, 0, math.inf, False, f"{type(exc).__name__}: {exc}")]
    return crosscheck(p, tolerance=tolerance, name=name, max_qubits=max_qubits)


def crosscheck_corpus(paths: Sequence[str], tolerance: float = 1e-7, max_qubits: int = DEFAULT_MAX_QUBITS,
                      workers: int = 1) -> List[Row]:
    """Rows for every file, in the order given; ``workers`` > 1 uses a process pool."""
    job = partial(_crosscheck_file, tolerance=tolerance, max_qubits=max_qubits)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as ex:
            return [r for rows in ex.map(job, paths) for r in rows]
    return [r for p in paths for r in job(p)]
