import glob
import math
import os
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS, corpus_text, golden
from gen import rand_en
from qafny import gates as G
from qafny.circuit import Layout, compile_program, dis_circuit, emit_qasm, qft_circuit, read_qasm
from qafny.dense import densify, gate_matrix, phase_distance, simulate_gates
from qafny.errors import ControlTargetOverlap, ParseError, TypeMismatch, UnsupportedOracleLowering
from qafny.interp import dis_value, initial_state, run_program
from qafny.oqasm import build_rz_adder, oq_lower
from qafny.qstate import densify_value
from qafny.surface import parse_program

HM = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def compiled(name):
    return compile_program(parse_program(corpus_text(name)))


def test_ghz3_gates():
    prog, _ = compiled("ghz_3")
    assert prog.gates == [G.H(0), G.CX(0, 1), G.CX(1, 2)]


def test_skip_is_empty():
    prog, _ = compiled("skip")
    assert prog.gates == []


def test_empty_program_qasm_is_header_only():
    assert emit_qasm(G.GateProgram(2, [])) == 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2]; creg c[2];\n'


def test_ghz2_golden_qasm():
    text = emit_qasm(compiled("ghz_2")[0])
    assert text == golden("ghz2.qasm")
    assert len(text.splitlines()) == 5


def test_qasm_gate_spelling():
    prog = G.GateProgram(3, [G.H(0), G.X(1), G.RZ(2, 2), G.RZ(3, 0, True), G.CX(0, 1), G.CCX(0, 1, 2),
                             G.Measure(2, 2)])
    lines = emit_qasm(prog).splitlines()[3:]
    assert lines == ["h q[0];", "x q[1];", "rz(pi/2^1) q[2];", "rz(-pi/2^2) q[0];", "cx q[0],q[1];",
                     "ccx q[0],q[1],q[2];", "measure q[2] -> c[2];"]


def test_adder_qasm_roundtrip():
    layout = {("a", k): k for k in range(2)} | {("b", k): 2 + k for k in range(2)}
    gates, _ = oq_lower({"a": 2, "b": 2}, build_rz_adder("a", "b", 2), layout)
    prog = G.flatten(G.GateProgram(4, gates))
    back = read_qasm(emit_qasm(prog))
    assert back == prog
    assert np.allclose(gate_matrix(back), gate_matrix(prog))


def test_reader_accepts_split_registers_and_comments():
    text = 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[1];\ncreg c[1];\n// note\nh q[0];\n'
    assert read_qasm(text) == G.GateProgram(1, [G.H(0)])


def test_reader_rejects_unknown_gate():
    with pytest.raises(ParseError):
        read_qasm('OPENQASM 2.0;\nqreg q[1];\nu3(0,0,0) q[0];\n')


def test_emit_requires_flat_program():
    with pytest.raises(TypeMismatch):
        emit_qasm(G.GateProgram(2, [G.CtrlBlock(0, (G.X(1),))]))


# -- controlled blocks -------------------------------------------------------

def ctrl_matrix(u):
    n = u.shape[0]
    out = np.eye(2 * n, dtype=complex)
    # control is wire 0: odd indices are the controlled block
    idx = np.arange(1, 2 * n, 2)
    out[np.ix_(idx, idx)] = u
    return out


def test_ctrl_x_is_cx():
    assert G.ctrl_wrap(0, G.GateProgram(2, [G.X(1)])).gates == [G.CX(0, 1)]


def test_ctrl_h_matches_block_matrix():
    m = gate_matrix(G.ctrl_wrap(0, G.GateProgram(2, [G.H(1)])))
    assert np.allclose(m, ctrl_matrix(HM), atol=1e-9)


def test_ctrl_rz_matches_block_matrix():
    for k in range(1, 4):
        for inv in (False, True):
            m = gate_matrix(G.ctrl_wrap(0, G.GateProgram(2, [G.RZ(k, 1, inv)])))
            ph = np.exp((-1 if inv else 1) * 2j * np.pi / 2 ** k)
            assert np.allclose(m, ctrl_matrix(np.diag([1, ph])), atol=1e-9)


def test_nested_ctrl_is_toffoli():
    inner = G.GateProgram(3, [G.CtrlBlock(1, (G.X(2),))])
    prog = G.ctrl_wrap(0, inner)
    assert prog.gates == [G.CCX(0, 1, 2)]
    tof = np.eye(8)
    tof[[3, 7]] = tof[[7, 3]]
    assert np.allclose(gate_matrix(prog), tof)


def test_ctrl_of_ccx_uses_clean_ancilla():
    prog = G.ctrl_wrap(0, G.GateProgram(4, [G.CCX(1, 2, 3)]))
    assert prog.d == 5
    m = gate_matrix(prog)
    for i in range(16):
        bits = [(i >> b) & 1 for b in range(4)]
        j = i ^ (8 if bits[0] and bits[1] and bits[2] else 0)
        assert abs(m[j, i] - 1) < 1e-12


def test_ctrl_overlap_rejected():
    with pytest.raises(ControlTargetOverlap):
        G.ctrl_wrap(1, G.GateProgram(2, [G.X(1)]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_ctrl_wrap_identity_when_control_off(seed):
    rng = random.Random(seed)
    gates = []
    for _ in range(6):
        kind = rng.choice("HXRC")
        a, b = rng.sample(range(1, 4), 2)
        gates.append({"H": G.H(a), "X": G.X(a), "R": G.RZ(rng.randint(1, 3), a), "C": G.CX(a, b)}[kind])
    body = G.GateProgram(4, gates)
    m = gate_matrix(G.ctrl_wrap(0, body))
    n = m.shape[0]
    off = [i for i in range(n) if not i & 1 and i < 16]
    on = [i for i in range(16) if i & 1]
    assert np.allclose(m[np.ix_(off, off)], np.eye(len(off)), atol=1e-9)
    u = gate_matrix(body)
    # on the control-1 block the wrapped circuit acts as the body on wires 1..3
    sub = m[np.ix_(on, on)]
    idx = [i >> 1 for i in on]
    want = np.zeros((8, 8), dtype=complex)
    for c, i in enumerate(idx):
        for r, j in enumerate(idx):
            want[r, c] = u[j << 1, i << 1]
    assert np.allclose(sub, want, atol=1e-9)


# -- lowered building blocks -------------------------------------------------

def test_qft_circuit_is_little_endian_dft():
    for w in (1, 2, 3):
        n = 1 << w
        dft = np.array([[np.exp(2j * np.pi * j * k / n) for k in range(n)] for j in range(n)]) / math.sqrt(n)
        m = gate_matrix(G.flatten(G.GateProgram(w, qft_circuit(list(range(w))))))
        assert phase_distance(m.ravel(), dft.ravel()) < 1e-9


def test_dis_circuit_matches_apply_dis():
    rng = random.Random(3)
    for w in (1, 2, 3):
        pool = G.AncillaPool(w)
        prog = G.flatten(G.GateProgram(w, dis_circuit(list(range(w)), pool)), pool)
        for _ in range(3):
            v = rand_en(rng, w)
            vin = np.zeros(1 << prog.d, dtype=complex)
            vin[:1 << w] = densify_value(v)
            got = simulate_gates(prog, vin)
            assert np.linalg.norm(got[1 << w:]) < 1e-9
            assert phase_distance(got[:1 << w], densify_value(dis_value(v, w))) < 1e-9


def test_reduce_not_compiled():
    with pytest.raises(UnsupportedOracleLowering):
        compile_program(parse_program("qubit x[2]; x *= H; x *= reduce(1, 2);"))


def test_measured_qubit_reuse_not_compiled():
    with pytest.raises(UnsupportedOracleLowering):
        compile_program(parse_program("qubit x[1]; let u = measure(x) in { x *= H; }"))


def test_layout_is_declaration_order():
    layout = Layout.of(parse_program("qubit b[2]; qubit a[1]; skip;"))
    assert layout.wires == {("b", 0): 0, ("b", 1): 1, ("a", 0): 2}


# -- compilation correctness -------------------------------------------------

def _measure_free():
    out = []
    for path in sorted(glob.glob(os.path.join(CORPUS, "*.qfy"))):
        p = parse_program(open(path, encoding="utf-8").read())
        try:
            prog, layout = compile_program(p)
        except UnsupportedOracleLowering:
            continue
        if prog.d <= 12 and not any(isinstance(g, G.Measure) for g in prog.gates):
            out.append((os.path.basename(path), p, prog, layout))
    return out


def test_corpus_compilation_matches_interpreter():
    cases = _measure_free()
    assert len(cases) >= 40
    for name, p, prog, layout in cases:
        vin = np.zeros(1 << prog.d, dtype=complex)
        vin[:1 << layout.n] = densify(initial_state(p), layout, layout.n)
        out = simulate_gates(prog, vin)
        assert np.linalg.norm(out[1 << layout.n:]) < 1e-9, name
        want = densify(run_program(p).state, layout, layout.n)
        assert phase_distance(want, out[:1 << layout.n]) <= 1e-7, name


def test_order_finding_step_window():
    # a two-iteration window of the controlled-mulmod loop at N = 15
    text = "qubit x[2]; qubit y[4]; y += 1; x *= H;\nfor i in [0,2) && x[i] { y := mulmod(7^(2^i) % 15, 15); }"
    p = parse_program(text)
    prog, layout = compile_program(p)
    vin = np.zeros(1 << prog.d, dtype=complex)
    vin[0] = 1
    out = simulate_gates(prog, vin)
    want = densify(run_program(p).state, layout, layout.n)
    assert phase_distance(want, out[:1 << layout.n]) <= 1e-7
