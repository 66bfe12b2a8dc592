import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus_text
from gen import rand_en, rand_welltyped_text
from qafny.dense import densify
from qafny.errors import ForcedOutcomeImpossible, TypeMismatch, WidthMismatch
from qafny.interp import (Forced, Seeded, apply_op_value, dis_value, enumerate_runs, guard_split, measure_value,
                          oracle_kets, reduce_value, run_program)
from qafny.oracles import basis_fn
from qafny.qstate import (EN, Had, Ket, Locus, Nor, State, add_values, densify_value, en, int_to_bits,
                          nor, norm_sq, state_wellformed, to_en, values_equal)
from qafny.surface import parse_bexp, parse_program
from qafny.syntax import AddConst, Gate, Num
from qafny.typecheck import typecheck_program

S = 1 / math.sqrt(2)


def run(text, **kw):
    return run_program(parse_program(text), **kw)


def only(state):
    (l, v), = state.items()
    return l, to_en(v)


def amps(v):
    return {k.basis: k.amp for k in to_en(v).kets}


# -- whole programs ----------------------------------------------------------

def test_ghz3():
    l, v = only(run(corpus_text("ghz_3")).state)
    assert l == Locus.of("x", 0, 3)
    assert set(amps(v)) == {"000", "111"}
    assert all(abs(z - S) < 1e-12 for z in amps(v).values())


def test_skip_leaves_state():
    res = run("qubit x[2]; skip;")
    assert list(res.state.items()) == [(Locus.of("x", 0, 2), nor("00"))]


def test_order_finding_superposition():
    _, v = only(run(corpus_text("shor_loop_4_7_15")).state)
    want = {}
    for i in range(16):
        y = 1
        for _ in range(i):
            y = y * 7 % 15
        want[int_to_bits(i, 4) + int_to_bits(y, 4)] = 0.25
    got = amps(v)
    assert set(got) == set(want)
    assert max(abs(got[b] - want[b]) for b in want) <= 1e-9


# -- unitaries ---------------------------------------------------------------

def test_h_on_nor_zero_and_one():
    plus = apply_op_value(Gate("H"), nor("0"), 1, {}, {}, [1])
    minus = apply_op_value(Gate("H"), nor("1"), 1, {}, {}, [1])
    assert np.allclose(densify_value(plus), [S, S])
    assert np.allclose(densify_value(minus), [S, -S])


def test_h_on_had_returns_basis():
    v = apply_op_value(Gate("H"), Had((Fraction(0), Fraction(1, 2))), 2, {}, {}, [2])
    assert isinstance(v, Nor) and v.bits == "01"


def test_h_on_had_other_phase_rejected():
    with pytest.raises(TypeMismatch):
        apply_op_value(Gate("H"), Had((Fraction(1, 4),)), 1, {}, {}, [1])


def test_h_on_en_matches_dense():
    rng = random.Random(4)
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    for _ in range(10):
        v = rand_en(rng, 3)
        got = densify_value(apply_op_value(Gate("H"), v, 2, {}, {}, [2]))
        assert np.allclose(got, np.kron(np.eye(2), np.kron(h, h)) @ densify_value(v), atol=1e-12)


def test_qft_matches_dft():
    rng = random.Random(8)
    for w in (1, 2, 3):
        n = 1 << w
        dft = np.array([[np.exp(2j * np.pi * j * k / n) for k in range(n)] for j in range(n)]) / math.sqrt(n)
        v = rand_en(rng, w)
        got = densify_value(apply_op_value(Gate("QFT"), v, w, {}, {}, [w]))
        assert np.allclose(got, dft @ densify_value(v), atol=1e-12)
        back = apply_op_value(Gate("RQFT"), apply_op_value(Gate("QFT"), v, w, {}, {}, [w]), w, {}, {}, [w])
        assert np.allclose(densify_value(back), densify_value(v), atol=1e-12)


def test_oracle_on_frozen_prefix():
    # guard qubit frozen on the stack; +1 on the leading qubit flips it per ket
    v = en([(S, "01", ("1",)), (S, "11", ("1",))])
    out = oracle_kets(v, 1, basis_fn(AddConst(Num(1)), [1], [1]))
    assert amps(out) == {"11": S, "01": S}
    assert all(k.stack == ("1",) for k in out.kets)


# -- guards ------------------------------------------------------------------

def test_bare_qubit_guard_has_no_side_effect():
    v = en([(S, "00"), (S, "11")])
    yes, no = guard_split(v, Locus.of("x", 0, 1), parse_bexp("x[0]", {"x"}), {}, {"x": 2})
    assert [k.basis for k in yes.kets] == ["11"] and [k.basis for k in no.kets] == ["00"]


def test_comparator_flips_result_bit():
    # x[0,2) < j+1 @ y[j] with j = 1
    gl = Locus.of("x", 0, 2) + Locus.of("y", 1, 2)
    g = parse_bexp("x[0,2) < j+1 @ y[j]", {"x", "y"})
    kets = [Ket(0.5, int_to_bits(i, 2) + "0") for i in range(4)]
    yes, no = guard_split(EN(tuple(kets), 3), gl, g, {"j": 1}, {"x": 2, "y": 2})
    flipped = {k.basis for k in add_values(yes, no).kets if k.basis[2] == "1"}
    assert flipped == {"000", "100"} | set() or flipped == {"001", "101"}
    assert {k.basis[:2] for k in add_values(yes, no).kets if k.basis[2] == "1"} == {"00", "10"}


def test_comparator_exhaustive_dense():
    # U|x, c> = |x, c xor (x < m)> on 3 qubits, against a truth-table matrix
    gl = Locus.of("x", 0, 2) + Locus.of("c", 0, 1)
    rng = random.Random(12)
    for m in range(5):
        g = parse_bexp(f"x[0,2) < {m} @ c[0]", {"x", "c"})
        u = np.zeros((8, 8))
        for i in range(8):
            xv, cv = i & 3, i >> 2
            u[xv | ((cv ^ int(xv < m)) << 2), i] = 1
        for _ in range(3):
            v = rand_en(rng, 3, kets=8)
            yes, no = guard_split(v, gl, g, {}, {"x": 2, "c": 1})
            assert np.allclose(densify_value(add_values(yes, no)), u @ densify_value(v), atol=1e-12)
            # the guard reads the result qubit after the flip
            assert all(k.basis[2] == "1" for k in yes.kets)
            assert all(k.basis[2] == "0" for k in no.kets)


# -- conditionals ------------------------------------------------------------

def test_guard_never_true_is_identity():
    res = run("qubit x[2]; if (x[0]) { x[1] += 1; }")
    dense = densify(res.state, {("x", 0): 0, ("x", 1): 1})
    assert np.allclose(dense, [1, 0, 0, 0])


def test_order_finding_step():
    # after the first j+1 iterations y holds 7^(i mod 2^(j+1)) mod 15
    wires = {("x", i): i for i in range(3)} | {("y", i): 3 + i for i in range(4)}
    for j in range(3):
        text = ("qubit x[3]; qubit y[4]; y += 1; x *= H;\n"
                f"for i in [0,{j + 1}) && x[i] {{ y := mulmod(7^(2^i) % 15, 15); }}")
        vec = densify(run(text).state, wires)
        got = {(b & 7, b >> 3) for b in np.flatnonzero(np.abs(vec) > 1e-9)}
        assert got == {(i, pow(7, i % (1 << (j + 1)), 15)) for i in range(8)}
        assert np.allclose(np.abs(vec[np.abs(vec) > 1e-9]), 1 / math.sqrt(8))


# -- measurement -------------------------------------------------------------

def test_measure_bell_forced_zero():
    rest, mv = measure_value(en([(S, "00"), (S, "11")]), 1, Forced([0]))
    assert amps(rest) == {"0": pytest.approx(1)}
    assert mv.prob == pytest.approx(0.5) and mv.outcome == 0


def test_measure_single_ket_is_certain():
    rest, mv = measure_value(en([(1j, "10")]), 1, Seeded(3))
    assert mv.prob == pytest.approx(1) and mv.outcome == 1


def test_forced_impossible():
    with pytest.raises(ForcedOutcomeImpossible):
        measure_value(en([(S, "00"), (S, "11")]), 2, Forced([1]))


def test_shor_forced_measurement():
    text = corpus_text("shor_loop_4_7_15") + "let u = measure(y) in { skip; }\n"
    res = run(text, policy=Forced([4]))
    (var, bits, prob), = res.outcomes
    assert int(bits[::-1], 2) == 4 and abs(prob - 0.25) <= 1e-9
    l, v = only(res.state)
    assert l == Locus.of("x", 0, 4)
    got = {int(b[::-1], 2): z for b, z in amps(v).items()}
    assert set(got) == {2, 6, 10, 14}
    assert all(abs(z - 0.5) <= 1e-9 for z in got.values())


def test_bell_frequency_10k_seeded_runs():
    p = parse_program(corpus_text("measure_bell"))
    typed = typecheck_program(p)
    zeros = sum(run_program(p, Seeded(s), typed=typed).outcomes[0][1] == "00" for s in range(10000))
    assert 0.48 <= zeros / 10000 <= 0.52


def test_enumerate_runs_probabilities_sum_to_one():
    branches = enumerate_runs(parse_program(corpus_text("shor_measure")))
    assert len(branches) == 4
    assert sum(b.prob for b in branches) == pytest.approx(1)


# -- diffusion and amplification --------------------------------------------

def test_dis_one_qubit_is_x():
    assert amps(dis_value(en([(1, "0")]), 1)) == {"1": 1}


def test_dis_uniform_fixed_point():
    v = en([(0.5, b) for b in ("00", "10", "01", "11")])
    assert values_equal(dis_value(v, 2), v)


def test_dis_two_qubits_dense():
    s = np.full(4, 0.5)
    d = 2 * np.outer(s, s) - np.eye(4)
    rng = random.Random(2)
    for _ in range(10):
        v = rand_en(rng, 2)
        assert np.allclose(densify_value(dis_value(v, 2)), d @ densify_value(v), atol=1e-12)


def _reduce_by_hand(amp, w, c, n):
    """Direct summation of the amplification formula for one suffix group."""
    slots = [int_to_bits(u, w) for u in range(1 << w)]
    weight = {u: (2 ** n) ** -0.25 if u == c else math.sqrt(1 - 2 ** (-n / 2)) for u in slots}
    out = {}
    for j in slots:
        out[j] = sum(weight[u] * amp.get(u, 0) for u in slots) / 2 ** (w - 1) - weight[j] * amp.get(j, 0)
    return {k: z for k, z in out.items() if abs(z) > 1e-12}


def test_reduce_matches_hand_summation():
    amp = {"0": 0.6, "1": 0.8}
    got = amps(reduce_value(en([(0.6, "0"), (0.8, "1")]), 1, "1", 2))
    want = _reduce_by_hand(amp, 1, "1", 2)
    assert set(got) == set(want)
    assert all(abs(got[k] - want[k]) < 1e-12 for k in want)


def test_reduce_zero_value():
    assert reduce_value(EN((), 2), 2, "01", 2).kets == ()


def test_reduce_weight_table():
    # a single hit ket picks up the 1/2^(n/4) weight; a single miss the other one
    n = 2
    hit = amps(reduce_value(en([(1, "1")]), 1, "1", n))
    miss = amps(reduce_value(en([(1, "0")]), 1, "1", n))
    assert hit["0"] == pytest.approx((2 ** n) ** -0.25)
    assert miss["1"] == pytest.approx(math.sqrt(1 - 1 / math.sqrt(2 ** n)))


def test_reduce_width_mismatch():
    with pytest.raises(WidthMismatch):
        reduce_value(en([(1, "00")]), 2, "1", 2)


# -- classical forms ---------------------------------------------------------

def test_if_true_is_body():
    a = run("qubit x[2]; if (true) { x[0] *= H; }").state
    b = run("qubit x[2]; x[0] *= H;").state
    assert a.to_json() == b.to_json()


def test_let_substitutes():
    a = run("qubit x[4]; let j = 3 in { x[j] *= H; }").state
    b = run("qubit x[4]; x[3] *= H;").state
    assert a.to_json() == b.to_json()


def test_measurement_result_used_classically():
    # both branches of a classical if must leave the same types, so the body is type neutral
    text = "qubit x[1]; qubit y[2]; y += 2; let u = measure(y) in { if (u.outcome == 2) { x += 1; } }"
    res = run(text)
    assert densify(res.state, {("x", 0): 0}) == pytest.approx([0, 1])
    (var, bits, prob), = res.outcomes
    assert (var, bits) == ("u", "01") and prob == pytest.approx(1)


def test_trace_has_one_entry_per_statement():
    res = run("qubit x[2]; x[0] *= H; skip;", trace=True)
    assert len(res.trace) >= 2


# -- properties --------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_wellformed_and_norm_preserved(seed):
    rng = random.Random(seed)
    res = run(rand_welltyped_text(rng), policy=Seeded(seed))
    assert state_wellformed(res.state) == []
    for _, v in res.state.items():
        assert abs(norm_sq(v) - 1) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_unitary_linearity(seed):
    rng = random.Random(seed)
    text = rand_welltyped_text(rng, max_qubits=5, depth=2)
    while "measure" in text:
        text = rand_welltyped_text(rng, max_qubits=5, depth=2)
    p = parse_program(text)
    qs = [(d.name, i) for d in p.decls for i in range(d.size)]
    whole = Locus.from_qubits(qs)
    wires = {q: i for i, q in enumerate(qs)}
    v = rand_en(rng, len(qs), kets=2)
    out = densify(run_program(p, state=State({whole: v})).state, wires)
    parts = np.zeros_like(out)
    for k in v.kets:
        one = EN((Ket(1 + 0j, k.basis),), len(qs))
        parts += k.amp * densify(run_program(p, state=State({whole: one})).state, wires)
    assert np.allclose(out, parts, atol=1e-9)
