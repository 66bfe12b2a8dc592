import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gen import rand_en
from qafny.errors import EmptyStack, NotSeparable, WidthMismatch
from qafny.qstate import (Had, Locus, Nor, Range, State, alpha, densify_value, en, en_to_nor, had_to_en,
                          join_values, merge_kets, nor, nor_to_en, partition_kets, permute_value, pop_frozen,
                          push_frozen, split_value, state_wellformed, to_en, values_equal)

S = 1 / math.sqrt(2)


def kets(v):
    return [(round(k.amp.real, 12) + 1j * round(k.amp.imag, 12), k.basis, k.stack) for k in v.kets]


# -- loci ------------------------------------------------------------------

def test_locus_coalesces_and_drops_empty():
    l = Locus.make([Range("x", 0, 2), Range("x", 2, 2), Range("x", 2, 4), Range("y", 0, 1)])
    assert [str(r) for r in l.ranges] == ["x[0,4)", "y[0,1)"]
    assert l.width == 5
    assert Locus.make([Range("x", 1, 1)]) == Locus()


def test_bad_range():
    with pytest.raises(ValueError):
        Range("x", 3, 2)


# -- forms -----------------------------------------------------------------

def test_nor_to_en():
    assert kets(nor_to_en(nor("01"))) == [(1, "01", ())]
    v = Nor(0.5 + 0j, "1", ("1",))
    assert kets(nor_to_en(v)) == [(0.5, "1", ("1",))]
    assert en_to_nor(nor_to_en(v)) == v


def test_had_to_en_one_qubit():
    v = had_to_en(Had((Fraction(0),)))
    assert [k.basis for k in v.kets] == ["0", "1"]
    assert all(abs(k.amp - S) < 1e-12 for k in v.kets)


def test_had_to_en_two_qubits_matches_dense():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    want = np.kron(h, h) @ np.array([1, 0, 0, 0])
    got = densify_value(had_to_en(Had((Fraction(0), Fraction(0)))))
    assert np.allclose(got, want, atol=1e-12)
    assert len(had_to_en(Had((0, 0))).kets) == 4


def test_had_to_en_half_phase_is_minus():
    v = had_to_en(Had((Fraction(1, 2),)))
    amps = {k.basis: k.amp for k in v.kets}
    assert abs(amps["0"] - S) < 1e-12 and abs(amps["1"] + S) < 1e-12


def test_alpha_turns():
    assert abs(alpha(Fraction(1, 2)) + 1) < 1e-15
    assert abs(alpha(Fraction(1, 4)) - 1j) < 1e-15


# -- permutation ---------------------------------------------------------

def test_permute_abc():
    v = permute_value(nor("abc"), 1, 1, 1)
    assert v.bits == "acb"


def test_permute_k0_identity():
    v = rand_en(random.Random(1), 3)
    assert permute_value(v, 1, 1, 0) == v


def test_permute_width_error():
    with pytest.raises(WidthMismatch):
        permute_value(nor("01"), 1, 1, 1)


def _perm_matrix(width, perm):
    """Dense permutation: output position p holds input position perm[p]."""
    d = 1 << width
    m = np.zeros((d, d))
    for i in range(d):
        j = sum(((i >> perm[p]) & 1) << p for p in range(width))
        m[j, i] = 1
    return m


def test_permute_dense_oracle_20_random():
    rng = random.Random(7)
    for _ in range(20):
        w = rng.randint(2, 4)
        v = rand_en(rng, w)
        n = rng.randrange(w - 1)
        i = rng.randint(1, w - n - 1)
        k = rng.randint(0, w - n - i)
        pos = list(range(w))
        perm = pos[:n] + pos[n + i:n + i + k] + pos[n:n + i] + pos[n + i + k:]
        got = densify_value(permute_value(v, n, i, k))
        assert np.allclose(got, _perm_matrix(w, perm) @ densify_value(v), atol=1e-12)


# -- join and split --------------------------------------------------------

def test_join_nor_nor():
    v = join_values(nor("1", 0.5), nor("0", 1j))
    assert v.bits == "10" and abs(v.amp - 0.5j) < 1e-15


def test_join_had_en_duplicates():
    v = to_en(join_values(Had((Fraction(0),)), en([(1, "1")])))
    assert kets(merge_kets(v)) == [(round(S, 12), "01", ()), (round(S, 12), "11", ())]


def test_join_en_en_kron_10_random():
    rng = random.Random(3)
    for _ in range(10):
        a, b = rand_en(rng, rng.randint(1, 3)), rand_en(rng, rng.randint(1, 2))
        got = densify_value(join_values(a, b))
        # little-endian: the left value holds the low bits
        assert np.allclose(got, np.kron(densify_value(b), densify_value(a)), atol=1e-12)


def test_split_nor():
    a, b = split_value(nor("0110"), 2)
    assert (a.bits, b.bits) == ("01", "10")


def test_split_had():
    a, b = split_value(Had((Fraction(0), Fraction(1, 2), Fraction(1, 4))), 1)
    assert a.phases == (0,) and b.phases == (Fraction(1, 2), Fraction(1, 4))


def test_split_en_constant_suffix():
    v = en([(S, "000"), (S, "110")])
    a, b = split_value(v, 2)
    assert kets(a) == [(round(S, 12), "00", ()), (round(S, 12), "11", ())]
    assert kets(to_en(b)) == [(1, "0", ())]
    assert values_equal(join_values(a, b), v)


def test_split_entangled_refused():
    with pytest.raises(NotSeparable):
        split_value(en([(S, "00"), (S, "11")]), 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_join_split_inverse(seed):
    rng = random.Random(seed)
    a, b = rand_en(rng, rng.randint(1, 3)), nor("".join(rng.choice("01") for _ in range(rng.randint(1, 3))))
    q = merge_kets(to_en(join_values(a, b)))
    l, r = split_value(q, a.width)
    assert values_equal(merge_kets(to_en(join_values(l, r))), q)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_permute_inverse(seed):
    rng = random.Random(seed)
    w = rng.randint(2, 5)
    v = rand_en(rng, w)
    n = rng.randrange(w - 1)
    i = rng.randint(1, w - n - 1)
    k = rng.randint(0, w - n - i)
    back = permute_value(permute_value(v, n, i, k), n, k, i)
    assert values_equal(merge_kets(back), merge_kets(v))


# -- frozen stacks ---------------------------------------------------------

def test_push_frozen_example():
    v = push_frozen(en([(S, "1110")]), 1)
    assert kets(v) == [(round(S, 12), "110", ("1",))]


def test_pop_push_identity_50_random():
    rng = random.Random(5)
    for _ in range(50):
        v = rand_en(rng, rng.randint(2, 4), stack=rng.choice([0, 2]))
        n = rng.randint(1, v.width - 1)
        assert values_equal(pop_frozen(push_frozen(v, n)), v)


def test_stack_errors():
    with pytest.raises(EmptyStack):
        pop_frozen(en([(1, "0")]))
    with pytest.raises(WidthMismatch):
        push_frozen(en([(1, "0")]), 2)


# -- partition and merge ---------------------------------------------------

def test_partition_bell_first_bit():
    v = en([(S, "00"), (S, "11")])
    yes, no = partition_kets(v, 1, lambda c: c == "1")
    assert [k.basis for k in yes.kets] == ["11"]
    assert [k.basis for k in no.kets] == ["00"]


def test_partition_unsatisfied_guard():
    v = en([(1, "00")])
    yes, no = partition_kets(v, 1, lambda c: c == "1")
    assert yes.kets == () and no == v


def test_partition_threshold_covers_all():
    rng = random.Random(9)
    for _ in range(30):
        w = rng.randint(2, 4)
        v = rand_en(rng, w)
        kw = rng.randint(1, w)
        m = rng.randint(0, 1 << kw)
        yes, no = partition_kets(v, kw, lambda c: int(c[::-1], 2) < m)
        assert sorted(yes.kets + no.kets, key=lambda k: k.basis) == sorted(v.kets, key=lambda k: k.basis)
        assert all(int(k.basis[:kw][::-1], 2) < m for k in yes.kets)


def test_merge_like_terms():
    assert kets(merge_kets(en([(0.5, "0"), (0.5, "0")]))) == [(1, "0", ())]
    assert kets(merge_kets(en([(0.5, "0"), (-0.5, "0"), (0.5, "1")]))) == [(0.5, "1", ())]


def test_merge_idempotent_50_random():
    rng = random.Random(11)
    for _ in range(50):
        v = en([(complex(rng.random(), rng.random()), rng.choice(["00", "01", "10"]), (rng.choice("01"),))
                for _ in range(5)])
        once = merge_kets(v)
        assert merge_kets(once) == once
        assert len({(k.basis, k.stack) for k in once.kets}) == len(once.kets)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_densify_linear_over_merge(seed):
    rng = random.Random(seed)
    raw = en([(complex(rng.gauss(0, 1), rng.gauss(0, 1)), rng.choice(["00", "01", "10", "11"])) for _ in range(6)])
    assert np.allclose(densify_value(raw), densify_value(merge_kets(raw)), atol=1e-12)


# -- states ----------------------------------------------------------------

def test_wellformed_checks():
    good = State({Locus.of("x", 0, 2): en([(S, "00"), (S, "11")])})
    assert state_wellformed(good) == []
    stacked = State({Locus.of("x", 0, 1): en([(1, "0", ("1",))])})
    assert state_wellformed(stacked, "C")
    assert state_wellformed(stacked, "M") == []
    short = State({Locus.of("x", 0, 1): en([(0.5, "0")])})
    assert state_wellformed(short, "C") and state_wellformed(short, "M") == []


def test_json_round_trip():
    st_ = State({Locus.of("x", 0, 2): en([(S, "00", ("1",)), (-S * 1j, "11", ("0",))]),
                 Locus.of("y", 0, 1): Had((0.5,)), Locus.of("z", 0, 1): nor("1")})
    back = State.from_json(st_.to_json())
    assert back.to_json() == st_.to_json()
    assert st_.to_json()["loci"][0]["kets"][0] == {"re": round(S, 12), "im": 0.0, "basis": "00", "stack": ["1"]}


def test_width_mismatch_in_state():
    with pytest.raises(WidthMismatch):
        State({Locus.of("x", 0, 2): nor("0")})
