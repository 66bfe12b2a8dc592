import glob
import os
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS, golden
from gen import rand_syntax_program
from qafny.errors import DuplicateDeclaration, ParseError
from qafny.surface import parse_aexp, parse_bexp, parse_predicate, parse_program, print_program, print_stmt
from qafny.syntax import (Apply, BinOp, BitRef, CIf, Cmp, For, Gate, KSum, LetM, Num, PCmp, PMaps, PStar, QIf,
                          RangeExpr, Skip, AddConst, Var)


def test_ghz2_parses_to_two_statements():
    p = parse_program("qubit x[2]; x[0] *= H; if (x[0]) { x[1] *= +1; }")
    assert [d.name for d in p.decls] == ["x"]
    assert len(p.body) == 2
    assert p.body[0] == Apply((RangeExpr("x", Num(0)),), Gate("H"))
    assert isinstance(p.body[1], QIf)
    assert p.body[1].body == (Apply((RangeExpr("x", Num(1)),), AddConst(Num(1))),)


def test_empty_body():
    p = parse_program("qubit x[3];")
    assert p.body == ()
    assert p.decls[0].size == 3


def test_print_skip():
    assert print_stmt(Skip()) == "skip;\n"


def test_ghz3_canonical_print_matches_golden():
    text = "qubit x[3];\nx[0] *= H; for j in [1,3) && x[j-1] { x[j] *= +1; }"
    assert print_program(parse_program(text)) == golden("ghz3.qfy")


def test_for_loop_print_form():
    p = parse_program("qubit x[4]; let n = 4 in { for j in [1,n) { x[j] *= H; } }")
    text = print_program(p)
    assert "for j in [1,n) {" in text
    assert parse_program(text) == p


def test_guarded_loop_and_bitref():
    p = parse_program("qubit x[3]; for j in [1,3) && x[j-1] { x[j] *= +1; }")
    loop = p.body[0]
    assert isinstance(loop, For)
    assert loop.guard == BitRef(RangeExpr("x", BinOp("-", Var("j"), Num(1))))


def test_classical_vs_quantum_if():
    p = parse_program("qubit x[2]; let k = 1 in { if (k == 1) { x[0] *= H; } else { skip; } }")
    assert isinstance(p.body[0].body[0], CIf)
    with pytest.raises(ParseError):
        parse_program("qubit x[2]; if (x[0]) { x[1] *= H; } else { skip; }")


def test_measure_and_comparator_syntax():
    p = parse_program("qubit x[2]; qubit c[1]; if (x[0,2) < 2 @ c[0]) { skip; } let u = measure(x) in { skip; }")
    g = p.body[0].guard
    assert isinstance(g, Cmp) and g.at == RangeExpr("c", Num(0))
    assert p.body[1] == LetM("u", "x", (Skip(),))


def test_predicate_sum():
    p = parse_predicate("x[0,n) |-> sum d in [0,2): 1/sqrt(2) |rep(d,n)>", {"x"})
    assert isinstance(p, PMaps)
    assert isinstance(p.ket, KSum) and p.ket.var == "d"


def test_predicate_comparison_leaf():
    assert parse_predicate("n == 4") == PCmp("==", Var("n"), Num(4))


def test_predicate_star_left_assoc():
    p = parse_predicate("a == 1 * b == 2 * c == 3")
    assert isinstance(p, PStar) and isinstance(p.left, PStar)
    assert p.right == PCmp("==", Var("c"), Num(3))


def test_arith_precedence():
    assert parse_aexp("1 + 2 * 3") == BinOp("+", Num(1), BinOp("*", Num(2), Num(3)))
    assert parse_aexp("2 ^ 3 ^ 2") == BinOp("^", Num(2), BinOp("^", Num(3), Num(2)))
    assert isinstance(parse_bexp("x[0] && !x[1]", {"x"}).left, BitRef)


def test_syntax_error_position():
    with pytest.raises(ParseError) as exc:
        parse_program("qubit x[2];\nx[0] *= ;")
    assert exc.value.line == 2


def test_duplicate_declaration():
    with pytest.raises(DuplicateDeclaration):
        parse_program("qubit x[2]; qubit x[3];")


def test_round_trip_200_fuzzed_programs():
    rng = random.Random(2024)
    for _ in range(200):
        p = rand_syntax_program(rng)
        assert parse_program(print_program(p)) == p


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32))
def test_round_trip_property(seed):
    p = rand_syntax_program(random.Random(seed))
    text = print_program(p)
    assert parse_program(text) == p
    assert print_program(parse_program(text)) == text


@pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(CORPUS, "*.qfy"))), ids=os.path.basename)
def test_corpus_parses_uniquely(path):
    with open(path, encoding="utf-8") as fh:
        p = parse_program(fh.read())
    assert parse_program(print_program(p)) == p
