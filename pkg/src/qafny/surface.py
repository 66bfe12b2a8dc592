"""Concrete syntax: parser and pretty-printer for programs and predicates.

Surface conventions: ``++`` concatenates ranges into a locus, ``*=``
applies a unitary, ``@`` names the qubit a guard comparison is stored
into, and ``x[i]`` abbreviates ``x[i,i+1)``.  In predicates ``*`` is the
separating conjunction, so products inside predicates are parenthesized.
"""
from __future__ import annotations

from typing import Callable, List, Optional, Set, Tuple

from . import oqasm
from .errors import DuplicateDeclaration, ParseError
from .lexer import TokenStream
from .syntax import (ARITH_FUNCS, AddConst, AExp, And, Apply, Assert, BExp, BinOp, BitRef, Bits, BoolLit,
                     Call, CallProc, CIf, Cmp, Field, For, Gate, KAdd, KetExpr, KetLit, KSum, KTerm, LetC,
                     LetM, MulMod, Neg, Not, Num, NumBits, OqBlock, Or, PAnd, PCmp, PF, PM, PMaps, PowMod,
                     PStar, PTrue, PU, Pred, ProcDef, Program, QIf, QRef, QubitDecl, RangeExpr, Reduce, Rep,
                     Skip, Stmt, Unitary, Var)

KEYWORDS = {"qubit", "proc", "let", "in", "measure", "if", "else", "for", "assert", "skip",
            "true", "false", "sum", "rep", "num", "mulmod", "powmod", "oqasm", "reduce"}
GATES = {"H", "QFT", "RQFT", "dis"}
CMP_OPS = ("<", "<=", "==", "!=", ">", ">=")


class _Parser:
    def __init__(self, text: str, quantum: Optional[Set[str]] = None):
        self.ts = TokenStream(text)
        self.quantum: Set[str] = set(quantum or ())
        self.procs: Set[str] = set()

    # -- helpers -----------------------------------------------------------

    def _pos(self):
        t = self.ts.peek()
        return (t.line, t.col)

    def _name(self) -> str:
        t = self.ts.peek()
        name = self.ts.ident()
        if name in KEYWORDS:
            self.ts.error(f"{name!r} is a keyword", t)
        return name

    def _try(self, fn: Callable):
        save = self.ts.i
        try:
            return fn()
        except ParseError:
            self.ts.i = save
            return None

    # -- arithmetic --------------------------------------------------------

    def aexp(self, star: bool = True) -> AExp:
        e = self._term(star)
        while self.ts.peek().text in ("+", "-") and self.ts.peek().kind == "sym":
            op = self.ts.next().text
            e = BinOp(op, e, self._term(star))
        return e

    def _term(self, star: bool) -> AExp:
        e = self._unary(star)
        ops = ("*", "/", "%") if star else ("/", "%")
        while self.ts.peek().kind == "sym" and self.ts.peek().text in ops:
            op = self.ts.next().text
            e = BinOp(op, e, self._unary(star))
        return e

    def _unary(self, star: bool) -> AExp:
        if self.ts.accept("-"):
            return Neg(self._unary(star))
        return self._power(star)

    def _power(self, star: bool) -> AExp:
        e = self._atom(star)
        if self.ts.accept("^"):
            return BinOp("^", e, self._unary(star))
        return e

    def _atom(self, star: bool) -> AExp:
        t = self.ts.peek()
        if t.kind == "int":
            self.ts.next()
            return Num(int(t.text))
        if t.kind == "float":
            self.ts.next()
            return Num(float(t.text))
        if self.ts.accept("("):
            e = self.aexp(True)
            self.ts.expect(")")
            return e
        if t.kind == "ident" and t.text not in KEYWORDS:
            if self.ts.at("(", 1):
                if t.text not in ARITH_FUNCS:
                    self.ts.error(f"unknown function {t.text!r}")
                self.ts.next()
                self.ts.next()
                args = [self.aexp(True)]
                while self.ts.accept(","):
                    args.append(self.aexp(True))
                self.ts.expect(")")
                return Call(t.text, tuple(args))
            if self.ts.at(".", 1):
                self.ts.next()
                self.ts.next()
                f = self.ts.ident()
                if f not in ("prob", "outcome"):
                    self.ts.error(f"unknown field {f!r}")
                return Field(t.text, f)
            if self.ts.at("[", 1) or t.text in self.quantum:
                return QRef(self.range_())
            self.ts.next()
            return Var(t.text)
        self.ts.error(f"expected an expression but found {t.text or 'end of input'!r}")

    def range_(self) -> RangeExpr:
        name = self._name()
        if not self.ts.accept("["):
            return RangeExpr(name)
        lo = self.aexp()
        if self.ts.accept("]"):
            return RangeExpr(name, lo)
        self.ts.expect(",")
        hi = self.aexp()
        self.ts.expect(")")
        return RangeExpr(name, lo, hi)

    def locus(self) -> Tuple[RangeExpr, ...]:
        rs = [self.range_()]
        while self.ts.accept("++"):
            rs.append(self.range_())
        return tuple(rs)

    # -- booleans ----------------------------------------------------------

    def bexp(self) -> BExp:
        e = self._band()
        while self.ts.accept("||"):
            e = Or(e, self._band())
        return e

    def _band(self) -> BExp:
        e = self._bnot()
        while self.ts.accept("&&"):
            e = And(e, self._bnot())
        return e

    def _bnot(self) -> BExp:
        if self.ts.accept("!"):
            return Not(self._bnot())
        return self._batom()

    def _batom(self) -> BExp:
        if self.ts.accept("true"):
            return BoolLit(True)
        if self.ts.accept("false"):
            return BoolLit(False)
        cmp = self._try(self._comparison)
        if cmp is not None:
            return cmp
        if self.ts.accept("("):
            e = self.bexp()
            self.ts.expect(")")
            return e
        self.ts.error(f"expected a Boolean expression but found {self.ts.peek().text!r}")

    def _comparison(self) -> BExp:
        left = self.aexp()
        t = self.ts.peek()
        if t.kind == "sym" and t.text in CMP_OPS:
            self.ts.next()
            right = self.aexp()
            at = self.range_() if self.ts.accept("@") else None
            return Cmp(t.text, left, right, at)
        if isinstance(left, QRef):
            return BitRef(left.rng)
        self.ts.error("expected a comparison")

    # -- unitaries ---------------------------------------------------------

    def unitary(self) -> Unitary:
        t = self.ts.peek()
        if t.kind == "ident" and t.text in GATES:
            self.ts.next()
            return Gate(t.text)
        if self.ts.accept("+"):
            return AddConst(self.aexp())
        if self.ts.accept("reduce"):
            self.ts.expect("(")
            bits = self.ts.expect_kind("int", "a bitstring").text
            if set(bits) - {"0", "1"}:
                self.ts.error(f"{bits!r} is not a bitstring")
            self.ts.expect(",")
            n = self.aexp()
            self.ts.expect(")")
            return Reduce(bits, n)
        if t.text in ("mulmod", "powmod"):
            return self._modular()
        if self.ts.accept("oqasm"):
            self.ts.expect("(")
            params = [self._param()]
            while self.ts.accept(","):
                params.append(self._param())
            self.ts.expect(")")
            self.ts.expect("{")
            body = oqasm.parse_instrs(self.ts, "}")
            self.ts.expect("}")
            return OqBlock(tuple(params), body)
        self.ts.error(f"expected a unitary but found {t.text!r}")

    def _modular(self) -> Unitary:
        kind = self.ts.next().text
        self.ts.expect("(")
        a = self.aexp()
        self.ts.expect(",")
        n = self.aexp()
        self.ts.expect(")")
        return MulMod(a, n) if kind == "mulmod" else PowMod(a, n)

    def _param(self) -> Tuple[str, int]:
        name = self.ts.ident()
        self.ts.expect("[")
        n = self.ts.integer()
        self.ts.expect("]")
        return (name, n)

    # -- statements --------------------------------------------------------

    def block(self) -> Tuple[Stmt, ...]:
        self.ts.expect("{")
        out = []
        while not self.ts.at("}"):
            if self.ts.at_eof():
                self.ts.error("unterminated block")
            out.append(self.stmt())
        self.ts.expect("}")
        return tuple(out)

    def stmt(self) -> Stmt:
        pos = self._pos()
        ts = self.ts
        if ts.accept("skip"):
            ts.expect(";")
            return Skip(pos)
        if ts.accept("let"):
            x = self._name()
            ts.expect("=")
            if ts.accept("measure"):
                ts.expect("(")
                y = self._name()
                ts.expect(")")
                ts.expect("in")
                return LetM(x, y, self.block(), pos)
            v = self.aexp()
            ts.expect("in")
            return LetC(x, v, self.block(), pos)
        if ts.accept("if"):
            ts.expect("(")
            g = self.bexp()
            ts.expect(")")
            then = self.block()
            orelse = self.block() if ts.accept("else") else None
            if _mentions_quantum(g):
                if orelse is not None:
                    ts.error("a quantum conditional has no else branch")
                return QIf(g, then, pos)
            return CIf(g, then, orelse, pos)
        if ts.accept("for"):
            x = self._name()
            ts.expect("in")
            ts.expect("[")
            lo = self.aexp()
            ts.expect(",")
            hi = self.aexp()
            ts.expect(")")
            g = self.bexp() if ts.accept("&&") else None
            return For(x, lo, hi, g, self.block(), pos)
        if ts.accept("assert"):
            ts.expect("{")
            p = self.pred()
            ts.expect("}")
            ts.expect(";")
            return Assert(p, pos)
        t = ts.peek()
        if t.kind == "ident" and ts.at("(", 1):
            name = self._name()
            if name not in self.procs:
                ts.error(f"unknown procedure {name!r}", t)
            ts.expect("(")
            args = [self.range_()]
            while ts.accept(","):
                args.append(self.range_())
            ts.expect(")")
            ts.expect(";")
            return CallProc(name, tuple(args), pos)
        loc = self.locus()
        if ts.accept("*="):
            op = self.unitary()
        elif ts.accept("+="):
            op = AddConst(self.aexp())
        elif ts.accept(":="):
            if ts.peek().text not in ("mulmod", "powmod"):
                ts.error("expected mulmod or powmod after ':='")
            op = self._modular()
        else:
            ts.error(f"expected '*=' but found {ts.peek().text!r}")
        ts.expect(";")
        return Apply(loc, op, pos)

    def program(self) -> Program:
        ts = self.ts
        decls: List[QubitDecl] = []
        procs: List[ProcDef] = []
        while ts.at("qubit") or ts.at("proc"):
            t = ts.peek()
            if ts.accept("qubit"):
                name = self._name()
                ts.expect("[")
                n = ts.integer()
                ts.expect("]")
                ts.expect(";")
                if n < 1:
                    ts.error(f"{name} must have at least one qubit", t)
                if name in self.quantum or name in self.procs:
                    raise DuplicateDeclaration(f"duplicate declaration of {name!r}", t.line, t.col)
                self.quantum.add(name)
                decls.append(QubitDecl(name, n))
            else:
                ts.next()
                name = self._name()
                if name in self.quantum or name in self.procs:
                    raise DuplicateDeclaration(f"duplicate declaration of {name!r}", t.line, t.col)
                ts.expect("(")
                params = [self._name()]
                while ts.accept(","):
                    params.append(self._name())
                ts.expect(")")
                outer = self.quantum
                self.quantum = outer | set(params)
                body = self.block()
                self.quantum = outer
                self.procs.add(name)
                procs.append(ProcDef(name, tuple(params), body))
        body = []
        while not ts.at_eof():
            body.append(self.stmt())
        return Program(tuple(decls), tuple(body), tuple(procs))

    # -- predicates --------------------------------------------------------

    def pred(self) -> Pred:
        p = self._pstar()
        while self.ts.accept("&&"):
            p = PAnd(p, self._pstar())
        return p

    def _pstar(self) -> Pred:
        p = self._patom()
        while self.ts.accept("*"):
            p = PStar(p, self._patom())
        return p

    def _patom(self) -> Pred:
        if self.ts.accept("true"):
            return PTrue()
        m = self._try(self._maps)
        if m is not None:
            return m
        c = self._try(self._pcmp)
        if c is not None:
            return c
        if self.ts.accept("("):
            p = self.pred()
            self.ts.expect(")")
            return p
        self.ts.error(f"expected a predicate but found {self.ts.peek().text!r}")

    def _pcmp(self) -> Pred:
        left = self.aexp(star=False)
        t = self.ts.peek()
        if not (t.kind == "sym" and t.text in CMP_OPS):
            self.ts.error("expected a comparison")
        self.ts.next()
        return PCmp(t.text, left, self.aexp(star=False))

    def _maps(self) -> Pred:
        ts = self.ts
        t = ts.peek()
        if t.kind == "ident" and t.text in ("M", "F", "U") and ts.at("(", 1):
            ts.next()
            ts.next()
            if t.text == "M":
                x = self._name()
                ts.expect(",")
                n = self.aexp()
                ts.expect(",")
                loc: object = PM(x, n, self._plocus())
            else:
                g = self.bexp()
                ts.expect(",")
                k1 = self._plocus()
                ts.expect(",")
                k2 = self._plocus()
                loc = (PF if t.text == "F" else PU)(g, k1, k2)
            ts.expect(")")
        else:
            loc = self.locus()
        ts.expect("|->")
        return PMaps(loc, self.ketexpr())

    def _plocus(self) -> Tuple[RangeExpr, ...]:
        if self.ts.at("{") and self.ts.at("}", 1):
            self.ts.next()
            self.ts.next()
            return ()
        return self.locus()

    def ketexpr(self) -> KetExpr:
        e = self._kterm()
        while self.ts.peek().kind == "sym" and self.ts.peek().text in ("+", "-"):
            sign = 1 if self.ts.next().text == "+" else -1
            e = KAdd(e, self._kterm(), sign)
        return e

    def _kterm(self) -> KetExpr:
        ts = self.ts
        if ts.accept("sum"):
            x = self._name()
            ts.expect("in")
            ts.expect("[")
            lo = self.aexp()
            ts.expect(",")
            hi = self.aexp()
            ts.expect(")")
            ts.expect(":")
            return KSum(x, lo, hi, self._kterm())
        if ts.accept("{"):
            e = self.ketexpr()
            ts.expect("}")
            return e
        amp = None if ts.at("|") else self.aexp(star=False)
        kets = [self._ketlit()]
        while ts.at("|"):
            kets.append(self._ketlit())
        return KTerm(amp, tuple(kets))

    def _ketlit(self) -> KetLit:
        ts = self.ts
        ts.expect("|")
        segs = [self._segment()]
        while ts.accept(","):
            segs.append(self._segment())
        ts.expect(">")
        return KetLit(tuple(segs))

    def _segment(self):
        ts = self.ts
        t = ts.peek()
        if t.kind == "int":
            if set(t.text) - {"0", "1"}:
                ts.error(f"{t.text!r} is not a bitstring")
            ts.next()
            return Bits(t.text)
        if ts.accept("rep"):
            ts.expect("(")
            d = self.aexp()
            ts.expect(",")
            n = self.aexp()
            ts.expect(")")
            return Rep(d, n)
        if ts.accept("num"):
            ts.expect("(")
            v = self.aexp()
            ts.expect(",")
            n = self.aexp()
            ts.expect(")")
            return NumBits(v, n)
        ts.error(f"expected a ket segment but found {t.text!r}")


def _mentions_quantum(b: BExp) -> bool:
    if isinstance(b, BitRef):
        return True
    if isinstance(b, Cmp):
        return b.at is not None or _aexp_quantum(b.left) or _aexp_quantum(b.right)
    if isinstance(b, Not):
        return _mentions_quantum(b.arg)
    if isinstance(b, (And, Or)):
        return _mentions_quantum(b.left) or _mentions_quantum(b.right)
    return False


def _aexp_quantum(e: AExp) -> bool:
    if isinstance(e, QRef):
        return True
    if isinstance(e, BinOp):
        return _aexp_quantum(e.left) or _aexp_quantum(e.right)
    if isinstance(e, Neg):
        return _aexp_quantum(e.arg)
    if isinstance(e, Call):
        return any(_aexp_quantum(a) for a in e.args)
    return False


def _finish(p: _Parser, value):
    if not p.ts.at_eof():
        p.ts.error(f"unexpected {p.ts.peek().text!r}")
    return value


def parse_program(text: str) -> Program:
    p = _Parser(text)
    return _finish(p, p.program())


def parse_predicate(text: str, quantum: Optional[Set[str]] = None) -> Pred:
    p = _Parser(text, quantum)
    return _finish(p, p.pred())


def parse_aexp(text: str, quantum: Optional[Set[str]] = None) -> AExp:
    p = _Parser(text, quantum)
    return _finish(p, p.aexp())


def parse_bexp(text: str, quantum: Optional[Set[str]] = None) -> BExp:
    p = _Parser(text, quantum)
    return _finish(p, p.bexp())


def parse_ketexpr(text: str) -> KetExpr:
    p = _Parser(text)
    return _finish(p, p.ketexpr())


# -- printing --------------------------------------------------------------

_APREC = {"+": 1, "-": 1, "*": 2, "/": 2, "%": 2, "^": 4}


def _aprec(e: AExp) -> int:
    if isinstance(e, BinOp):
        return _APREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def print_aexp(e: AExp, pred: bool = False) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Field):
        return f"{e.name}.{e.field}"
    if isinstance(e, QRef):
        return print_range(e.rng)
    if isinstance(e, Call):
        return f"{e.fn}(" + ", ".join(print_aexp(a) for a in e.args) + ")"
    if isinstance(e, Neg):
        s = print_aexp(e.arg, pred)
        return "-" + (f"({s})" if _aprec(e.arg) < 3 else s)
    p = _APREC[e.op]
    ls, rs = print_aexp(e.left, pred), print_aexp(e.right, pred)
    if e.op == "^":
        lpar, rpar = _aprec(e.left) <= p, _aprec(e.right) < 3
    else:
        lpar, rpar = _aprec(e.left) < p, _aprec(e.right) <= p
    if lpar:
        ls = f"({ls})"
    if rpar:
        rs = f"({rs})"
    out = f"{ls} {e.op} {rs}" if p == 1 else f"{ls}{e.op}{rs}" if p == 4 else f"{ls} {e.op} {rs}"
    if pred and e.op == "*":
        out = f"({out})"
    return out


def print_range(r: RangeExpr) -> str:
    if r.lo is None:
        return r.var
    if r.hi is None:
        return f"{r.var}[{print_aexp(r.lo)}]"
    return f"{r.var}[{print_aexp(r.lo)},{print_aexp(r.hi)})"


def print_locus(loc) -> str:
    return " ++ ".join(print_range(r) for r in loc) if loc else "{}"


_BPREC = {Or: 1, And: 2, Not: 3}


def print_bexp(b: BExp) -> str:
    if isinstance(b, BoolLit):
        return "true" if b.value else "false"
    if isinstance(b, BitRef):
        return print_range(b.rng)
    if isinstance(b, Cmp):
        s = f"{print_aexp(b.left)} {b.op} {print_aexp(b.right)}"
        return s + (f" @ {print_range(b.at)}" if b.at is not None else "")
    if isinstance(b, Not):
        inner = print_bexp(b.arg)
        return "!" + (f"({inner})" if isinstance(b.arg, (And, Or, Cmp)) else inner)
    p = _BPREC[type(b)]
    op = "&&" if isinstance(b, And) else "||"

    def side(x, right):
        s = print_bexp(x)
        q = _BPREC.get(type(x), 4)
        return f"({s})" if (q < p or (right and q == p)) else s

    return f"{side(b.left, False)} {op} {side(b.right, True)}"


def print_unitary(u: Unitary) -> str:
    if isinstance(u, Gate):
        return u.name
    if isinstance(u, Reduce):
        return f"reduce({u.bits}, {print_aexp(u.n)})"
    if isinstance(u, AddConst):
        return "+" + print_aexp(u.k)
    if isinstance(u, MulMod):
        return f"mulmod({print_aexp(u.a)}, {print_aexp(u.modulus)})"
    if isinstance(u, PowMod):
        return f"powmod({print_aexp(u.a)}, {print_aexp(u.modulus)})"
    params = ", ".join(f"{x}[{n}]" for x, n in u.params)
    return f"oqasm ({params}) {{ {oqasm.print_oqasm(u.body, inline=True)} }}"


def print_ketexpr(k: KetExpr) -> str:
    if isinstance(k, KTerm):
        kets = "".join("|" + ", ".join(_print_segment(s) for s in lit.segments) + ">" for lit in k.kets)
        return kets if k.amp is None else f"{print_aexp(k.amp, pred=True)} {kets}"
    if isinstance(k, KSum):
        body = print_ketexpr(k.body)
        if isinstance(k.body, KAdd):
            body = "{ " + body + " }"
        return f"sum {k.var} in [{print_aexp(k.lo)},{print_aexp(k.hi)}): {body}"
    right = print_ketexpr(k.right)
    if isinstance(k.right, KAdd):
        right = "{ " + right + " }"
    return f"{print_ketexpr(k.left)} {'+' if k.sign > 0 else '-'} {right}"


def _print_segment(s) -> str:
    if isinstance(s, Bits):
        return s.text
    if isinstance(s, Rep):
        return f"rep({print_aexp(s.digit)}, {print_aexp(s.count)})"
    return f"num({print_aexp(s.value)}, {print_aexp(s.width)})"


def _print_plocus(loc) -> str:
    if isinstance(loc, PM):
        return f"M({loc.var}, {print_aexp(loc.n)}, {print_locus(loc.locus)})"
    if isinstance(loc, (PF, PU)):
        name = "F" if isinstance(loc, PF) else "U"
        return f"{name}({print_bexp(loc.guard)}, {print_locus(loc.locus)}, {print_locus(loc.rest)})"
    return print_locus(loc)


def print_pred(p: Pred) -> str:
    if isinstance(p, PTrue):
        return "true"
    if isinstance(p, PMaps):
        return f"{_print_plocus(p.locus)} |-> {print_ketexpr(p.ket)}"
    if isinstance(p, PCmp):
        return f"{print_aexp(p.left, pred=True)} {p.op} {print_aexp(p.right, pred=True)}"
    if isinstance(p, PStar):
        r = print_pred(p.right)
        if isinstance(p.right, (PStar, PAnd)):
            r = f"({r})"
        l = print_pred(p.left)
        if isinstance(p.left, PAnd):
            l = f"({l})"
        return f"{l} * {r}"
    r = print_pred(p.right)
    if isinstance(p.right, PAnd):
        r = f"({r})"
    return f"{print_pred(p.left)} && {r}"


def _print_block(body, indent: int) -> List[str]:
    out = []
    for s in body:
        out.extend(_print_stmt(s, indent))
    return out


def _print_stmt(s: Stmt, indent: int) -> List[str]:
    pad = "  " * indent

    def blk(head: str, body, tail: str = "}") -> List[str]:
        return [pad + head + " {"] + _print_block(body, indent + 1) + [pad + tail]

    if isinstance(s, Skip):
        return [pad + "skip;"]
    if isinstance(s, LetC):
        return blk(f"let {s.var} = {print_aexp(s.value)} in", s.body)
    if isinstance(s, LetM):
        return blk(f"let {s.var} = measure({s.target}) in", s.body)
    if isinstance(s, Apply):
        return [pad + f"{print_locus(s.locus)} *= {print_unitary(s.op)};"]
    if isinstance(s, QIf):
        return blk(f"if ({print_bexp(s.guard)})", s.body)
    if isinstance(s, CIf):
        lines = blk(f"if ({print_bexp(s.guard)})", s.then)
        if s.orelse is not None:
            lines[-1] = pad + "} else {"
            lines += _print_block(s.orelse, indent + 1) + [pad + "}"]
        return lines
    if isinstance(s, For):
        head = f"for {s.var} in [{print_aexp(s.lo)},{print_aexp(s.hi)})"
        if s.guard is not None:
            head += f" && {print_bexp(s.guard)}"
        return blk(head, s.body)
    if isinstance(s, Assert):
        return [pad + f"assert {{ {print_pred(s.pred)} }};"]
    if isinstance(s, CallProc):
        return [pad + f"{s.name}(" + ", ".join(print_range(r) for r in s.args) + ");"]
    raise TypeError(s)


def print_stmt(s: Stmt) -> str:
    return "\n".join(_print_stmt(s, 0)) + "\n"


def print_program(p: Program) -> str:
    lines = [f"qubit {d.name}[{d.size}];" for d in p.decls]
    for proc in p.procs:
        lines += [f"proc {proc.name}(" + ", ".join(proc.params) + ") {"]
        lines += _print_block(proc.body, 1) + ["}"]
    lines += _print_block(p.body, 0)
    return "\n".join(lines) + "\n" if lines else ""
