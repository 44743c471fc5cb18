"""Parser for the Einstein-summation tensor expression mini-language.

Grammar (EBNF, also shipped in the README):

    expr    = term { ("+" | "-") term } ;
    term    = [ "-" ] atom { "*" atom } ;
    atom    = number | scalar | tensor | deriv | "(" expr ")" ;
    number  = digits [ "/" digits ] ;
    scalar  = "m" | "c" | "lam" ;
    tensor  = name "(" index { "," index } ")" ;
    deriv   = "D_" index "(" expr ")" ;
    name    = "h" | "w" | "R" | "g" | "J" ;
    index   = single lowercase letter ;

An index letter repeated within one term is contracted; a letter appearing
once is a free slot, free slots are ordered by first appearance.  ``J(i,j)``
is g(J e_i, e_j) and ``g(i,j)`` the metric; both are parallel.  ``D_a(...)``
is the covariant derivative, it distributes over sums and products and never
differentiates R, g or J (the background is locally symmetric and Kahler).
"""

from __future__ import annotations

import re
from fractions import Fraction

import sympy as sp

from . import expr as ex

_SCALARS = {"m": ex.m, "c": ex.c, "lam": ex.lam}
_TENSORS = {"h": ("h", 2), "w": ("w", 1), "R": ("R", 4), "g": ("g", 2), "J": ("J", 2)}

_TOKEN = re.compile(r"\s*(?:(D_[a-z])|([A-Za-z]+)|(\d+)|([()+\-*/,]))")


class ParseError(ex.ExprError):
    def __init__(self, msg, pos, text):
        super().__init__(f"{msg} at position {pos}: ...{text[max(0, pos - 8):pos + 8]!r}...")
        self.pos = pos


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        mobj = _TOKEN.match(text, pos)
        if not mobj or mobj.end() == pos:
            if text[pos:].strip():
                raise ParseError("unexpected character", pos, text)
            break
        deriv, name, num, punct = mobj.groups()
        tpos = mobj.start(1) if deriv else mobj.start(2) if name \
            else mobj.start(3) if num else mobj.start(4)
        if deriv:
            toks.append(("DERIV", deriv[2], tpos))
        elif name:
            toks.append(("NAME", name, tpos))
        elif num:
            toks.append(("NUM", num, tpos))
        else:
            toks.append((punct, punct, tpos))
        pos = mobj.end()
    toks.append(("EOF", "", len(text)))
    return toks


class _Poly:
    """Intermediate multilinear form: list of (coeff, [Factor...])."""

    def __init__(self, terms):
        self.terms = terms

    @staticmethod
    def scalar(k):
        return _Poly([(sp.sympify(k), [])])

    def __add__(self, other):
        return _Poly(self.terms + other.terms)

    def __mul__(self, other):
        out = []
        for ca, fa in self.terms:
            for cb, fb in other.terms:
                out.append((ca * cb, fa + fb))
        return _Poly(out)

    def scaled(self, k):
        return _Poly([(c0 * k, f0) for c0, f0 in self.terms])

    def deriv(self, letter):
        """Covariant derivative: Leibniz over jettable factors (DR = Dg = DJ = 0)."""
        out = []
        for c0, fs in self.terms:
            for i, f in enumerate(fs):
                if not ex._JETTABLE[f.kind]:
                    continue
                if f.q >= 2 and not f.ordered:
                    raise ex.ExprError("cannot prefix a symmetrized jet here")
                lifted = ex.Factor(f.kind, (letter,) + f.dslots, f.vslots,
                                   (0,) + f.jd, f.jv, ordered=f.q >= 1)
                out.append((c0, fs[:i] + [lifted] + fs[i + 1:]))
        return _Poly(out)


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.first_seen = []

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t[0] != kind:
            raise ParseError(f"expected {kind!r}, found {t[1]!r}", t[2], self.text)
        return t

    def note_index(self, letter):
        if letter not in self.first_seen:
            self.first_seen.append(letter)

    def parse(self):
        p = self.expr()
        t = self.peek()
        if t[0] != "EOF":
            raise ParseError(f"unexpected token {t[1]!r}", t[2], self.text)
        return p

    def expr(self):
        p = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            q = self.term()
            p = p + (q if op == "+" else q.scaled(-1))
        return p

    def term(self):
        sign = 1
        while self.peek()[0] == "-":
            self.next()
            sign = -sign
        p = self.atom()
        while self.peek()[0] == "*":
            self.next()
            p = p * self.atom()
        return p.scaled(sign)

    def atom(self):
        t = self.peek()
        if t[0] == "(":
            self.next()
            p = self.expr()
            self.expect(")")
            return p
        if t[0] == "NUM":
            self.next()
            val = Fraction(int(t[1]))
            if self.peek()[0] == "/":
                self.next()
                d = self.expect("NUM")
                val = val / int(d[1])
            return _Poly.scalar(sp.Rational(val.numerator, val.denominator))
        if t[0] == "DERIV":
            self.next()
            letter = t[1]
            self.note_index(letter)
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return inner.deriv(letter)
        if t[0] == "NAME":
            self.next()
            name = t[1]
            if name in _SCALARS:
                return _Poly.scalar(_SCALARS[name])
            if name not in _TENSORS:
                raise ParseError(f"unknown symbol {name!r}", t[2], self.text)
            kind, arity = _TENSORS[name]
            self.expect("(")
            idxs = [self.index()]
            while self.peek()[0] == ",":
                self.next()
                idxs.append(self.index())
            self.expect(")")
            if len(idxs) != arity:
                raise ParseError(
                    f"{name} takes {arity} indices, got {len(idxs)}", t[2], self.text)
            return _Poly([(sp.Integer(1), [ex.Factor(kind, (), tuple(idxs))])])
        raise ParseError(f"expected an expression, found {t[1]!r}", t[2], self.text)

    def index(self):
        t = self.expect("NAME")
        if len(t[1]) != 1 or not t[1].islower():
            raise ParseError(f"indices are single letters, got {t[1]!r}", t[2], self.text)
        self.note_index(t[1])
        return t[1]


def parse_expr(text):
    """Parse the mini-language into a TensorExpr.

    Free slots are the letters that appear exactly once in every term,
    ordered by first appearance.  Raises ParseError on bad syntax, arity
    errors, indices used three or more times, and free-slot (rank)
    mismatches between summands.
    """
    ps = _Parser(text)
    poly = ps.parse()
    term_frees = []
    for coeff, fs in poly.terms:
        counts = {}
        for f in fs:
            for idx in f.slots():
                counts[idx] = counts.get(idx, 0) + 1
        for idx, n in counts.items():
            if n > 2:
                raise ex.ExprError(f"index {idx!r} appears {n} times in one term")
        term_frees.append(frozenset(i for i, n in counts.items() if n == 1))
    frees_set = term_frees[0] if term_frees else frozenset()
    for fr in term_frees[1:]:
        if fr != frees_set:
            raise ex.ExprError(
                f"rank mismatch across summands: {sorted(frees_set)} vs {sorted(fr)}")
    frees = tuple(x for x in ps.first_seen if x in frees_set)
    return ex.TensorExpr(frees, [ex.Monomial(c0, fs) for c0, fs in poly.terms])
