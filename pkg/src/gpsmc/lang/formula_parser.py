"""Parser for the textual formula grammar.

    x' <= 2*x + 1  &  (y = 0 | !(2 | y))  &  exists k. k >= 0 & z' = z + k

``d | t`` is divisibility when a positive integer literal is directly
followed by ``|`` at the start of an atom; elsewhere ``|`` is disjunction.
"""

from __future__ import annotations

from ..formula import (
    FALSE,
    TRUE,
    Formula,
    Term,
    conj,
    disj,
    divides,
    eq,
    exists,
    ge,
    gt,
    le,
    lt,
    ne,
    neg,
)
from .lexer import ParseError, TokenStream, tokenize

_RELS = {"<": lt, "<=": le, "=": eq, "==": eq, "!=": ne, ">=": ge, ">": gt}


def parse_formula(text: str) -> Formula:
    ts = TokenStream(tokenize(text))
    f = formula(ts)
    if ts.peek().kind != "eof":
        raise ts.error("unexpected trailing input")
    return f


def formula(ts: TokenStream) -> Formula:
    f = _and(ts)
    while ts.at("|") or ts.at("||"):
        ts.next()
        f = disj(f, _and(ts))
    return f


def _and(ts: TokenStream) -> Formula:
    f = _unary(ts)
    while ts.at("&") or ts.at("&&"):
        ts.next()
        f = conj(f, _unary(ts))
    return f


def _unary(ts: TokenStream) -> Formula:
    if ts.accept("!"):
        return neg(_unary(ts))
    if ts.at("exists"):
        ts.next()
        names = [ts.expect_kind("ident").text]
        while ts.accept(","):
            names.append(ts.expect_kind("ident").text)
        ts.expect(".")
        return exists(names, formula(ts))
    if ts.at("true"):
        ts.next()
        return TRUE
    if ts.at("false"):
        ts.next()
        return FALSE
    if ts.at("("):
        save = ts.pos
        try:
            ts.next()
            f = formula(ts)
            ts.expect(")")
        except ParseError:
            ts.pos = save
        else:
            if not _continues_term(ts):
                return f
            ts.pos = save
    return _atom(ts)


def _continues_term(ts: TokenStream) -> bool:
    t = ts.peek()
    return t.kind == "op" and t.text in ("+", "-", "*", "<", "<=", "=", "==", "!=", ">=", ">")


def _atom(ts: TokenStream) -> Formula:
    t = ts.peek()
    if t.kind == "int" and ts.at("|", 1):
        d = int(ts.next().text)
        ts.next()
        if d < 1:
            raise ParseError("divisor must be positive", t.line, t.col)
        return divides(d, term(ts))
    lhs = term(ts)
    r = ts.peek()
    if r.kind != "op" or r.text not in _RELS:
        raise ts.error("expected a relation")
    ts.next()
    rhs = term(ts)
    return _RELS[r.text](lhs, rhs)


def term(ts: TokenStream) -> Term:
    acc = _product(ts)
    while ts.at("+") or ts.at("-"):
        op = ts.next().text
        rhs = _product(ts)
        acc = acc + rhs if op == "+" else acc - rhs
    return acc


def _product(ts: TokenStream) -> Term:
    acc = _factor(ts)
    while ts.at("*"):
        star = ts.next()
        rhs = _factor(ts)
        if rhs.is_const():
            acc = acc.scale(rhs.const)
        elif acc.is_const():
            acc = rhs.scale(acc.const)
        else:
            raise ParseError("nonlinear multiplication", star.line, star.col)
    return acc


def _factor(ts: TokenStream) -> Term:
    t = ts.peek()
    if ts.accept("-"):
        return -_factor(ts)
    if t.kind == "int":
        ts.next()
        return Term.constant(int(t.text))
    if t.kind == "ident" and t.text not in ("true", "false", "exists"):
        ts.next()
        return Term.var(t.text)
    if ts.accept("("):
        inner = term(ts)
        ts.expect(")")
        return inner
    raise ts.error("expected a term")
