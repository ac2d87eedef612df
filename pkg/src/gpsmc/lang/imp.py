"""The mini imperative language: AST, parser and pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .lexer import ParseError, Token, TokenStream, tokenize

# -- expressions


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    factor: int
    expr: "Expr"


@dataclass(frozen=True)
class Neg:
    expr: "Expr"


Expr = Union[Num, Var, Add, Sub, Mul, Neg]


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class BAnd:
    left: "BExpr"
    right: "BExpr"


@dataclass(frozen=True)
class BOr:
    left: "BExpr"
    right: "BExpr"


@dataclass(frozen=True)
class BNot:
    expr: "BExpr"


@dataclass(frozen=True)
class BConst:
    value: bool


@dataclass(frozen=True)
class Nondet:
    pass


BExpr = Union[Cmp, BAnd, BOr, BNot, BConst, Nondet]

# -- statements


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


def _span(t: Token) -> Span:
    return Span(t.line, t.col)


NO_SPAN = Span(0, 0)


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Havoc:
    target: str
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class If:
    cond: BExpr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] | None = None
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class While:
    cond: BExpr
    body: tuple["Stmt", ...]
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Assert:
    cond: BExpr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Assume:
    cond: BExpr
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Skip:
    span: Span = field(default=NO_SPAN, compare=False)


Stmt = Union[Assign, Havoc, If, While, Assert, Assume, Skip]


@dataclass(frozen=True)
class Program:
    vars: tuple[str, ...]
    body: tuple[Stmt, ...]


KEYWORDS = {"vars", "havoc", "if", "else", "while", "assert", "assume", "skip", "true", "false"}
_CMP = ("<", "<=", ">", ">=", "==", "!=")

# -- parser


class _Parser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text))
        self.declared: set[str] = set()

    def program(self) -> Program:
        ts = self.ts
        ts.expect("vars")
        names = [self.ident_decl()]
        while ts.accept(","):
            names.append(self.ident_decl())
        ts.expect(";")
        body = []
        while ts.peek().kind != "eof":
            body.append(self.stmt())
        return Program(tuple(names), tuple(body))

    def ident_decl(self) -> str:
        t = self.ts.expect_kind("ident")
        if t.text in KEYWORDS or "'" in t.text:
            raise ParseError(f"invalid variable name {t.text!r}", t.line, t.col)
        if t.text in self.declared:
            raise ParseError(f"variable {t.text!r} declared twice", t.line, t.col)
        if t.text == "gas" or t.text.startswith("__"):
            raise ParseError(f"reserved variable name {t.text!r}", t.line, t.col)
        self.declared.add(t.text)
        return t.text

    def use(self, t: Token) -> str:
        if t.text not in self.declared:
            raise ParseError(f"undeclared variable {t.text!r}", t.line, t.col)
        return t.text

    def block(self) -> tuple[Stmt, ...]:
        self.ts.expect("{")
        out = []
        while not self.ts.at("}"):
            if self.ts.peek().kind == "eof":
                raise self.ts.error("expected '}'")
            out.append(self.stmt())
        self.ts.expect("}")
        return tuple(out)

    def stmt(self) -> Stmt:
        ts = self.ts
        t = ts.peek()
        sp = _span(t)
        if ts.accept("if"):
            ts.expect("(")
            c = self.bexpr()
            ts.expect(")")
            then = self.block()
            orelse = self.block() if ts.accept("else") else None
            return If(c, then, orelse, sp)
        if ts.accept("while"):
            ts.expect("(")
            c = self.bexpr()
            ts.expect(")")
            return While(c, self.block(), sp)
        if ts.accept("assert") or ts.accept("assume"):
            ts.expect("(")
            c = self.bexpr()
            ts.expect(")")
            ts.expect(";")
            return Assert(c, sp) if t.text == "assert" else Assume(c, sp)
        if ts.accept("skip"):
            ts.expect(";")
            return Skip(sp)
        if t.kind == "ident" and t.text not in KEYWORDS:
            ts.next()
            name = self.use(t)
            ts.expect(":=")
            if ts.accept("havoc"):
                ts.expect("(")
                ts.expect(")")
                ts.expect(";")
                return Havoc(name, sp)
            e = self.expr()
            ts.expect(";")
            return Assign(name, e, sp)
        raise ts.error("expected a statement")

    # expressions

    def expr(self) -> Expr:
        e = self.product()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            r = self.product()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def product(self) -> Expr:
        ts = self.ts
        t = ts.peek()
        if t.kind == "int" and ts.at("*", 1):
            ts.next()
            ts.next()
            return Mul(int(t.text), self.product())
        if t.kind == "op" and t.text == "-" and ts.peek(1).kind == "int" and ts.at("*", 2):
            ts.next()
            k = ts.next()
            ts.next()
            return Mul(-int(k.text), self.product())
        e = self.unary()
        while ts.at("*"):
            star = ts.next()
            k = ts.peek()
            if k.kind != "int":
                raise ParseError("multiplication needs a constant operand", star.line, star.col)
            ts.next()
            e = Mul(int(k.text), e)
        return e

    def unary(self) -> Expr:
        ts = self.ts
        t = ts.peek()
        if ts.accept("-"):
            e = self.unary()
            return Num(-e.value) if isinstance(e, Num) else Neg(e)
        if t.kind == "int":
            ts.next()
            return Num(int(t.text))
        if t.kind == "ident" and t.text not in KEYWORDS:
            ts.next()
            return Var(self.use(t))
        if ts.accept("("):
            e = self.expr()
            ts.expect(")")
            return e
        raise ts.error("expected an expression")

    def bexpr(self) -> BExpr:
        e = self.band()
        while self.ts.accept("||"):
            e = BOr(e, self.band())
        return e

    def band(self) -> BExpr:
        e = self.bunary()
        while self.ts.accept("&&"):
            e = BAnd(e, self.bunary())
        return e

    def bunary(self) -> BExpr:
        ts = self.ts
        if ts.accept("!"):
            return BNot(self.bunary())
        if ts.accept("true"):
            return BConst(True)
        if ts.accept("false"):
            return BConst(False)
        if ts.at("*"):
            ts.next()
            return Nondet()
        if ts.at("("):
            save = ts.pos
            try:
                ts.next()
                b = self.bexpr()
                ts.expect(")")
            except ParseError:
                ts.pos = save
            else:
                nxt = ts.peek()
                if not (nxt.kind == "op" and nxt.text in ("+", "-", "*") + _CMP):
                    return b
                ts.pos = save
        left = self.expr()
        op = ts.peek()
        if op.kind != "op" or op.text not in _CMP:
            raise ts.error("expected a comparison")
        ts.next()
        return Cmp(op.text, left, self.expr())


def parse(text: str) -> Program:
    return _Parser(text).program()


# -- printer

_EPREC = {"add": 1, "mul": 2, "atom": 3}


def expr_to_text(e: Expr, ctx: int = 0) -> str:
    if isinstance(e, Num):
        s, p = str(e.value), 3
    elif isinstance(e, Var):
        s, p = e.name, 3
    elif isinstance(e, Add):
        s, p = f"{expr_to_text(e.left, 1)} + {expr_to_text(e.right, 2)}", 1
    elif isinstance(e, Sub):
        s, p = f"{expr_to_text(e.left, 1)} - {expr_to_text(e.right, 2)}", 1
    elif isinstance(e, Mul):
        s, p = f"{e.factor} * {expr_to_text(e.expr, 2)}", 2
    elif isinstance(e, Neg):
        s, p = f"-{expr_to_text(e.expr, 3)}", 3
    else:
        raise TypeError(e)
    return f"({s})" if p < ctx else s


def bexpr_to_text(b: BExpr, ctx: int = 0) -> str:
    if isinstance(b, Cmp):
        s, p = f"{expr_to_text(b.left)} {b.op} {expr_to_text(b.right)}", 3
    elif isinstance(b, BConst):
        s, p = ("true" if b.value else "false"), 3
    elif isinstance(b, Nondet):
        s, p = "*", 3
    elif isinstance(b, BNot):
        s, p = f"!{bexpr_to_text(b.expr, 3)}", 3
    elif isinstance(b, BAnd):
        s, p = f"{bexpr_to_text(b.left, 2)} && {bexpr_to_text(b.right, 3)}", 2
    elif isinstance(b, BOr):
        s, p = f"{bexpr_to_text(b.left, 1)} || {bexpr_to_text(b.right, 2)}", 1
    else:
        raise TypeError(b)
    if isinstance(b, BNot) and isinstance(b.expr, Cmp):
        s = f"!({bexpr_to_text(b.expr)})"
    return f"({s})" if p < ctx else s


def _stmts(body: tuple[Stmt, ...], indent: int) -> list[str]:
    pad = "  " * indent
    out: list[str] = []
    for s in body:
        if isinstance(s, Assign):
            out.append(f"{pad}{s.target} := {expr_to_text(s.expr)};")
        elif isinstance(s, Havoc):
            out.append(f"{pad}{s.target} := havoc();")
        elif isinstance(s, Skip):
            out.append(f"{pad}skip;")
        elif isinstance(s, Assert):
            out.append(f"{pad}assert({bexpr_to_text(s.cond)});")
        elif isinstance(s, Assume):
            out.append(f"{pad}assume({bexpr_to_text(s.cond)});")
        elif isinstance(s, While):
            out.append(f"{pad}while ({bexpr_to_text(s.cond)}) {{")
            out += _stmts(s.body, indent + 1)
            out.append(f"{pad}}}")
        elif isinstance(s, If):
            out.append(f"{pad}if ({bexpr_to_text(s.cond)}) {{")
            out += _stmts(s.then, indent + 1)
            if s.orelse is not None:
                out.append(f"{pad}}} else {{")
                out += _stmts(s.orelse, indent + 1)
            out.append(f"{pad}}}")
        else:
            raise TypeError(s)
    return out


def to_source(p: Program) -> str:
    lines = [f"vars {', '.join(p.vars)};"] + _stmts(p.body, 0)
    return "\n".join(lines) + "\n"
