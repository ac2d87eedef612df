"""Lowering of mini-IMP programs to weighted graphs.

Straight-line code is accumulated into a single pending relation and only
materialized as an edge when control flow forces a vertex: at loop headers,
branch points, joins and assertions.  The resulting graphs match the
hand-drawn CFGs of the classic examples (one vertex per loop header).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..formula import (
    FALSE,
    TRUE,
    Formula,
    Term,
    Vocabulary,
    compose_all,
    conj_all,
    disj_all,
    eq,
    frame,
    ge,
    gt,
    identity,
    le,
    lt,
    ne,
    prime,
)
from ..graph import WeightedGraph
from .imp import (
    Add,
    Assert,
    Assign,
    Assume,
    BAnd,
    BConst,
    BExpr,
    BNot,
    BOr,
    Cmp,
    Expr,
    Havoc,
    If,
    Mul,
    Neg,
    Nondet,
    Num,
    Program,
    Skip,
    Span,
    Stmt,
    Sub,
    Var,
    While,
)

_REL = {"<": lt, "<=": le, ">": gt, ">=": ge, "==": eq, "!=": ne}
_NEG_REL = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def expr_term(e: Expr) -> Term:
    if isinstance(e, Num):
        return Term.constant(e.value)
    if isinstance(e, Var):
        return Term.var(e.name)
    if isinstance(e, Add):
        return expr_term(e.left) + expr_term(e.right)
    if isinstance(e, Sub):
        return expr_term(e.left) - expr_term(e.right)
    if isinstance(e, Mul):
        return expr_term(e.expr).scale(e.factor)
    if isinstance(e, Neg):
        return -expr_term(e.expr)
    raise TypeError(e)


def cond_formula(b: BExpr, positive: bool = True) -> Formula:
    """State formula for ``b`` (or its negation).  ``*`` is true either way."""
    if isinstance(b, Cmp):
        op = b.op if positive else _NEG_REL[b.op]
        return _REL[op](expr_term(b.left), expr_term(b.right))
    if isinstance(b, BConst):
        return TRUE if b.value == positive else FALSE
    if isinstance(b, Nondet):
        return TRUE
    if isinstance(b, BNot):
        return cond_formula(b.expr, not positive)
    if isinstance(b, BAnd):
        parts = [cond_formula(b.left, positive), cond_formula(b.right, positive)]
        return conj_all(parts) if positive else disj_all(parts)
    if isinstance(b, BOr):
        parts = [cond_formula(b.left, positive), cond_formula(b.right, positive)]
        return disj_all(parts) if positive else conj_all(parts)
    raise TypeError(b)


@dataclass
class LoweringResult:
    graph: WeightedGraph
    source_map: dict[int, list[Span]] = field(default_factory=dict)


class _Lowerer:
    def __init__(self, prog: Program):
        self.vocab = Vocabulary(prog.vars)
        self.names = list(prog.vars)
        self.g = WeightedGraph(self.vocab)
        self.source_map: dict[int, list[Span]] = {}
        self.s = self.g.add_vertex("A")
        self.t = self.g.add_vertex("ERR")
        self._letters = iter(_vertex_names())
        next(self._letters)

    def new_vertex(self) -> int:
        return self.g.add_vertex(next(self._letters))

    def step_assign(self, target: str, e: Expr) -> Formula:
        return conj_all([eq(Term.var(prime(target)), expr_term(e)), frame(self.names, [target])])

    def guard(self, f: Formula) -> Formula:
        return conj_all([f, identity(self.names)])

    def flush(self, cur: int, pending: list[tuple[Formula, Span | None]], dst: int) -> None:
        w = compose_all([f for f, _ in pending], self.names)
        e = self.g.add_edge(cur, dst, w)
        self.source_map[e.id] = [sp for _, sp in pending if sp is not None]

    def block(self, stmts: tuple[Stmt, ...], cur: int, pending: list) -> tuple[int, list]:
        for s in stmts:
            cur, pending = self.stmt(s, cur, pending)
        return cur, pending

    def stmt(self, s: Stmt, cur: int, pending: list) -> tuple[int, list]:
        if isinstance(s, Assign):
            return cur, pending + [(self.step_assign(s.target, s.expr), s.span)]
        if isinstance(s, Havoc):
            return cur, pending + [(frame(self.names, [s.target]), s.span)]
        if isinstance(s, Skip):
            return cur, pending
        if isinstance(s, Assume):
            return cur, pending + [(self.guard(cond_formula(s.cond)), s.span)]
        if isinstance(s, Assert):
            if pending:
                v = self.new_vertex()
                self.flush(cur, pending, v)
                cur = v
            self.flush(cur, [(self.guard(cond_formula(s.cond, False)), s.span)], self.t)
            return cur, [(self.guard(cond_formula(s.cond)), s.span)]
        if isinstance(s, If):
            if pending:
                v = self.new_vertex()
                self.flush(cur, pending, v)
                cur = v
            c1, p1 = self.block(s.then, cur, [(self.guard(cond_formula(s.cond)), s.span)])
            c2, p2 = self.block(s.orelse or (), cur, [(self.guard(cond_formula(s.cond, False)), s.span)])
            j = self.new_vertex()
            self.flush(c1, p1, j)
            self.flush(c2, p2, j)
            return j, []
        if isinstance(s, While):
            if pending or cur == self.s:
                h = self.new_vertex()
                self.flush(cur, pending, h)
            else:
                h = cur
            cb, pb = self.block(s.body, h, [(self.guard(cond_formula(s.cond)), s.span)])
            self.flush(cb, pb, h)
            return h, [(self.guard(cond_formula(s.cond, False)), s.span)]
        raise TypeError(s)

    def run(self, prog: Program) -> LoweringResult:
        cur, pending = self.block(prog.body, self.s, [])
        # normal exit: a blocked edge into the sink keeps t the only dead end
        self.flush(cur, pending + [(FALSE, None)], self.t)
        g = self.g
        # put the sink last so vertex ids follow program order
        order = [v for v in g.vertices if v != self.t] + [self.t]
        remap = {old: new for new, old in enumerate(order)}
        out = WeightedGraph(self.vocab)
        for old in order:
            out.add_vertex(g.names[old])
        for e in g.edges:
            out.add_edge(remap[e.src], remap[e.dst], e.weight)
        out.source = remap[self.s]
        out.sink = remap[self.t]
        out.names[out.sink] = _sink_name(len(order) - 1)
        out.validate()
        return LoweringResult(out, self.source_map)


def _vertex_names():
    i = 0
    while True:
        yield _sink_name(i)
        i += 1


def _sink_name(i: int) -> str:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if i < 26:
        return letters[i]
    return f"V{i}"


def lower(prog: Program) -> LoweringResult:
    return _Lowerer(prog).run(prog)
