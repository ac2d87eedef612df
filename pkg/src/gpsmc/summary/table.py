"""Interpretation of path expressions and the per-vertex summary table."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .. import qe
from ..formula import (
    FALSE,
    TRUE,
    Formula,
    compose,
    disj,
    identity,
    simplify,
)
from ..graph import WeightedGraph
from ..smt.solver import Solver
from .pathexpr import PathExpressions, cycle_expression, path_expressions_single_target
from .regex import Regex, RegexFactory, nodes
from .star import star_summarize


class BudgetExceeded(RuntimeError):
    pass


class Interpreter:
    """Folds regexes into transition formulas, memoized per node."""

    def __init__(self, g: WeightedGraph, solver: Solver, deadline: float | None = None):
        self.g = g
        self.vocab = list(g.vocab)
        self.solver = solver
        self.deadline = deadline
        self._memo: dict[tuple[int, bool], Formula] = {}
        self.stars = 0

    def interpret(self, r: Regex, reversed_: bool = False) -> Formula:
        for n in nodes(r):
            key = (n.uid, reversed_)
            if key in self._memo:
                continue
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise BudgetExceeded()
            self._memo[key] = self._node(n, reversed_)
        return self._memo[(r.uid, reversed_)]

    def _node(self, n: Regex, rev: bool) -> Formula:
        get = lambda c: self._memo[(c.uid, rev)]  # noqa: E731
        if n.kind == "zero":
            return FALSE
        if n.kind == "one":
            return identity(self.vocab)
        if n.kind == "edge":
            return self.g.edge(n.edge).weight
        if n.kind == "plus":
            return disj(get(n.left), get(n.right))
        if n.kind == "dot":
            a, b = get(n.left), get(n.right)
            return compose(b, a, self.vocab) if rev else compose(a, b, self.vocab)
        self.stars += 1
        return simplify(star_summarize(get(n.left), self.vocab, self.solver))


def interpret(expr: Regex, g: WeightedGraph, solver: Solver, reversed_: bool = False) -> Formula:
    return Interpreter(g, solver).interpret(expr, reversed_)


@dataclass
class SummaryTable:
    """Sum(G, u, t) for every vertex u, plus derived per-vertex data.

    ``entries[u]`` over-approximates every path from u to the sink.
    ``loop(u)`` over-approximates the paths that leave u and first return
    to it (None when u is on no cycle or summaries are disabled).
    """

    graph: WeightedGraph
    entries: dict[int, Formula]
    kind: str = "cra"
    fallback: set[int] = field(default_factory=set)
    build_time: float = 0.0
    _loops: dict[int, Formula | None] = field(default_factory=dict, repr=False)
    _pre: dict[int, Formula | None] = field(default_factory=dict, repr=False)
    _interp: Interpreter | None = field(default=None, repr=False)
    _fac: RegexFactory | None = field(default=None, repr=False)

    def __getitem__(self, v: int) -> Formula:
        return self.entries[v]

    def loop(self, v: int) -> Formula | None:
        if v in self._loops:
            return self._loops[v]
        out: Formula | None = None
        if self._interp is not None and self._fac is not None:
            r = cycle_expression(self.graph, v, self._fac)
            if r.kind != "zero":
                try:
                    out = self._interp.interpret(r)
                except BudgetExceeded:  # pragma: no cover - no deadline here
                    out = None
        self._loops[v] = out
        return out

    def precondition(self, v: int, cap: int = 5_000) -> Formula | None:
        """Quantifier-free ``exists X'. Sum(v)``, or None if too expensive."""
        if v in self._pre:
            return self._pre[v]
        vocab = list(self.graph.vocab)
        try:
            out: Formula | None = qe.project([f"{x}'" for x in vocab], self.entries[v], qe.Exact, cap)
        except qe.Blowup:
            out = None
        except ValueError:
            out = None
        self._pre[v] = out
        return out


def build_summary_table(g: WeightedGraph, solver: Solver, budget: float | None = None) -> SummaryTable:
    start = time.monotonic()
    deadline = start + budget if budget is not None else None
    fac = RegexFactory()
    exprs: PathExpressions = path_expressions_single_target(g, g.sink, fac)
    interp = Interpreter(g, solver, deadline)
    entries: dict[int, Formula] = {}
    fallback: set[int] = set()
    for u in g.vertices:
        try:
            entries[u] = simplify(interp.interpret(exprs[u], reversed_=True))
        except BudgetExceeded:
            entries[u] = TRUE
            fallback.add(u)
    interp.deadline = None
    table = SummaryTable(g, entries, "cra", fallback, time.monotonic() - start)
    table._interp = interp
    table._fac = fac
    return table


def trivial_table(g: WeightedGraph) -> SummaryTable:
    return SummaryTable(g, {u: TRUE for u in g.vertices}, "trivial")
