"""Path expressions by Gaussian elimination over the regex semiring.

Each vertex v gets an unknown X_v for the language of paths root -> v, with
X_v = [v = root] + sum over edges (w -> v) of X_w . e.  Unknowns are
eliminated in depth-first post-order, so inner loops are solved before the
loops that contain them and every star has a natural loop body.  A self term
is removed with Arden's rule, X = A + X.B  ==>  X = A.B*.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from ..graph import WeightedGraph
from .regex import Regex, RegexFactory


@dataclass
class PathExpressions(Mapping[int, Regex]):
    """Per-vertex path expressions.

    When ``reversed`` is set the words are read backwards: the expression
    for u spells the paths u -> t from t towards u.
    """

    exprs: dict[int, Regex]
    reversed: bool
    factory: RegexFactory = field(repr=False)

    def __getitem__(self, v: int) -> Regex:
        return self.exprs[v]

    def __iter__(self) -> Iterator[int]:
        return iter(self.exprs)

    def __len__(self) -> int:
        return len(self.exprs)


def _postorder(n: int, adj: list[list[int]], root: int) -> list[int]:
    seen = {root}
    order: list[int] = []
    stack = [(root, iter(adj[root]))]
    while stack:
        v, it = stack[-1]
        w = next(it, None)
        if w is None:
            order.append(v)
            stack.pop()
        elif w not in seen:
            seen.add(w)
            stack.append((w, iter(adj[w])))
    return order


def solve(n: int, arcs: list[tuple[int, int, int]], root: int, fac: RegexFactory) -> dict[int, Regex]:
    """Single-source path expressions for ``arcs`` given as (src, dst, edge id)."""
    adj: list[list[int]] = [[] for _ in range(n)]
    incoming: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for a, b, e in arcs:
        adj[a].append(b)
        incoming[b].append((a, e))
    order = _postorder(n, adj, root)
    pos = {v: i for i, v in enumerate(order)}
    const: dict[int, Regex] = {v: fac.zero for v in order}
    coefs: dict[int, dict[int, Regex]] = {v: {} for v in order}
    const[root] = fac.one
    for v in order:
        for w, e in incoming[v]:
            if w in pos:
                coefs[v][w] = fac.plus(coefs[v].get(w, fac.zero), fac.edge(e))
    for k, v in enumerate(order):
        cv = coefs[v]
        loop = cv.pop(v, fac.zero)
        s = fac.star(loop)
        const[v] = fac.dot(const[v], s)
        for w in list(cv):
            cv[w] = fac.dot(cv[w], s)
        for x in order[k + 1:]:
            b = coefs[x].pop(v, None)
            if b is None:
                continue
            const[x] = fac.plus(const[x], fac.dot(const[v], b))
            for w, a in cv.items():
                coefs[x][w] = fac.plus(coefs[x].get(w, fac.zero), fac.dot(a, b))
    out: dict[int, Regex] = {}
    for v in reversed(order):
        r = const[v]
        for w, a in coefs[v].items():
            r = fac.plus(r, fac.dot(out[w], a))
        out[v] = r
    for v in range(n):
        out.setdefault(v, fac.zero)
    return out


def path_expressions_single_source(g: WeightedGraph, u: int, fac: RegexFactory | None = None) -> PathExpressions:
    fac = fac or RegexFactory()
    arcs = [(e.src, e.dst, e.id) for e in g.edges]
    return PathExpressions(solve(len(g.names), arcs, u, fac), False, fac)


def path_expressions_single_target(g: WeightedGraph, t: int | None = None, fac: RegexFactory | None = None) -> PathExpressions:
    """Paths u -> t for every u, solved as single-source on the reversed graph."""
    fac = fac or RegexFactory()
    t = g.sink if t is None else t
    arcs = [(e.dst, e.src, e.id) for e in g.edges]
    return PathExpressions(solve(len(g.names), arcs, t, fac), True, fac)


def cycle_expression(g: WeightedGraph, v: int, fac: RegexFactory | None = None) -> Regex:
    """Paths from v back to v that do not visit v in between (nonempty)."""
    fac = fac or RegexFactory()
    hat = len(g.names)
    arcs = [(e.src, hat if e.dst == v else e.dst, e.id) for e in g.edges]
    return solve(hat + 1, arcs, v, fac)[hat]


def read_word(word: tuple[int, ...], reversed_: bool) -> tuple[int, ...]:
    return tuple(reversed(word)) if reversed_ else word
