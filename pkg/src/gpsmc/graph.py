"""Weighted graphs: control-flow graphs whose edges carry transition formulas."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .formula import Formula, UsageError, Vocabulary, compose, identity, to_text


@dataclass(frozen=True)
class Edge:
    id: int
    src: int
    dst: int
    weight: Formula
    label: str = ""


@dataclass
class WeightedGraph:
    """A CFG ``<V, E, w, s, t>`` over a vocabulary.

    Vertices are dense integers with display names.  ``source`` must be the
    only vertex without predecessors and ``sink`` the only one without
    successors.
    """

    vocab: Vocabulary
    names: list[str] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    source: int = 0
    sink: int = 0
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._out: list[list[Edge]] = []
        self._in: list[list[Edge]] = []
        self._reindex()

    def _reindex(self) -> None:
        self._out = [[] for _ in self.names]
        self._in = [[] for _ in self.names]
        for e in self.edges:
            self._out[e.src].append(e)
            self._in[e.dst].append(e)

    # -- construction

    def add_vertex(self, name: str | None = None) -> int:
        self.names.append(name if name is not None else f"v{len(self.names)}")
        self._out.append([])
        self._in.append([])
        return len(self.names) - 1

    def add_edge(self, src: int, dst: int, weight: Formula, label: str = "") -> Edge:
        e = Edge(len(self.edges), src, dst, weight, label)
        self.edges.append(e)
        self._out[src].append(e)
        self._in[dst].append(e)
        return e

    def with_weights(self, weights: Sequence[Formula], vocab: Vocabulary | None = None) -> "WeightedGraph":
        edges = [Edge(e.id, e.src, e.dst, w, e.label) for e, w in zip(self.edges, weights)]
        return WeightedGraph(vocab or self.vocab, list(self.names), edges, self.source, self.sink, list(self.warnings))

    # -- queries

    @property
    def vertices(self) -> range:
        return range(len(self.names))

    def successors(self, v: int) -> list[Edge]:
        return self._out[v]

    def predecessors(self, v: int) -> list[Edge]:
        return self._in[v]

    def edge(self, eid: int) -> Edge:
        return self.edges[eid]

    def name(self, v: int) -> str:
        return self.names[v]

    def vertex(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UsageError(f"no vertex named {name!r}") from None

    def validate(self) -> None:
        no_in = [v for v in self.vertices if not self._in[v]]
        no_out = [v for v in self.vertices if not self._out[v]]
        if no_in != [self.source]:
            raise UsageError(f"source must be the unique in-degree-0 vertex, got {[self.names[v] for v in no_in]}")
        if no_out != [self.sink]:
            raise UsageError(f"sink must be the unique out-degree-0 vertex, got {[self.names[v] for v in no_out]}")
        for e in self.edges:
            for v in e.weight.free_vars():
                if v.rstrip("'") not in self.vocab or len(v) - len(v.rstrip("'")) > 1:
                    raise UsageError(f"edge {e.id} mentions {v!r} outside the vocabulary")

    def to_dot(self) -> str:
        lines = ["digraph cfg {", "  node [shape=circle];"]
        for v in self.vertices:
            shape = ', shape=doublecircle' if v == self.sink else ""
            lines.append(f'  n{v} [label="{_esc(self.names[v])}"{shape}];')
        for e in self.edges:
            lines.append(f'  n{e.src} -> n{e.dst} [label="e{e.id}: {_esc(to_text(e.weight))}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    # -- structure

    def dfs_back_edges(self) -> list[Edge]:
        """Edges closing a cycle in a depth-first traversal from the source."""
        color = [0] * len(self.names)
        back: list[Edge] = []
        stack: list[tuple[int, Iterator[Edge]]] = [(self.source, iter(self._out[self.source]))]
        color[self.source] = 1
        while stack:
            v, it = stack[-1]
            e = next(it, None)
            if e is None:
                color[v] = 2
                stack.pop()
                continue
            if color[e.dst] == 1:
                back.append(e)
            elif color[e.dst] == 0:
                color[e.dst] = 1
                stack.append((e.dst, iter(self._out[e.dst])))
        return back

    def loop_headers(self) -> list[int]:
        return sorted({e.dst for e in self.dfs_back_edges()})

    def is_reducible(self) -> bool:
        """Every back edge target dominates its source."""
        dom = self.dominators()
        return all(e.dst in dom[e.src] for e in self.dfs_back_edges())

    def dominators(self) -> list[set[int]]:
        allv = set(self.vertices)
        dom = [set(allv) for _ in self.vertices]
        dom[self.source] = {self.source}
        changed = True
        while changed:
            changed = False
            for v in self.vertices:
                if v == self.source:
                    continue
                preds = [e.src for e in self._in[v]]
                new = set.intersection(*(dom[p] for p in preds)) if preds else set()
                new = new | {v}
                if new != dom[v]:
                    dom[v] = new
                    changed = True
        return dom

    def postorder(self, root: int | None = None, reverse_edges: bool = False) -> list[int]:
        root = self.source if root is None else root
        adj = self._in if reverse_edges else self._out
        seen = {root}
        order: list[int] = []
        stack: list[tuple[int, Iterator[Edge]]] = [(root, iter(adj[root]))]
        while stack:
            v, it = stack[-1]
            e = next(it, None)
            if e is None:
                order.append(v)
                stack.pop()
                continue
            w = e.src if reverse_edges else e.dst
            if w not in seen:
                seen.add(w)
                stack.append((w, iter(adj[w])))
        return order

    def cycles_cover(self, pred) -> bool:
        """Does every directed cycle contain an edge satisfying ``pred``?

        Equivalent to: the subgraph without such edges is acyclic.
        """
        kept = [e for e in self.edges if not pred(e)]
        indeg = [0] * len(self.names)
        out: list[list[int]] = [[] for _ in self.names]
        for e in kept:
            indeg[e.dst] += 1
            out[e.src].append(e.dst)
        q = deque(v for v in self.vertices if indeg[v] == 0)
        seen = 0
        while q:
            v = q.popleft()
            seen += 1
            for w in out[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    q.append(w)
        return seen == len(self.names)


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


@dataclass(frozen=True)
class Path:
    """A sequence of edge ids with cached endpoints."""

    edges: tuple[int, ...]
    src: int
    dst: int

    def __len__(self) -> int:
        return len(self.edges)

    def extend(self, e: Edge) -> "Path":
        if e.src != self.dst:
            raise UsageError(f"edge {e.id} does not start at {self.dst}")
        return Path(self.edges + (e.id,), self.src, e.dst)


def empty_path(g: WeightedGraph, at: int | None = None) -> Path:
    v = g.source if at is None else at
    return Path((), v, v)


def make_path(g: WeightedGraph, edge_ids: Iterable[int], src: int | None = None) -> Path:
    ids = tuple(edge_ids)
    if not ids:
        return empty_path(g, src)
    first = g.edge(ids[0]).src
    if src is not None and first != src:
        raise UsageError("path does not start at the requested vertex")
    cur = first
    for i in ids:
        e = g.edge(i)
        if e.src != cur:
            raise UsageError(f"edges do not chain at edge {i}")
        cur = e.dst
    return Path(ids, first, cur)


def path_weight(g: WeightedGraph, p: Path | Sequence[int]) -> Formula:
    ids = p.edges if isinstance(p, Path) else tuple(p)
    if not isinstance(p, Path):
        make_path(g, ids)
    vocab = list(g.vocab)
    if not ids:
        return identity(vocab)
    acc = g.edge(ids[0]).weight
    for i in ids[1:]:
        acc = compose(acc, g.edge(i).weight, vocab)
    return acc


def is_prefix(p: Path | Sequence[int], q: Path | Sequence[int]) -> bool:
    a = p.edges if isinstance(p, Path) else tuple(p)
    b = q.edges if isinstance(q, Path) else tuple(q)
    return len(a) <= len(b) and b[: len(a)] == a


def suffix_after(g: WeightedGraph, tau: Path, pi: Path) -> Path:
    if not is_prefix(tau, pi):
        raise UsageError("suffix_after requires a prefix")
    return make_path(g, pi.edges[len(tau.edges):], src=tau.dst)


def enumerate_paths(g: WeightedGraph, u: int, v: int, max_len: int) -> list[Path]:
    """All paths from u to v with at most ``max_len`` edges (including the empty one)."""
    out: list[Path] = []
    frontier = [Path((), u, u)]
    for _ in range(max_len + 1):
        nxt = []
        for p in frontier:
            if p.dst == v:
                out.append(p)
            if len(p) < max_len:
                nxt.extend(p.extend(e) for e in g.successors(p.dst))
        frontier = nxt
    return out
