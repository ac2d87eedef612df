"""Abstract reachability trees.

A node stands for the path from the root to it.  Labels are state formulas;
a covering ``(sigma, tau)`` links a leaf to a proper ancestor at the same
vertex and records that the ancestor's label is inductive for the loop in
between.  GPSLite uses the same structure with every label left at true.
"""

from __future__ import annotations

from collections import deque
from typing import Iterator

from ..formula import TRUE, And, Atom, Formula, conj, conj_all, to_text
from ..graph import Path, WeightedGraph

FRONTIER = "frontier"
INTERNAL = "internal"
PRUNED = "pruned"
COVERED = "covered"
UNRESOLVED = "unresolved"


class Node:
    # per-node defaults live on the class so that creating a node stays cheap
    label: Formula = TRUE
    status: str = FRONTIER
    covered_by: "Node | None" = None
    _covering: "set[Node] | None" = None
    retries: int = 0
    queued: bool = False
    children: "list[Node] | tuple[()]" = ()

    def __init__(self, id: int, vertex: int, parent: "Node | None" = None, edge: int | None = None, depth: int = 0):
        self.id = id
        self.vertex = vertex
        self.parent = parent
        self.edge = edge
        self.depth = depth

    @property
    def covering(self) -> set["Node"]:
        """Nodes covered by this one."""
        if self._covering is None:
            self._covering = set()
        return self._covering

    def __hash__(self) -> int:
        return self.id

    def __repr__(self) -> str:
        return f"Node({self.id}@{self.vertex}, depth={self.depth}, {self.status})"

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def ancestors(self) -> Iterator["Node"]:
        """Proper ancestors, nearest first."""
        n = self.parent
        while n is not None:
            yield n
            n = n.parent

    def edges(self) -> tuple[int, ...]:
        out = []
        n: Node | None = self
        while n is not None and n.edge is not None:
            out.append(n.edge)
            n = n.parent
        return tuple(reversed(out))

    def nodes_from_root(self) -> list["Node"]:
        out = []
        n: Node | None = self
        while n is not None:
            out.append(n)
            n = n.parent
        return list(reversed(out))


class Art:
    def __init__(self, g: WeightedGraph):
        self.g = g
        self.root = Node(0, g.source)
        self.nodes: list[Node] = [self.root]
        self.frontier: deque[Node] = deque()
        self.dequeued: list[int] = []  # ids in dequeue order, for auditing FIFO

    # -- frontier

    def enqueue(self, n: Node) -> None:
        if n.queued:
            return
        n.queued = True
        self.frontier.append(n)

    def dequeue(self) -> Node:
        n = self.frontier.popleft()
        n.queued = False
        self.dequeued.append(n.id)
        return n

    # -- structure

    def expand(self, n: Node) -> list[Node]:
        """Add a child for every out-edge (the tree stays full)."""
        if n.children:
            return n.children
        nodes, d = self.nodes, n.depth + 1
        kids = n.children = []
        for e in self.g.successors(n.vertex):
            c = Node(len(nodes), e.dst, n, e.id, d)
            nodes.append(c)
            kids.append(c)
        n.status = INTERNAL
        return kids

    def path(self, n: Node) -> Path:
        return Path(n.edges(), self.g.source, n.vertex)

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes if n.is_leaf]

    def coverings(self) -> list[tuple[Node, Node]]:
        return [(n, n.covered_by) for n in self.nodes if n.covered_by is not None]

    def add_covering(self, sigma: Node, tau: Node) -> None:
        sigma.covered_by = tau
        sigma.status = COVERED
        tau.covering.add(sigma)

    def remove_covering(self, sigma: Node) -> None:
        tau = sigma.covered_by
        if tau is not None:
            tau.covering.discard(sigma)
        sigma.covered_by = None
        sigma.status = FRONTIER

    def strengthen(self, n: Node, phi: Formula) -> bool:
        new = _tighten(conj(n.label, phi))
        if new == n.label:
            return False
        n.label = new
        return True

    def is_complete(self) -> bool:
        return all(n.status in (PRUNED, COVERED) for n in self.leaves())

    # -- language of the tree read as an automaton

    def paths_of(self, target: Node, max_len: int) -> set[tuple[int, ...]]:
        """Edge words of length <= max_len whose run from the root ends at ``target``.

        Tree edges are transitions; a covered node moves silently to the node
        covering it.
        """
        out: set[tuple[int, ...]] = set()

        def close(n: Node) -> list[Node]:
            seen = [n]
            while n.covered_by is not None and n.covered_by not in seen:
                n = n.covered_by
                seen.append(n)
            return seen

        layer: list[tuple[Node, tuple[int, ...]]] = [(self.root, ())]
        for _ in range(max_len + 1):
            nxt = []
            for n, w in layer:
                for m in close(n):
                    if m is target:
                        out.add(w)
                    if len(w) < max_len:
                        nxt.extend((c, w + (c.edge,)) for c in m.children)
            layer = nxt
        return out

    # -- rendering

    def to_dot(self) -> str:
        g = self.g
        lines = ["digraph art {", "  node [shape=box, style=rounded];"]
        for n in self.nodes:
            label = f"{g.names[n.vertex]} #{n.id}\\n{_esc(to_text(n.label))}"
            style = {PRUNED: ", color=gray", COVERED: ", color=blue", FRONTIER: ", color=orange"}.get(n.status, "")
            lines.append(f'  n{n.id} [label="{label}"{style}];')
        for n in self.nodes:
            for c in n.children:
                lines.append(f'  n{n.id} -> n{c.id} [label="e{c.edge}"];')
        for s, t in self.coverings():
            lines.append(f"  n{s.id} -> n{t.id} [style=dashed, constraint=false];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _tighten(f: Formula) -> Formula:
    """Drop ``t + c <= 0`` when ``t + c' <= 0`` with ``c' > c`` is also present."""
    if not isinstance(f, And):
        return f
    best: dict[tuple, int] = {}
    for a in f.args:
        if isinstance(a, Atom) and a.op == "le":
            k = a.term.coeffs
            best[k] = max(best.get(k, a.term.const), a.term.const)
    keep = [a for a in f.args if not (isinstance(a, Atom) and a.op == "le" and a.term.const < best[a.term.coeffs])]
    return conj_all(keep)


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')
