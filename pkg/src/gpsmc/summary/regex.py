"""Hash-consed regular expressions over edge ids."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator


@dataclass(frozen=True, eq=False)
class Regex:
    """A node of a shared expression DAG; compare by identity."""

    kind: str  # zero | one | edge | plus | dot | star
    uid: int
    edge: int = -1
    left: "Regex | None" = None
    right: "Regex | None" = None

    def __hash__(self) -> int:
        return self.uid

    def __repr__(self) -> str:
        return to_text(self)


class RegexFactory:
    """Builds regex nodes, applying the semiring identities and sharing nodes."""

    def __init__(self) -> None:
        self._table: dict[tuple, Regex] = {}
        self.zero = self._make("zero")
        self.one = self._make("one")

    def _make(self, kind: str, edge: int = -1, left: Regex | None = None, right: Regex | None = None) -> Regex:
        key = (kind, edge, left.uid if left else -1, right.uid if right else -1)
        node = self._table.get(key)
        if node is None:
            node = Regex(kind, len(self._table), edge, left, right)
            self._table[key] = node
        return node

    def edge(self, eid: int) -> Regex:
        return self._make("edge", eid)

    def plus(self, a: Regex, b: Regex) -> Regex:
        if a.kind == "zero":
            return b
        if b.kind == "zero" or a is b:
            return a
        if a.uid > b.uid:
            a, b = b, a
        return self._make("plus", left=a, right=b)

    def dot(self, a: Regex, b: Regex) -> Regex:
        if a.kind == "zero" or b.kind == "zero":
            return self.zero
        if a.kind == "one":
            return b
        if b.kind == "one":
            return a
        return self._make("dot", left=a, right=b)

    def star(self, a: Regex) -> Regex:
        if a.kind in ("zero", "one"):
            return self.one
        if a.kind == "star":
            return a
        return self._make("star", left=a)


def to_text(r: Regex) -> str:
    if r.kind == "zero":
        return "0"
    if r.kind == "one":
        return "1"
    if r.kind == "edge":
        return f"e{r.edge}"
    if r.kind == "plus":
        return f"({to_text(r.left)} + {to_text(r.right)})"
    if r.kind == "dot":
        return f"{to_text(r.left)}.{to_text(r.right)}"
    return f"({to_text(r.left)})*"


def language(r: Regex, max_len: int) -> set[tuple[int, ...]]:
    """All words of length at most ``max_len`` (as edge-id tuples)."""
    memo: dict[int, set[tuple[int, ...]]] = {}

    def go(n: Regex) -> set[tuple[int, ...]]:
        hit = memo.get(n.uid)
        if hit is not None:
            return hit
        if n.kind == "zero":
            out: set[tuple[int, ...]] = set()
        elif n.kind == "one":
            out = {()}
        elif n.kind == "edge":
            out = {(n.edge,)} if max_len >= 1 else set()
        elif n.kind == "plus":
            out = go(n.left) | go(n.right)
        elif n.kind == "dot":
            ls, rs = go(n.left), go(n.right)
            out = {a + b for a in ls for b in rs if len(a) + len(b) <= max_len}
        else:
            body = go(n.left) - {()}
            out = {()}
            layer = {()}
            while layer:
                layer = {a + b for a in layer for b in body if len(a) + len(b) <= max_len} - out
                out |= layer
        memo[n.uid] = out
        return out

    return go(r)


def nodes(r: Regex) -> Iterator[Regex]:
    """Post-order traversal of the distinct nodes below ``r``."""
    seen: set[int] = set()
    stack: list[tuple[Regex, bool]] = [(r, False)]
    while stack:
        n, done = stack.pop()
        if done:
            yield n
            continue
        if n.uid in seen:
            continue
        seen.add(n.uid)
        stack.append((n, True))
        for c in (n.right, n.left):
            if c is not None and c.uid not in seen:
                stack.append((c, False))
