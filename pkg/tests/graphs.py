"""Random small weighted graphs for structural property tests."""

from __future__ import annotations

import random

from gpsmc.formula import TRUE, Vocabulary, conj, eq, frame, le, prime, var
from gpsmc.graph import WeightedGraph


def random_graph(rng: random.Random, n: int = 5, extra: int = 4, vocab=("x",)) -> WeightedGraph:
    """Source 0, sink n-1; every vertex is reachable and reaches the sink."""
    g = WeightedGraph(Vocabulary(vocab))
    for i in range(n):
        g.add_vertex(f"v{i}")
    g.source, g.sink = 0, n - 1
    for i in range(1, n):
        g.add_edge(rng.randrange(0, i), i, _weight(rng, vocab))
    for i in range(1, n - 1):
        g.add_edge(i, rng.randrange(i + 1, n), _weight(rng, vocab))
    for _ in range(extra):
        a, b = rng.randrange(1, n - 1) if n > 2 else 0, rng.randrange(1, n)
        g.add_edge(a, b, _weight(rng, vocab))
    return g


def _weight(rng, vocab):
    x = vocab[0]
    r = rng.random()
    if r < 0.4:
        return conj(eq(var(prime(x)), var(x) + rng.randint(-2, 2)), frame(vocab, [x]))
    if r < 0.7:
        return conj(le(var(x), rng.randint(-3, 3)), frame(vocab, []))
    return frame(vocab, []) if rng.random() < 0.5 else conj(TRUE, frame(vocab, [x]))
