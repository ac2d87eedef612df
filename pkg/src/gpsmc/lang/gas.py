"""Gas instrumentation: bound every execution by a nondeterministic budget."""

from __future__ import annotations

from ..formula import Exists, Formula, Term, UsageError, compose, conj, eq, ge, identity, top_conjuncts
from ..graph import WeightedGraph

GAS = "gas"


def decrement_step(vocab: list[str]) -> Formula:
    """``gas >= 0 & gas' = gas - 1`` with every other variable unchanged."""
    others = [v for v in vocab if v != GAS]
    return conj(ge(Term.var(GAS), 0), eq(Term.var(GAS + "'"), Term.var(GAS) - 1), identity(others))


def instrument_gas(g: WeightedGraph) -> WeightedGraph:
    """Add ``gas``; every edge entering a loop header also consumes one unit.

    Headers are the targets of DFS back edges.  Edges leaving the source
    leave ``gas`` unconstrained, so the initial budget is arbitrary.
    """
    if GAS in g.vocab:
        raise UsageError("graph is already gas-instrumented")
    vocab = g.vocab.extend(GAS)
    names = list(vocab)
    headers = set(g.loop_headers())
    dec = decrement_step(names)
    keep = eq(Term.var(GAS + "'"), Term.var(GAS))
    weights = []
    for e in g.edges:
        w = e.weight if e.src == g.source else conj(e.weight, keep)
        if e.dst in headers:
            w = compose(w, dec, names)
        weights.append(w)
    out = g.with_weights(weights, vocab)
    if headers and not g.is_reducible():
        out.warnings.append("irreducible control flow: loop headers chosen by DFS back edges")
    return out


def decrements(g: WeightedGraph) -> list[int]:
    """Ids of edges whose weight forces ``gas' = gas - 1``."""
    step = eq(Term.var(GAS + "'"), Term.var(GAS) - 1)
    out = []
    for e in g.edges:
        body = e.weight.body if isinstance(e.weight, Exists) else e.weight
        if step in top_conjuncts(body):
            out.append(e.id)
    return out
