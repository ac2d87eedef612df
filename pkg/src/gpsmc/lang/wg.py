"""Reader and writer for ``.wg`` weighted-graph files.

    graph {
      vars N, r;
      source A;
      sink D;
      edge A -> B [ r' = 0 & N' = N ];
    }

Edge formulas are taken literally: no frame conditions are added.
"""

from __future__ import annotations

from ..formula import Vocabulary, to_text
from ..graph import WeightedGraph
from .formula_parser import formula
from .lexer import ParseError, TokenStream, tokenize


def parse_graph(text: str) -> WeightedGraph:
    ts = TokenStream(tokenize(text))
    ts.expect("graph")
    ts.expect("{")
    names: list[str] = []
    source = sink = None
    edges = []
    ids: dict[str, int] = {}

    def vertex(name: str) -> int:
        if name not in ids:
            ids[name] = len(ids)
        return ids[name]

    while not ts.accept("}"):
        t = ts.peek()
        if ts.accept("vars"):
            names.append(ts.expect_kind("ident").text)
            while ts.accept(","):
                names.append(ts.expect_kind("ident").text)
        elif ts.accept("source"):
            source = vertex(ts.expect_kind("ident").text)
        elif ts.accept("sink"):
            sink = vertex(ts.expect_kind("ident").text)
        elif ts.accept("edge"):
            a = vertex(ts.expect_kind("ident").text)
            ts.expect("->")
            b = vertex(ts.expect_kind("ident").text)
            ts.expect("[")
            f = formula(ts)
            ts.expect("]")
            edges.append((a, b, f, t))
        else:
            raise ts.error("expected vars, source, sink or edge")
        ts.expect(";")
    if ts.peek().kind != "eof":
        raise ts.error("unexpected trailing input")
    if source is None or sink is None:
        raise ParseError("graph needs a source and a sink", t.line, t.col)
    vocab = Vocabulary(names)
    g = WeightedGraph(vocab)
    for name in ids:
        g.add_vertex(name)
    for a, b, f, tok in edges:
        for v in f.free_vars():
            if v.rstrip("'") not in vocab:
                raise ParseError(f"undeclared variable {v!r}", tok.line, tok.col)
        g.add_edge(a, b, f)
    g.source, g.sink = source, sink
    try:
        g.validate()
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None
    return g


def graph_to_text(g: WeightedGraph) -> str:
    lines = ["graph {", f"  vars {', '.join(g.vocab)};", f"  source {g.names[g.source]};", f"  sink {g.names[g.sink]};"]
    for e in g.edges:
        lines.append(f"  edge {g.names[e.src]} -> {g.names[e.dst]} [ {to_text(e.weight)} ];")
    lines.append("}")
    return "\n".join(lines) + "\n"
