"""Frontends: the mini imperative language and the weighted-graph format."""

from pathlib import Path

from ..graph import WeightedGraph
from .formula_parser import parse_formula
from .gas import GAS, instrument_gas
from .imp import Program, parse, to_source
from .lexer import ParseError
from .lower import LoweringResult, lower
from .wg import graph_to_text, parse_graph


def load_graph(path: str | Path) -> WeightedGraph:
    """Parse and lower a ``.imp`` program, or read a ``.wg`` graph."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".wg":
        return parse_graph(text)
    return lower(parse(text)).graph


__all__ = [
    "GAS",
    "LoweringResult",
    "ParseError",
    "Program",
    "graph_to_text",
    "instrument_gas",
    "load_graph",
    "lower",
    "parse",
    "parse_formula",
    "parse_graph",
    "to_source",
]
