"""Path summaries: path expressions interpreted over transition formulas."""

from .pathexpr import (
    PathExpressions,
    cycle_expression,
    path_expressions_single_source,
    path_expressions_single_target,
)
from .regex import Regex, RegexFactory, language
from .star import Recurrence, RecurrenceSet, extract_recurrences, star_summarize
from .table import Interpreter, SummaryTable, build_summary_table, interpret, trivial_table

__all__ = [
    "Interpreter",
    "PathExpressions",
    "Recurrence",
    "RecurrenceSet",
    "Regex",
    "RegexFactory",
    "SummaryTable",
    "build_summary_table",
    "cycle_expression",
    "extract_recurrences",
    "interpret",
    "language",
    "path_expressions_single_source",
    "path_expressions_single_target",
    "star_summarize",
    "trivial_table",
]
