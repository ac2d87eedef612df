"""SMT solver client and the feasibility primitives built on it."""

from .interpolate import Interpolator, SpInterpolator, units_of
from .primitives import (
    CheckPlusResult,
    CheckResult,
    at_copy,
    chain,
    check,
    check_plus,
    copy_name,
    midpoint_name,
)
from .solver import (
    DEFAULT_COMMAND,
    SOLVER_ENV,
    SatResult,
    Solver,
    SolverError,
    SolverStats,
    Status,
    parse_values,
    to_smt,
)

__all__ = [
    "CheckPlusResult",
    "CheckResult",
    "DEFAULT_COMMAND",
    "Interpolator",
    "SOLVER_ENV",
    "SatResult",
    "Solver",
    "SolverError",
    "SolverStats",
    "SpInterpolator",
    "Status",
    "at_copy",
    "chain",
    "check",
    "check_plus",
    "copy_name",
    "midpoint_name",
    "parse_values",
    "to_smt",
    "units_of",
]
