"""The two solver primitives the checker is built on.

``check_plus(f, g)`` asks whether ``f`` followed by ``g`` is feasible and, if
so, returns the intermediate state.  ``check(fs)`` asks the same question for
a whole sequence; when the sequence is infeasible it returns a sequence of
state formulas that explain why (see :mod:`gpsmc.smt.interpolate`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..formula import Formula, prime, rename
from .solver import SatResult, Solver, Status


@dataclass
class CheckPlusResult:
    status: Status
    midpoint: dict[str, int] = field(default_factory=dict)
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is Status.UNSAT


@dataclass
class CheckResult:
    status: Status
    states: list[dict[str, int]] = field(default_factory=list)
    interpolants: list[Formula] = field(default_factory=list)
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is Status.UNSAT


def midpoint_name(v: str) -> str:
    return f"__m_{v}"


def copy_name(v: str, i: int) -> str:
    return f"{v}@{i}"


def at_copy(f: Formula, vocab: Sequence[str], i: int) -> Formula:
    """Rename X to copy i and X' to copy i+1."""
    ren = {v: copy_name(v, i) for v in vocab}
    ren.update({prime(v): copy_name(v, i + 1) for v in vocab})
    return rename(f, ren)


def chain(fs: Sequence[Formula], vocab: Sequence[str], start: int = 0) -> list[Formula]:
    return [at_copy(f, vocab, start + i) for i, f in enumerate(fs)]


def check_plus(solver: Solver, f: Formula, g: Formula, vocab: Iterable[str]) -> CheckPlusResult:
    vocab = list(vocab)
    mids = {v: midpoint_name(v) for v in vocab}
    f2 = rename(f, {prime(v): mids[v] for v in vocab})
    g2 = rename(g, mids)
    r = solver.query([f2, g2], list(mids.values()))
    if r.is_sat:
        return CheckPlusResult(Status.SAT, {v: r.model[mids[v]] for v in vocab})
    return CheckPlusResult(r.status, reason=r.reason)


def feasible_chain(solver: Solver, fs: Sequence[Formula], vocab: Sequence[str], want_states: bool = True) -> SatResult:
    n = len(fs)
    want = [copy_name(v, i) for i in range(n + 1) for v in vocab] if want_states else []
    return solver.query(chain(fs, vocab), want)


def states_of(model: dict[str, int], vocab: Sequence[str], n: int) -> list[dict[str, int]]:
    return [{v: model[copy_name(v, i)] for v in vocab} for i in range(n + 1)]


def check(
    solver: Solver,
    fs: Sequence[Formula],
    vocab: Iterable[str],
    hints: Sequence[Formula | None] | None = None,
    interpolator: "object | None" = None,
) -> CheckResult:
    """Feasibility of ``fs[0] o ... o fs[-1]`` with states or interpolants.

    ``hints[i]`` (optional) is a transition formula describing how the
    program may loop at the vertex between ``fs[i]`` and ``fs[i+1]``; the
    interpolator prefers facts preserved by it.
    """
    from .interpolate import SpInterpolator

    vocab = list(vocab)
    if not fs:
        raise ValueError("check needs a nonempty sequence")
    r = feasible_chain(solver, fs, vocab)
    if r.is_sat:
        return CheckResult(Status.SAT, states=states_of(r.model, vocab, len(fs)))
    if r.is_unknown:
        return CheckResult(Status.UNKNOWN, reason=r.reason)
    interp = interpolator or SpInterpolator()
    seq = interp.interpolate(solver, fs, vocab, hints)
    if seq is None:
        return CheckResult(Status.UNKNOWN, reason="interpolation failed")
    return CheckResult(Status.UNSAT, interpolants=seq)
