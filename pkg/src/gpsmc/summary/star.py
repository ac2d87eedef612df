"""Loop summarization from simple recurrences.

For a loop body F we look, variable by variable, for the strongest of

    x' = x            (unchanged)
    x' = x + c        (affine, constant step)
    x' >= x + c, x' <= x + c   (bounded step)

that F entails, and close each over an iteration counter k.  The guards of F
(its pre- and post-state projections) are kept for the k >= 1 case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .. import qe
from ..formula import (
    FALSE,
    Formula,
    Term,
    conj_all,
    disj_all,
    eq,
    exists,
    fresh,
    ge,
    identity,
    le,
    prime,
    to_post,
)
from ..smt.solver import Solver

STEP_BOUND = 64


@dataclass(frozen=True)
class Recurrence:
    var: str
    kind: str  # unchanged | affine | lower | upper
    step: int = 0

    def closed_form(self, k: Term) -> Formula:
        x, xp = Term.var(self.var), Term.var(prime(self.var))
        if self.kind == "unchanged":
            return eq(xp, x)
        if self.kind == "affine":
            return eq(xp, x + k.scale(self.step))
        if self.kind == "lower":
            return ge(xp, x + k.scale(self.step))
        return le(xp, x + k.scale(self.step))

    def as_formula(self) -> Formula:
        """The one-step fact the loop body entails."""
        return self.closed_form(Term.constant(1)) if self.kind != "unchanged" else self.closed_form(Term())


@dataclass
class RecurrenceSet:
    recurrences: list[Recurrence] = field(default_factory=list)
    pre_guard: Formula = FALSE
    post_guard: Formula = FALSE
    exact_guards: bool = False

    def for_var(self, v: str) -> list[Recurrence]:
        return [r for r in self.recurrences if r.var == v]


def extract_recurrences(body: Formula, vocab: Sequence[str], solver: Solver) -> RecurrenceSet | None:
    """Find recurrences of ``body``; returns None when ``body`` is unsatisfiable."""
    vocab = list(vocab)
    probe = solver.is_sat(body, vocab + [prime(v) for v in vocab])
    if probe.is_unsat:
        return None
    recs: list[Recurrence] = []
    for v in vocab:
        x, xp = Term.var(v), Term.var(prime(v))
        if solver.entails(body, eq(xp, x)).is_unsat:
            recs.append(Recurrence(v, "unchanged"))
            continue
        if probe.is_sat:
            c = probe.model[prime(v)] - probe.model[v]
            if solver.entails(body, eq(xp, x + c)).is_unsat:
                recs.append(Recurrence(v, "affine", c))
                continue
        hi = solver.optimize_const(body, xp - x, STEP_BOUND)
        if hi is not None and hi >= -STEP_BOUND:
            recs.append(Recurrence(v, "upper", hi))
        lo = solver.optimize_const(body, x - xp, STEP_BOUND)
        if lo is not None and lo >= -STEP_BOUND:
            recs.append(Recurrence(v, "lower", -lo))
    pre = qe.project_pre(body, vocab)
    post = qe.project_post(body, vocab)
    return RecurrenceSet(recs, pre, post)


def star_summarize(body: Formula, vocab: Sequence[str], solver: Solver) -> Formula:
    """Over-approximate reflexive-transitive closure of ``body``."""
    vocab = list(vocab)
    rs = extract_recurrences(body, vocab, solver)
    if rs is None:
        return identity(vocab)
    k_name = fresh("__k")
    k = Term.var(k_name)
    closed = [r.closed_form(k) for r in rs.recurrences]
    zero = conj_all([eq(k, 0), identity(vocab)])
    more = conj_all([ge(k, 1), rs.pre_guard, to_post(rs.post_guard, vocab)])
    return exists([k_name], conj_all([ge(k, 0)] + closed + [disj_all([zero, more])]))
