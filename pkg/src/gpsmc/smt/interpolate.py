"""Sequence interpolants from strongest postconditions.

For an infeasible sequence F1 .. Fm the plain strongest-postcondition chain
``phi_i = sp(phi_{i-1}, F_i)`` is a valid interpolant sequence, but it is as
specific as possible: after ``x := 2`` it says ``x = 2``, which is useless as
a loop invariant.  :class:`SpInterpolator` therefore weakens each
postcondition before moving on.  It splits ``sp`` into small implied facts
("units") and keeps a subset that still refutes the rest of the sequence.
When the caller supplies a loop formula for the vertex, units preserved by
that loop are preferred, which is what makes coverings possible.

Every unit is implied by the exact postcondition, so consecution holds by
construction; refutation of the remaining suffix is checked with the solver
at every position, so the last formula always refutes ``Fm``.
"""

from __future__ import annotations

from typing import Protocol, Sequence

from .. import qe
from ..formula import (
    FALSE,
    TRUE,
    Atom,
    Formula,
    Term,
    conj_all,
    divides,
    mk_atom,
    neg,
    sp_quantified,
    to_post,
    top_conjuncts,
)
from .solver import Solver, Status


class Interpolator(Protocol):
    def interpolate(
        self,
        solver: Solver,
        fs: Sequence[Formula],
        vocab: Sequence[str],
        hints: Sequence[Formula | None] | None,
    ) -> list[Formula] | None: ...


def units_of(p: Formula) -> list[Formula]:
    """Split a formula into implied conjuncts, adding cheap weakenings."""
    out: list[Formula] = []
    for c in top_conjuncts(p):
        if isinstance(c, Atom) and c.op == "eq":
            out.append(mk_atom("le", c.term))
            out.append(mk_atom("le", -c.term))
            out.append(divides(2, c.term))
        elif isinstance(c, Atom) and c.op == "div":
            out.append(c)
            for d in range(2, c.mod):
                if c.mod % d == 0:
                    out.append(mk_atom("div", c.term, d))
        else:
            out.append(c)
    seen: set[Formula] = set()
    uniq = []
    for u in out:
        if u is TRUE or u == TRUE or u in seen:
            continue
        seen.add(u)
        uniq.append(u)
    return uniq


def tidy(units: Sequence[Formula]) -> Formula:
    """Conjoin units, merging ``t <= 0 & -t <= 0`` back into ``t = 0``."""
    les = {u.term: u for u in units if isinstance(u, Atom) and u.op == "le"}
    used: set[Term] = set()
    out: list[Formula] = []
    for u in units:
        if isinstance(u, Atom) and u.op == "le":
            if u.term in used:
                continue
            other = -u.term
            if other in les:
                used.add(u.term)
                used.add(other)
                out.append(mk_atom("eq", u.term))
                continue
        out.append(u)
    return conj_all(out)


def _drop_order(units: Sequence[Formula]) -> list[Formula]:
    plain = [u for u in units if not (isinstance(u, Atom) and u.op in ("div", "ndiv"))]
    divs = [u for u in units if isinstance(u, Atom) and u.op in ("div", "ndiv")]
    return plain + divs


class SpInterpolator:
    """Strongest-postcondition interpolation with unit generalization."""

    def __init__(self, generalize: bool = True, cap: int = qe.DEFAULT_NODE_CAP):
        self.generalize = generalize
        self.cap = cap
        self._stable: dict[tuple[Formula, int], bool] = {}
        self._keep: list[Formula] = []

    # -- helpers

    def _tail_unsat(self, solver: Solver, phi: Formula, tail: Sequence[Formula], vocab: Sequence[str]) -> Status:
        from .primitives import at_copy, chain

        r = solver.query([at_copy(phi, vocab, 0)] + chain(tail, vocab), [])
        return r.status

    def _is_stable(self, solver: Solver, u: Formula, loop: Formula, vocab: Sequence[str]) -> bool:
        key = (u, id(loop))
        hit = self._stable.get(key)
        if hit is not None:
            return hit
        self._keep.append(loop)
        r = solver.query([u, loop, neg(to_post(u, vocab))], [])
        ok = r.is_unsat
        self._stable[key] = ok
        return ok

    def _minimize(
        self,
        solver: Solver,
        current: list[Formula],
        candidates: Sequence[Formula],
        tail: Sequence[Formula],
        vocab: Sequence[str],
    ) -> list[Formula]:
        for u in _drop_order(candidates):
            if u not in current:
                continue
            trial = [c for c in current if c is not u]
            if self._tail_unsat(solver, conj_all(trial), tail, vocab) is Status.UNSAT:
                current = trial
        return current

    def _sp(self, phi: Formula, f: Formula, vocab: Sequence[str]) -> Formula:
        return qe.sp(phi, f, vocab, qe.Exact)

    # -- main entry

    def interpolate(
        self,
        solver: Solver,
        fs: Sequence[Formula],
        vocab: Sequence[str],
        hints: Sequence[Formula | None] | None = None,
    ) -> list[Formula] | None:
        vocab = list(vocab)
        m = len(fs)
        phis: list[Formula] = [TRUE]
        for i in range(1, m):
            prev = phis[-1]
            tail = fs[i:]
            if prev == FALSE:
                phis.append(FALSE)
                continue
            p = self._sp(prev, fs[i - 1], vocab)
            st = self._tail_unsat(solver, p, tail, vocab)
            if st is not Status.UNSAT:
                p = sp_quantified(prev, fs[i - 1], vocab)
                if self._tail_unsat(solver, p, tail, vocab) is not Status.UNSAT:
                    return None
                phis.append(p)
                continue
            if not self.generalize:
                phis.append(p)
                continue
            phis.append(self._generalize(solver, p, tail, vocab, hints[i - 1] if hints else None))
        phis.append(FALSE)
        return phis

    def _generalize(
        self,
        solver: Solver,
        p: Formula,
        tail: Sequence[Formula],
        vocab: Sequence[str],
        loop: Formula | None,
    ) -> Formula:
        units = units_of(p)
        if not units:
            return p
        if self._tail_unsat(solver, TRUE, tail, vocab) is Status.UNSAT:
            return TRUE
        if loop is not None:
            stable = [u for u in units if self._is_stable(solver, u, loop, vocab)]
            if stable and self._tail_unsat(solver, conj_all(stable), tail, vocab) is Status.UNSAT:
                # inductive facts are kept whole: they cost nothing at covering time
                return tidy(stable)
            unstable = [u for u in units if u not in stable]
            current = self._minimize(solver, list(units), unstable, tail, vocab)
            current = self._minimize(solver, current, stable, tail, vocab)
            return tidy(current)
        return tidy(self._minimize(solver, list(units), units, tail, vocab))
