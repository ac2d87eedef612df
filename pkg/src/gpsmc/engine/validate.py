"""Checks that an ART is well-labeled, for debugging and tests."""

from __future__ import annotations

from ..formula import TRUE, conj, neg, to_post
from ..smt.solver import Solver
from ..summary.table import SummaryTable
from .art import COVERED, PRUNED, Art


def validate_well_labeled(art: Art, table: SummaryTable, solver: Solver, check_pruned: bool = False) -> list[str]:
    """Return a list of violated conditions (empty when the ART is well-labeled)."""
    g = art.g
    vocab = list(g.vocab)
    bad: list[str] = []
    if art.root.label != TRUE:
        bad.append("root label is not true")
    for n in art.nodes:
        if n.children:
            succ = sorted(e.id for e in g.successors(n.vertex))
            if sorted(c.edge for c in n.children) != succ:
                bad.append(f"node {n.id} is not full")
        if n.parent is not None and n.label != TRUE:
            w = g.edge(n.edge).weight
            r = solver.query([n.parent.label, w, to_post(neg(n.label), vocab)])
            if not r.is_unsat:
                bad.append(f"consecution fails at node {n.id} ({r.status.value})")
        if n.covered_by is not None:
            tau = n.covered_by
            if tau not in set(n.ancestors()) or tau.vertex != n.vertex:
                bad.append(f"covering of node {n.id} is not a same-vertex ancestor")
            elif not solver.entails(n.label, tau.label).is_unsat:
                bad.append(f"covering of node {n.id} is not entailed")
        if check_pruned and n.status == PRUNED and not n.children:
            r = solver.query([conj(n.label, table[n.vertex])])
            if r.is_sat:
                bad.append(f"pruned node {n.id} still reaches the sink")
    return bad


def is_safe_certificate(art: Art, table: SummaryTable, solver: Solver) -> list[str]:
    """Violations of ``art`` being a proof of safety."""
    bad = validate_well_labeled(art, table, solver, check_pruned=True)
    for n in art.leaves():
        if n.status not in (PRUNED, COVERED):
            bad.append(f"leaf {n.id} is neither pruned nor covered")
        if n.vertex == art.g.sink and not solver.is_sat(n.label).is_unsat:
            bad.append(f"sink leaf {n.id} has a satisfiable label")
    return bad
