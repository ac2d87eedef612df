"""Quantifier elimination for linear integer arithmetic.

``Exact`` mode is Cooper's method; ``OverApprox`` mode is a Fourier-Motzkin
real shadow that silently drops constraints it cannot combine (disequalities,
divisibility atoms and disjunctions mentioning the eliminated variable).
"""

from __future__ import annotations

import enum
import math
from functools import reduce
from typing import Iterable, Sequence

from .formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    Exists,
    Forall,
    Formula,
    Or,
    Term,
    conj_all,
    disj_all,
    freshen_binders,
    from_post,
    is_quantifier_free,
    map_atoms,
    mk_atom,
    prime,
    size,
    substitute,
    top_conjuncts,
)

DEFAULT_NODE_CAP = 50_000
DNF_CAP = 64
FM_PAIR_CAP = 400


class ProjectionMode(enum.Enum):
    EXACT = "exact"
    OVER_APPROX = "overapprox"


Exact = ProjectionMode.EXACT
OverApprox = ProjectionMode.OVER_APPROX


class Blowup(RuntimeError):
    """Exact elimination exceeded its node cap."""


def eliminate(
    vs: Iterable[str],
    f: Formula,
    mode: ProjectionMode = Exact,
    cap: int = DEFAULT_NODE_CAP,
) -> Formula:
    """Eliminate ``exists vs`` from the quantifier-free formula ``f``."""
    vs = list(vs)
    if not vs:
        return f
    if not is_quantifier_free(f):
        raise ValueError("eliminate expects a quantifier-free formula")
    for v in _order(vs, f):
        if v not in f.free_vars():
            continue
        f = _elim(v, f, mode, cap)
        if mode is Exact and size(f) > cap:
            raise Blowup(f"formula grew past {cap} nodes")
    return f


def project(vs: Iterable[str], f: Formula, mode: ProjectionMode = Exact, cap: int = DEFAULT_NODE_CAP) -> Formula:
    """Like :func:`eliminate` but also accepts positive existentials in ``f``."""
    inner, body = _pull_exists(freshen_binders(f))
    return eliminate(list(vs) + inner, body, mode, cap)


def qe(f: Formula, mode: ProjectionMode = Exact, cap: int = DEFAULT_NODE_CAP) -> Formula:
    """Eliminate all (positive) existential binders of ``f``."""
    return project([], f, mode, cap)


def project_safe(vs: Iterable[str], f: Formula, cap: int = DEFAULT_NODE_CAP) -> Formula:
    """Exact projection, degrading to OverApprox on blowup."""
    vs = list(vs)
    try:
        return project(vs, f, Exact, cap)
    except Blowup:
        return project(vs, f, OverApprox, cap)


def _pull_exists(f: Formula) -> tuple[list[str], Formula]:
    """Hoist all existentials out of positive positions (binders are unique)."""
    if isinstance(f, Exists):
        vs, body = _pull_exists(f.body)
        return list(f.vars) + vs, body
    if isinstance(f, (And, Or)):
        vs: list[str] = []
        parts = []
        for a in f.args:
            avs, ab = _pull_exists(a)
            vs.extend(avs)
            parts.append(ab)
        return vs, conj_all(parts) if isinstance(f, And) else disj_all(parts)
    if isinstance(f, Forall):
        raise ValueError("universal quantifiers are not supported by elimination")
    return [], f


def _order(vs: Sequence[str], f: Formula) -> list[str]:
    """Variables defined by unit equalities first, then by occurrence count."""
    counts: dict[str, int] = {v: 0 for v in vs}
    unit: set[str] = set()
    for c in top_conjuncts(f):
        if isinstance(c, Atom) and c.op == "eq":
            for v, k in c.term.coeffs:
                if v in counts and k in (1, -1):
                    unit.add(v)
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            for v, _ in g.term.coeffs:
                if v in counts:
                    counts[v] += 1
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
    return sorted(vs, key=lambda v: (v not in unit, counts[v]))


def _elim(v: str, f: Formula, mode: ProjectionMode, cap: int) -> Formula:
    if v not in f.free_vars():
        return f
    if isinstance(f, Or):
        return disj_all(_elim(v, g, mode, cap) for g in f.args)
    parts = top_conjuncts(f)
    keep = [p for p in parts if v not in p.free_vars()]
    mine = [p for p in parts if v in p.free_vars()]
    # unit equality: substitute
    for p in mine:
        if isinstance(p, Atom) and p.op == "eq":
            c = p.term.coeff(v)
            if c in (1, -1):
                t = p.term.drop(v).scale(-c)
                rest = [substitute(q, {v: t}) for q in mine if q is not p]
                return conj_all(keep + rest)
    if mode is OverApprox:
        # a non-unit equality would need divisibility: use its two half-spaces
        split: list[Formula] = []
        for p in mine:
            if isinstance(p, Atom) and p.op == "eq":
                split += [mk_atom("le", p.term), mk_atom("le", -p.term)]
            else:
                split.append(p)
        return conj_all(keep + [_fm(v, split, cap)])
    # non-unit equality a*v + t = 0: multiply every other occurrence through
    for p in mine:
        if isinstance(p, Atom) and p.op == "eq":
            return conj_all(keep + [_elim_by_equality(v, p, [q for q in mine if q is not p])])
    return conj_all(keep + [_cooper(v, conj_all(mine), cap)])


def _elim_by_equality(v: str, e: Atom, others: list[Formula]) -> Formula:
    a = e.term.coeff(v)
    t = e.term.drop(v)
    if a < 0:
        a, t = -a, -t
    # a*v = -t.  For each atom c*v + s: scale by a, replace a*v by -t.
    def rewrite(at: Atom) -> Formula:
        c = at.term.coeff(v)
        if c == 0:
            return at
        s = at.term.drop(v)
        if at.op in ("div", "ndiv"):
            # m | c v + s  <=>  a m | c (a v) + a s
            return mk_atom(at.op, (-t).scale(c) + s.scale(a), at.mod * a)
        return mk_atom(at.op, (-t).scale(c) + s.scale(a))

    body = conj_all(map_atoms(o, rewrite) for o in others)
    return conj_all([mk_atom("div", t, a), body])


def _collect(v: str, f: Formula) -> list[Atom]:
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            if g.term.coeff(v):
                out.append(g)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif not (g is TRUE or g is FALSE):
            raise ValueError("quantifier inside Cooper elimination")
    return out


def _lcm(xs: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), xs, 1)


def _cooper(v: str, f: Formula, cap: int) -> Formula:
    occ = _collect(v, f)
    if not occ:
        return f
    L = _lcm(abs(a.term.coeff(v)) for a in occ)

    def normalize(at: Atom) -> Formula:
        c = at.term.coeff(v)
        if c == 0:
            return at
        m = L // abs(c)
        s = at.term.drop(v).scale(m)
        sign = 1 if c > 0 else -1
        new = s + Term.var(v, sign)
        if at.op in ("div", "ndiv"):
            if sign < 0:
                new = -new
            return Atom(at.op, new, at.mod * m) if at.mod * m > 1 else mk_atom(at.op, new, at.mod * m)
        if at.op in ("eq", "ne") and sign < 0:
            new = -new
        return Atom(at.op, new)

    g = map_atoms(f, normalize)
    if L > 1:
        g = conj_all([g, mk_atom("div", Term.var(v), L)])
    occ = _collect(v, g)
    delta = _lcm(a.mod for a in occ if a.op in ("div", "ndiv"))
    lowers: list[Term] = []  # B set: v > b
    uppers: list[Term] = []  # A set: v < a
    for a in occ:
        c = a.term.coeff(v)
        rest = a.term.drop(v)
        if a.op == "le":
            if c > 0:  # v + rest <= 0: v <= -rest, v < -rest + 1
                uppers.append(-rest + 1)
            else:  # -v + rest <= 0: v >= rest, v > rest - 1
                lowers.append(rest - 1)
        elif a.op == "eq":  # v + rest = 0: v = -rest
            lowers.append(-rest - 1)
            uppers.append(-rest + 1)
        elif a.op == "ne":
            lowers.append(-rest)
            uppers.append(-rest)
    use_lower = len(set(lowers)) <= len(set(uppers))
    points = list(dict.fromkeys(lowers if use_lower else uppers))

    def infinity(at: Atom) -> Formula:
        c = at.term.coeff(v)
        if c == 0 or at.op in ("div", "ndiv"):
            return at
        if at.op == "eq":
            return FALSE
        if at.op == "ne":
            return TRUE
        # le: c>0 is an upper bound, true at -inf
        if use_lower:
            return TRUE if c > 0 else FALSE
        return FALSE if c > 0 else TRUE

    g_inf = map_atoms(g, infinity)
    out: list[Formula] = []
    total = 0
    for j in range(1, delta + 1):
        val = Term.constant(-j if not use_lower else j)
        r = substitute(g_inf, {v: val})
        if r is TRUE:
            return TRUE
        out.append(r)
        total += size(r)
    for p in points:
        for j in range(1, delta + 1):
            val = p + j if use_lower else p - j
            r = substitute(g, {v: val})
            if r is TRUE:
                return TRUE
            out.append(r)
            total += size(r)
            if total > cap:
                raise Blowup(f"Cooper expansion past {cap} nodes")
    return disj_all(out)


def _fm(v: str, parts: list[Formula], cap: int) -> Formula:
    # expand nested disjunctions only when small, otherwise drop them
    disjs = [p for p in parts if not isinstance(p, Atom)]
    if disjs:
        n = 1
        for d in disjs:
            n *= len(d.args) if isinstance(d, Or) else 1
        if n <= DNF_CAP:
            return disj_all(_fm(v, list(c), cap) for c in _dnf(parts))
        parts = [p for p in parts if isinstance(p, Atom)]
    lowers: list[tuple[int, Term]] = []  # c*v >= t  (c > 0)
    uppers: list[tuple[int, Term]] = []  # c*v <= t
    for p in parts:
        assert isinstance(p, Atom)
        if p.op != "le":
            continue
        c = p.term.coeff(v)
        rest = p.term.drop(v)
        if c > 0:
            uppers.append((c, -rest))
        else:
            lowers.append((-c, rest))
    out: list[Formula] = []
    for cl, tl in lowers:
        for cu, tu in uppers:
            # cl*v >= tl and cu*v <= tu  =>  cu*tl <= cl*tu
            out.append(mk_atom("le", tl.scale(cu) - tu.scale(cl)))
            if len(out) >= FM_PAIR_CAP:
                return conj_all(out)
    return conj_all(out)


def _dnf(parts: list[Formula]) -> list[list[Formula]]:
    cubes: list[list[Formula]] = [[]]
    for p in parts:
        if isinstance(p, Or):
            cubes = [c + list(top_conjuncts(d)) for c in cubes for d in p.args]
        else:
            cubes = [c + [p] for c in cubes]
    return cubes


def project_pre(f: Formula, vocab: Iterable[str], mode: ProjectionMode = OverApprox) -> Formula:
    """Over-approximate ``exists X'. f`` as a state formula over X."""
    vocab = list(vocab)
    inner, body = _pull_exists(freshen_binders(f))
    drop = inner + [prime(x) for x in vocab]
    return _project_with(drop, body, mode)


def project_post(f: Formula, vocab: Iterable[str], mode: ProjectionMode = OverApprox) -> Formula:
    """Over-approximate ``exists X. f`` renamed to unprimed variables."""
    vocab = list(vocab)
    inner, body = _pull_exists(freshen_binders(f))
    drop = inner + vocab
    return from_post(_project_with(drop, body, mode), vocab)


def _project_with(drop: list[str], body: Formula, mode: ProjectionMode) -> Formula:
    if mode is Exact:
        try:
            return eliminate(drop, body, Exact)
        except Blowup:
            pass
    return eliminate(drop, body, OverApprox)


def sp(psi: Formula, f: Formula, vocab: Iterable[str], mode: ProjectionMode = Exact) -> Formula:
    """Strongest postcondition ``(exists X. psi & f)[X' -> X]``.

    In Exact mode a blowup falls back to OverApprox, so the result is always
    a sound over-approximation.
    """
    vocab = list(vocab)
    body = conj_all([freshen_binders(psi), freshen_binders(f)])
    inner, body = _pull_exists(body)
    drop = inner + vocab
    # post-state names must not collide with the pre-state ones while eliminating
    out = _project_with(drop, body, mode)
    return from_post(out, vocab)


__all__ = [
    "Blowup",
    "Exact",
    "OverApprox",
    "ProjectionMode",
    "eliminate",
    "project",
    "project_pre",
    "project_post",
    "project_safe",
    "qe",
    "sp",
]
