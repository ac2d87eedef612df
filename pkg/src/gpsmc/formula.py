"""Linear integer arithmetic terms and formulas.

Formulas are immutable trees kept in negation normal form.  Atoms are
normalized on construction: every atom is one of

    t <= 0,  t = 0,  t != 0,  d | t,  not (d | t)

for a linear term ``t`` with integer coefficients, so a large family of
trivial facts (ground atoms, ``1 | t``, gcd-tightening of inequalities) is
folded away before it can reach the solver.

Variables are plain strings.  Priming is part of the name: ``x`` is the
pre-state copy, ``x'`` the post-state copy and ``x''`` the midpoint copy used
internally by :func:`compose`.  Existential binders introduced by the checker
use names beginning with ``__k`` (loop counters) or ``__m`` (midpoints).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

State = dict[str, int]

_fresh_counter = itertools.count()


class UsageError(ValueError):
    """Raised when an operation is applied outside its contract."""


class NeedsSolver(RuntimeError):
    """Raised by :func:`evaluate` when a binder cannot be resolved locally."""


def fresh(prefix: str) -> str:
    return f"{prefix}{next(_fresh_counter)}"


def prime(v: str) -> str:
    return v + "'"


def unprime(v: str) -> str:
    return v.rstrip("'")


def prime_level(v: str) -> int:
    return len(v) - len(v.rstrip("'"))


def is_reserved(name: str) -> bool:
    return name == "gas" or name.startswith("__k") or name.startswith("__m")


class Vocabulary:
    """An ordered set of program variable names (unprimed)."""

    __slots__ = ("names", "_set")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        for n in names:
            if not n or "'" in n:
                raise UsageError(f"invalid variable name {n!r}")
        if len(set(names)) != len(names):
            raise UsageError(f"duplicate variable names in {names}")
        self.names = names
        self._set = frozenset(names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._set

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"Vocabulary({list(self.names)!r})"

    def primed(self) -> list[str]:
        return [prime(n) for n in self.names]

    def extend(self, name: str) -> "Vocabulary":
        return Vocabulary(self.names + (name,))


# --------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, slots=True)
class Term:
    """A linear term ``sum(c * v) + const`` with coefficients sorted by name."""

    coeffs: tuple[tuple[str, int], ...] = ()
    const: int = 0

    @staticmethod
    def of(coeffs: Mapping[str, int] | Iterable[tuple[str, int]], const: int = 0) -> "Term":
        acc: dict[str, int] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for v, c in items:
            acc[v] = acc.get(v, 0) + c
        return Term(tuple(sorted((v, c) for v, c in acc.items() if c)), const)

    @staticmethod
    def var(name: str, coeff: int = 1) -> "Term":
        return Term(((name, coeff),) if coeff else (), 0)

    @staticmethod
    def constant(c: int) -> "Term":
        return Term((), c)

    def __add__(self, other: "Term | int") -> "Term":
        if isinstance(other, int):
            return Term(self.coeffs, self.const + other)
        if not other.coeffs:
            return Term(self.coeffs, self.const + other.const)
        if not self.coeffs:
            return Term(other.coeffs, self.const + other.const)
        return Term.of(itertools.chain(self.coeffs, other.coeffs), self.const + other.const)

    def __radd__(self, other: int) -> "Term":
        return self + other

    def __neg__(self) -> "Term":
        return Term(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other: "Term | int") -> "Term":
        if isinstance(other, int):
            return Term(self.coeffs, self.const - other)
        return self + (-other)

    def __rsub__(self, other: int) -> "Term":
        return (-self) + other

    def scale(self, k: int) -> "Term":
        if k == 0:
            return Term()
        return Term(tuple((v, c * k) for v, c in self.coeffs), self.const * k)

    __mul__ = scale
    __rmul__ = scale

    def coeff(self, name: str) -> int:
        for v, c in self.coeffs:
            if v == name:
                return c
        return 0

    def vars(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def is_const(self) -> bool:
        return not self.coeffs

    def drop(self, name: str) -> "Term":
        return Term(tuple((v, c) for v, c in self.coeffs if v != name), self.const)

    def content(self) -> int:
        """gcd of the variable coefficients (0 for a constant term)."""
        g = 0
        for _, c in self.coeffs:
            g = math.gcd(g, c)
        return g

    def substitute(self, sub: Mapping[str, "Term"]) -> "Term":
        if not any(v in sub for v, _ in self.coeffs):
            return self
        acc: dict[str, int] = {}
        const = self.const
        for v, c in self.coeffs:
            r = sub.get(v)
            if r is None:
                acc[v] = acc.get(v, 0) + c
            else:
                const += c * r.const
                for w, d in r.coeffs:
                    acc[w] = acc.get(w, 0) + c * d
        return Term(tuple(sorted((v, c) for v, c in acc.items() if c)), const)

    def rename(self, ren: Mapping[str, str]) -> "Term":
        if not any(v in ren for v, _ in self.coeffs):
            return self
        return Term.of(((ren.get(v, v), c) for v, c in self.coeffs), self.const)

    def evaluate(self, env: Mapping[str, int]) -> int:
        total = self.const
        for v, c in self.coeffs:
            total += c * env[v]
        return total

    def __str__(self) -> str:
        return term_to_text(self)


def term_to_text(t: Term) -> str:
    parts: list[str] = []
    for v, c in t.coeffs:
        mag = abs(c)
        body = v if mag == 1 else f"{mag}*{v}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    if t.const or not parts:
        if not parts:
            parts.append(str(t.const))
        else:
            parts.append(f"+ {t.const}" if t.const > 0 else f"- {-t.const}")
    return " ".join(parts)


# --------------------------------------------------------------------------
# Formulas


class Formula:
    """Base class of all formula nodes."""

    __slots__ = ()

    def free_vars(self) -> frozenset[str]:  # pragma: no cover - overridden
        raise NotImplementedError

    def __and__(self, other: "Formula") -> "Formula":
        return conj(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return disj(self, other)

    def __invert__(self) -> "Formula":
        return neg(self)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class _Top(Formula):
    def free_vars(self) -> frozenset[str]:
        return frozenset()

    def __repr__(self) -> str:
        return "TRUE"


@dataclass(frozen=True, slots=True)
class _Bot(Formula):
    def free_vars(self) -> frozenset[str]:
        return frozenset()

    def __repr__(self) -> str:
        return "FALSE"


TRUE: Formula = _Top()
FALSE: Formula = _Bot()

ATOM_OPS = ("le", "eq", "ne", "div", "ndiv")


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    """``op`` applied to ``term``: ``le`` is t <= 0, ``div`` is mod | t."""

    op: str
    term: Term
    mod: int = 0

    def free_vars(self) -> frozenset[str]:
        return self.term.vars()

    def __repr__(self) -> str:
        return f"Atom({to_text(self)})"


def _cached_fv(args: Iterable[Formula]) -> frozenset[str]:
    out: set[str] = set()
    for a in args:
        out |= a.free_vars()
    return frozenset(out)


@dataclass(frozen=True, slots=True)
class And(Formula):
    args: tuple[Formula, ...]
    _fv: frozenset[str] = field(default=frozenset(), compare=False, repr=False)
    _hash: int = field(default=0, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_fv", _cached_fv(self.args))
        object.__setattr__(self, "_hash", hash(("and", self.args)))

    def __hash__(self) -> int:
        return self._hash

    def free_vars(self) -> frozenset[str]:
        return self._fv


@dataclass(frozen=True, slots=True)
class Or(Formula):
    args: tuple[Formula, ...]
    _fv: frozenset[str] = field(default=frozenset(), compare=False, repr=False)
    _hash: int = field(default=0, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_fv", _cached_fv(self.args))
        object.__setattr__(self, "_hash", hash(("or", self.args)))

    def __hash__(self) -> int:
        return self._hash

    def free_vars(self) -> frozenset[str]:
        return self._fv


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    vars: tuple[str, ...]
    body: Formula
    _fv: frozenset[str] = field(default=frozenset(), compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_fv", self.body.free_vars() - frozenset(self.vars))

    def free_vars(self) -> frozenset[str]:
        return self._fv


@dataclass(frozen=True, slots=True)
class Forall(Formula):
    vars: tuple[str, ...]
    body: Formula
    _fv: frozenset[str] = field(default=frozenset(), compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_fv", self.body.free_vars() - frozenset(self.vars))

    def free_vars(self) -> frozenset[str]:
        return self._fv


# --------------------------------------------------------------------------
# Smart constructors


def mk_atom(op: str, term: Term, mod: int = 0) -> Formula:
    """Build a normalized atom, folding it to TRUE/FALSE when decidable."""
    if op == "le":
        if term.is_const():
            return TRUE if term.const <= 0 else FALSE
        g = term.content()
        if g > 1:
            # g*s + c <= 0  <=>  s <= floor(-c/g)  <=>  s + ceil(c/g) <= 0
            term = Term(tuple((v, c // g) for v, c in term.coeffs), -((-term.const) // g))
        return Atom("le", term)
    if op in ("eq", "ne"):
        if term.is_const():
            return TRUE if (term.const == 0) == (op == "eq") else FALSE
        g = term.content()
        if term.const % g:
            return FALSE if op == "eq" else TRUE
        if g > 1:
            term = Term(tuple((v, c // g) for v, c in term.coeffs), term.const // g)
        if term.coeffs[0][1] < 0:
            term = -term
        return Atom(op, term)
    if op in ("div", "ndiv"):
        if mod < 1:
            raise UsageError(f"divisibility modulus must be positive, got {mod}")
        if mod == 1:
            return TRUE if op == "div" else FALSE
        term = Term(tuple((v, c % mod) for v, c in term.coeffs if c % mod), term.const % mod)
        if term.is_const():
            return TRUE if (term.const == 0) == (op == "div") else FALSE
        g = math.gcd(term.content(), mod)
        if g > 1:
            # g | mod and g | coefficients: need g | const as well
            if term.const % g:
                return FALSE if op == "div" else TRUE
            term = Term(tuple((v, c // g) for v, c in term.coeffs), term.const // g)
            mod //= g
            if mod == 1:
                return TRUE if op == "div" else FALSE
        return Atom(op, term, mod)
    raise UsageError(f"unknown atom operator {op!r}")


def le(a: Term | int, b: Term | int) -> Formula:
    return mk_atom("le", _t(a) - _t(b))


def lt(a: Term | int, b: Term | int) -> Formula:
    return mk_atom("le", _t(a) - _t(b) + 1)


def ge(a: Term | int, b: Term | int) -> Formula:
    return le(b, a)


def gt(a: Term | int, b: Term | int) -> Formula:
    return lt(b, a)


def eq(a: Term | int, b: Term | int) -> Formula:
    return mk_atom("eq", _t(a) - _t(b))


def ne(a: Term | int, b: Term | int) -> Formula:
    return mk_atom("ne", _t(a) - _t(b))


def divides(d: int, t: Term | int) -> Formula:
    return mk_atom("div", _t(t), d)


def _t(x: Term | int | str) -> Term:
    if isinstance(x, Term):
        return x
    if isinstance(x, str):
        return Term.var(x)
    return Term.constant(x)


def var(name: str) -> Term:
    return Term.var(name)


def _dedupe(args: Iterable[Formula]) -> list[Formula]:
    seen: set[Formula] = set()
    out: list[Formula] = []
    for a in args:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return out


def _complementary(args: Sequence[Formula]) -> bool:
    atoms = {a for a in args if isinstance(a, Atom)}
    if len(atoms) < 2:
        return False
    for a in atoms:
        if a.op in ("eq", "div") and neg_atom(a) in atoms:
            return True
    return False


def conj(*fs: Formula) -> Formula:
    return conj_all(fs)


def conj_all(fs: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for f in fs:
        if f is FALSE or isinstance(f, _Bot):
            return FALSE
        if isinstance(f, _Top):
            continue
        if isinstance(f, And):
            flat.extend(f.args)
        else:
            flat.append(f)
    flat = _dedupe(flat)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    if _complementary(flat):
        return FALSE
    return And(tuple(flat))


def disj(*fs: Formula) -> Formula:
    return disj_all(fs)


def disj_all(fs: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for f in fs:
        if isinstance(f, _Top):
            return TRUE
        if isinstance(f, _Bot):
            continue
        if isinstance(f, Or):
            flat.extend(f.args)
        else:
            flat.append(f)
    flat = _dedupe(flat)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    atoms = {a for a in flat if isinstance(a, Atom)}
    for a in atoms:
        if a.op in ("eq", "div") and neg_atom(a) in atoms:
            return TRUE
    return Or(tuple(flat))


def exists(vs: Iterable[str], body: Formula) -> Formula:
    fv = body.free_vars()
    keep = tuple(v for v in dict.fromkeys(vs) if v in fv)
    if not keep:
        return body
    if isinstance(body, Exists):
        return Exists(keep + tuple(v for v in body.vars if v not in keep), body.body)
    return Exists(keep, body)


def forall(vs: Iterable[str], body: Formula) -> Formula:
    fv = body.free_vars()
    keep = tuple(v for v in dict.fromkeys(vs) if v in fv)
    if not keep:
        return body
    return Forall(keep, body)


def neg_atom(a: Atom) -> Formula:
    if a.op == "le":
        # not (t <= 0)  <=>  -t + 1 <= 0
        return mk_atom("le", -a.term + 1)
    flip = {"eq": "ne", "ne": "eq", "div": "ndiv", "ndiv": "div"}[a.op]
    return mk_atom(flip, a.term, a.mod)


def neg(f: Formula) -> Formula:
    if isinstance(f, _Top):
        return FALSE
    if isinstance(f, _Bot):
        return TRUE
    if isinstance(f, Atom):
        return neg_atom(f)
    if isinstance(f, And):
        return disj_all(neg(a) for a in f.args)
    if isinstance(f, Or):
        return conj_all(neg(a) for a in f.args)
    if isinstance(f, Exists):
        return forall(f.vars, neg(f.body))
    if isinstance(f, Forall):
        return exists(f.vars, neg(f.body))
    raise TypeError(f)


def implies(a: Formula, b: Formula) -> Formula:
    return disj(neg(a), b)


# --------------------------------------------------------------------------
# Traversal


def map_atoms(f: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    """Rebuild ``f`` replacing each atom by ``fn(atom)``."""
    memo: dict[int, Formula] = {}

    def go(g: Formula) -> Formula:
        key = id(g)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(g, Atom):
            r = fn(g)
        elif isinstance(g, And):
            r = conj_all(go(a) for a in g.args)
        elif isinstance(g, Or):
            r = disj_all(go(a) for a in g.args)
        elif isinstance(g, Exists):
            r = exists(g.vars, go(g.body))
        elif isinstance(g, Forall):
            r = forall(g.vars, go(g.body))
        else:
            r = g
        memo[key] = r
        return r

    return go(f)


def atoms(f: Formula) -> Iterator[Atom]:
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            yield g
        elif isinstance(g, (And, Or)):
            stack.extend(reversed(g.args))
        elif isinstance(g, (Exists, Forall)):
            stack.append(g.body)


def size(f: Formula) -> int:
    n = 0
    stack = [f]
    while stack:
        g = stack.pop()
        n += 1
        if isinstance(g, (And, Or)):
            stack.extend(g.args)
        elif isinstance(g, (Exists, Forall)):
            stack.append(g.body)
    return n


def is_quantifier_free(f: Formula) -> bool:
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Exists, Forall)):
            return False
        if isinstance(g, (And, Or)):
            stack.extend(g.args)
    return True


def bound_vars(f: Formula) -> set[str]:
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Exists, Forall)):
            out.update(g.vars)
            stack.append(g.body)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
    return out


def free_vars(f: Formula) -> frozenset[str]:
    return f.free_vars()


def substitute(f: Formula, sub: Mapping[str, Term]) -> Formula:
    """Capture-avoiding substitution of terms for free variables."""
    if not sub:
        return f
    fv = f.free_vars()
    sub = {k: v for k, v in sub.items() if k in fv}
    if not sub:
        return f
    if isinstance(f, Atom):
        return mk_atom(f.op, f.term.substitute(sub), f.mod)
    if isinstance(f, And):
        return conj_all(substitute(a, sub) for a in f.args)
    if isinstance(f, Or):
        return disj_all(substitute(a, sub) for a in f.args)
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in sub.items() if k not in f.vars}
        incoming: set[str] = set()
        for t in inner.values():
            incoming |= t.vars()
        body = f.body
        vs = list(f.vars)
        clash = [v for v in vs if v in incoming]
        if clash:
            ren = {v: fresh(_binder_prefix(v)) for v in clash}
            body = rename(body, ren)
            vs = [ren.get(v, v) for v in vs]
        make = exists if isinstance(f, Exists) else forall
        return make(vs, substitute(body, inner))
    return f


def _binder_prefix(v: str) -> str:
    if v.startswith("__k"):
        return "__k"
    return "__m"


def rename(f: Formula, ren: Mapping[str, str]) -> Formula:
    """Rename free variables.  Binders are assumed not to clash with targets."""
    return substitute(f, {k: Term.var(v) for k, v in ren.items() if k != v})


def freshen_binders(f: Formula) -> Formula:
    """Give every bound variable a globally fresh name."""
    if isinstance(f, (And, Or)):
        args = [freshen_binders(a) for a in f.args]
        return conj_all(args) if isinstance(f, And) else disj_all(args)
    if isinstance(f, (Exists, Forall)):
        ren = {v: fresh(_binder_prefix(v)) for v in f.vars}
        body = freshen_binders(rename(f.body, ren))
        make = exists if isinstance(f, Exists) else forall
        return make([ren[v] for v in f.vars], body)
    return f


def simplify(f: Formula) -> Formula:
    """Equivalence-preserving cleanup: rebuild through the smart constructors."""
    return map_atoms(f, lambda a: mk_atom(a.op, a.term, a.mod))


# --------------------------------------------------------------------------
# Transition-formula operations


def identity(vocab: Iterable[str]) -> Formula:
    return conj_all(eq(Term.var(prime(v)), Term.var(v)) for v in vocab)


def frame(vocab: Iterable[str], written: Iterable[str]) -> Formula:
    w = set(written)
    return conj_all(eq(Term.var(prime(v)), Term.var(v)) for v in vocab if v not in w)


def prenex_exists(f: Formula) -> tuple[list[str], Formula]:
    """Pull existential binders out of top-level conjunctions.

    Binder names must already be unique (see :func:`freshen_binders`).
    """
    if isinstance(f, Exists):
        vs, body = prenex_exists(f.body)
        return list(f.vars) + vs, body
    if isinstance(f, And):
        vs: list[str] = []
        parts: list[Formula] = []
        for a in f.args:
            avs, ab = prenex_exists(a)
            vs.extend(avs)
            parts.append(ab)
        return vs, conj_all(parts)
    return [], f


def top_conjuncts(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, And):
        return f.args
    if isinstance(f, _Top):
        return ()
    return (f,)


def _unit_definition(a: Formula, v: str) -> Term | None:
    """If ``a`` is an equality with unit coefficient on ``v``, solve it for v."""
    if isinstance(a, Atom) and a.op == "eq":
        c = a.term.coeff(v)
        if c in (1, -1):
            rest = a.term.drop(v)
            return rest.scale(-c)
    return None


def eliminate_by_equalities(vs: Sequence[str], body: Formula) -> tuple[list[str], Formula]:
    """Substitute away variables that have a top-level unit equality.

    Returns the variables that could not be eliminated and the new body.
    """
    remaining = list(vs)
    changed = True
    while changed and remaining:
        changed = False
        for v in list(remaining):
            if v not in body.free_vars():
                remaining.remove(v)
                changed = True
                continue
            for a in top_conjuncts(body):
                t = _unit_definition(a, v)
                if t is not None and v not in t.vars():
                    rest = [b for b in top_conjuncts(body) if b is not a]
                    body = substitute(conj_all(rest), {v: t})
                    remaining.remove(v)
                    changed = True
                    break
    return [v for v in remaining if v in body.free_vars()], body


def compose(f: Formula, g: Formula, vocab: Iterable[str]) -> Formula:
    """Relational composition ``exists X''. f[X'->X''] & g[X->X'']``."""
    vocab = list(vocab)
    if isinstance(f, _Bot) or isinstance(g, _Bot):
        return FALSE
    for h in (f, g):
        for v in h.free_vars():
            if unprime(v) not in vocab:
                raise UsageError(f"variable {v!r} outside vocabulary {vocab}")
            if prime_level(v) > 1:
                raise UsageError(f"double-primed variable {v!r} in transition formula")
    mids = {v: fresh(f"__m_{v}_") for v in vocab}
    f2 = rename(freshen_binders(f), {prime(v): mids[v] for v in vocab})
    g2 = rename(freshen_binders(g), {v: mids[v] for v in vocab})
    fv, fb = prenex_exists(f2)
    gv, gb = prenex_exists(g2)
    body = conj(fb, gb)
    if isinstance(body, _Bot):
        return FALSE
    left, body = eliminate_by_equalities(list(mids.values()), body)
    left2, body = eliminate_by_equalities(fv + gv, body)
    return exists(left + left2, body)


def compose_all(fs: Sequence[Formula], vocab: Iterable[str]) -> Formula:
    vocab = list(vocab)
    if not fs:
        return identity(vocab)
    acc = fs[0]
    for f in fs[1:]:
        acc = compose(acc, f, vocab)
    return acc


def guard(state_formula: Formula, vocab: Iterable[str]) -> Formula:
    """The transition formula ``assume(phi)``: phi over X and X' = X."""
    return conj(state_formula, identity(vocab))


def to_post(f: Formula, vocab: Iterable[str]) -> Formula:
    """Rename a state formula over X to the primed copy X'."""
    return rename(f, {v: prime(v) for v in vocab})


def from_post(f: Formula, vocab: Iterable[str]) -> Formula:
    """Rename X' to X in a formula mentioning only primed program variables."""
    return rename(f, {prime(v): v for v in vocab})


def sp_quantified(psi: Formula, f: Formula, vocab: Iterable[str]) -> Formula:
    """Strongest postcondition keeping the quantifier syntactically."""
    vocab = list(vocab)
    olds = {v: fresh(f"__m_{v}_") for v in vocab}
    body = conj(rename(freshen_binders(psi), olds), rename(freshen_binders(f), olds))
    body = from_post(body, vocab)
    vs, body = prenex_exists(body)
    left, body = eliminate_by_equalities(list(olds.values()) + vs, body)
    return exists(left, body)


def is_state_formula(f: Formula) -> bool:
    return all(prime_level(v) == 0 for v in f.free_vars())


# --------------------------------------------------------------------------
# Evaluation


def eval_atom(a: Atom, env: Mapping[str, int]) -> bool:
    v = a.term.evaluate(env)
    if a.op == "le":
        return v <= 0
    if a.op == "eq":
        return v == 0
    if a.op == "ne":
        return v != 0
    if a.op == "div":
        return v % a.mod == 0
    return v % a.mod != 0


def eval_qf(f: Formula, env: Mapping[str, int]) -> bool:
    if isinstance(f, Atom):
        return eval_atom(f, env)
    if isinstance(f, And):
        return all(eval_qf(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(eval_qf(a, env) for a in f.args)
    if isinstance(f, _Top):
        return True
    if isinstance(f, _Bot):
        return False
    raise NeedsSolver("needs-solver: formula has quantifiers")


def _py_term(t: Term, names: Mapping[str, str] | None = None) -> str:
    parts = []
    for v, c in t.coeffs:
        x = names[v] if names is not None else f"e[{v!r}]"
        parts.append(x if c == 1 else f"-{x}" if c == -1 else f"{c}*{x}")
    if t.const or not parts:
        parts.append(str(t.const))
    return "(" + "+".join(parts).replace("+-", "-") + ")"


def _py_formula(f: Formula, names: Mapping[str, str] | None = None) -> str:
    if isinstance(f, Atom):
        t = _py_term(f.term, names)
        return {
            "le": f"{t}<=0",
            "eq": f"{t}==0",
            "ne": f"{t}!=0",
            "div": f"{t}%{f.mod}==0",
            "ndiv": f"{t}%{f.mod}!=0",
        }[f.op]
    if isinstance(f, And):
        return "(" + " and ".join(_py_formula(a, names) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(" + " or ".join(_py_formula(a, names) for a in f.args) + ")"
    if isinstance(f, _Top):
        return "True"
    if isinstance(f, _Bot):
        return "False"
    raise NeedsSolver("needs-solver: formula has quantifiers")


def compile_qf(f: Formula) -> Callable[[Mapping[str, int]], bool]:
    """A Python predicate equivalent to ``eval_qf(f, .)``, for hot loops."""
    return eval(f"lambda e: {_py_formula(f)}")  # noqa: S307 - generated from our own AST


def compile_terms(ts: Mapping[str, Term]) -> Callable[[Mapping[str, int]], dict[str, int]]:
    body = ", ".join(f"{k!r}: {_py_term(t)}" for k, t in ts.items())
    return eval(f"lambda e: {{{body}}}")  # noqa: S307


def compile_step(
    test: Formula, updates: Mapping[str, Term], post: Formula, vocab: Sequence[str]
) -> Callable[[Mapping[str, int]], dict[str, int] | None]:
    """Fuse ``test``, the ``updates`` and a check of ``post`` on the new state.

    The result maps a state to its successor, or to None when ``test`` fails
    or the successor violates ``post``.
    """
    pre = {v: f"a{i}" for i, v in enumerate(vocab)}
    new = {v: f"b{i}" for i, v in enumerate(vocab)}
    lines = ["def step(e):"]
    lines += [f"    {pre[v]} = e[{v!r}]" for v in vocab]
    lines.append(f"    if not {_py_formula(test, pre)}: return None")
    lines += [f"    {new[v]} = {_py_term(updates[v], pre)}" for v in vocab]
    lines.append(f"    if not {_py_formula(post, new)}: return None")
    lines.append("    return {" + ", ".join(f"{v!r}: {new[v]}" for v in vocab) + "}")
    scope: dict = {}
    exec("\n".join(lines), scope)  # noqa: S102 - generated from our own AST
    return scope["step"]


def evaluate(
    f: Formula,
    pre: Mapping[str, int],
    post: Mapping[str, int] | None = None,
    solver: object | None = None,
) -> bool:
    """Does ``{X -> pre, X' -> post}`` satisfy ``f``?

    Quantified subformulas are resolved by first eliminating binders that are
    fixed by unit equalities; anything left over is sent to ``solver`` (an
    object with an ``is_sat`` method) or raises :class:`NeedsSolver`.
    """
    env: dict[str, int] = dict(pre)
    if post is not None:
        env.update({prime(k): v for k, v in post.items()})
    missing = [v for v in f.free_vars() if v not in env]
    if missing:
        raise UsageError(f"state does not define {sorted(missing)}")
    ground = substitute(f, {k: Term.constant(v) for k, v in env.items()})
    return _eval_ground(ground, solver)


def _eval_ground(f: Formula, solver: object | None) -> bool:
    if isinstance(f, _Top):
        return True
    if isinstance(f, _Bot):
        return False
    if isinstance(f, Atom):  # pragma: no cover - ground atoms fold away
        return eval_atom(f, {})
    if isinstance(f, And):
        return all(_eval_ground(a, solver) for a in f.args)
    if isinstance(f, Or):
        return any(_eval_ground(a, solver) for a in f.args)
    if isinstance(f, Exists):
        left, body = eliminate_by_equalities(list(f.vars), f.body)
        if not left:
            return _eval_ground(body, solver)
        if solver is None:
            raise NeedsSolver("needs-solver: unresolved existential binder")
        return solver.is_sat(exists(left, body)).is_sat  # type: ignore[attr-defined]
    if isinstance(f, Forall):
        if solver is None:
            raise NeedsSolver("needs-solver: universal binder")
        return not solver.is_sat(neg(f)).is_sat  # type: ignore[attr-defined]
    raise TypeError(f)


# --------------------------------------------------------------------------
# Printing


def atom_to_text(a: Atom) -> str:
    if a.op in ("div", "ndiv"):
        s = f"{a.mod} | {term_to_text(a.term)}"
        return s if a.op == "div" else f"!({s})"
    pos = Term(tuple((v, c) for v, c in a.term.coeffs if c > 0), 0)
    negs = Term(tuple((v, -c) for v, c in a.term.coeffs if c < 0), 0)
    rel = {"le": "<=", "eq": "=", "ne": "!="}[a.op]
    if pos.coeffs:
        return f"{term_to_text(pos)} {rel} {term_to_text(negs - a.term.const)}"
    flipped = {"le": ">=", "eq": "=", "ne": "!="}[a.op]
    return f"{term_to_text(negs)} {flipped} {a.term.const}"


_PREC = {"or": 1, "and": 2, "atom": 3}


def to_text(f: Formula) -> str:
    """Render in the textual formula grammar accepted by the parser."""

    def go(g: Formula, ctx: int) -> str:
        if isinstance(g, _Top):
            return "true"
        if isinstance(g, _Bot):
            return "false"
        if isinstance(g, Atom):
            return atom_to_text(g)
        if isinstance(g, And):
            s = " & ".join(go(a, 2) for a in g.args)
            return f"({s})" if ctx > 2 else s
        if isinstance(g, Or):
            s = " | ".join(go(a, 1) for a in g.args)
            return f"({s})" if ctx > 1 else s
        if isinstance(g, Exists):
            return f"(exists {', '.join(g.vars)}. {go(g.body, 0)})"
        if isinstance(g, Forall):
            return f"!(exists {', '.join(g.vars)}. {go(neg(g.body), 0)})"
        raise TypeError(g)

    return go(f, 0)
