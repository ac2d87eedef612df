"""The GPSLite and GPS model-checking loops."""

from __future__ import annotations

import gc
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

from ..formula import (
    FALSE,
    TRUE,
    Atom,
    Formula,
    NeedsSolver,
    Term,
    conj_all,
    compile_qf,
    compile_step,
    compile_terms,
    eq,
    eval_qf,
    evaluate,
    guard,
    is_quantifier_free,
    neg,
    prime,
    substitute,
    top_conjuncts,
    unprime,
)
from ..graph import WeightedGraph
from ..smt.interpolate import SpInterpolator
from ..smt.primitives import check, check_plus
from ..smt.solver import Solver, Status
from ..summary.table import SummaryTable
from .art import COVERED, FRONTIER, INTERNAL, PRUNED, UNRESOLVED, Art, Node

SAFE = "safe"
UNSAFE = "unsafe"
EXHAUSTED = "exhausted"


@dataclass
class Budget:
    max_frontier: int | None = 10_000
    explore_steps: int = 10_000
    time_limit: float | None = None
    max_retries: int = 2


@dataclass
class Stats:
    iterations: int = 0
    tests: int = 0
    deadends: int = 0
    explores: int = 0
    covers: int = 0
    unknown_results: int = 0
    refinements: int = 0
    uncovered: int = 0
    explore_steps: int = 0
    explore_unsat: int = 0
    explore_unknown: int = 0
    fast_steps: int = 0
    cap_hits: int = 0
    unresolved: int = 0
    nodes: int = 0
    wall_time: float = 0.0
    smt: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["wall_time"] = round(self.wall_time, 4)
        return d


@dataclass
class Witness:
    edges: list[int]
    vertices: list[int]
    states: list[dict[str, int]]

    def to_text(self, g: WeightedGraph) -> str:
        lines = []
        for i, (v, s) in enumerate(zip(self.vertices, self.states)):
            vals = ", ".join(f"{k}={s[k]}" for k in g.vocab)
            lines.append(f"step {i}: {g.names[v]} {{{vals}}}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({"path": self.edges, "states": self.states})

    def replays(self, g: WeightedGraph, solver: Solver | None = None) -> bool:
        if len(self.states) != len(self.edges) + 1:
            return False
        for i, eid in enumerate(self.edges):
            e = g.edge(eid)
            if e.src != self.vertices[i] or e.dst != self.vertices[i + 1]:
                return False
            if not evaluate(e.weight, self.states[i], self.states[i + 1], solver):
                return False
        return self.vertices[0] == g.source and self.vertices[-1] == g.sink


@dataclass
class Verdict:
    kind: str
    stats: Stats
    art: Art | None = None
    witness: Witness | None = None
    reason: str = ""

    @property
    def safe(self) -> bool:
        return self.kind == SAFE

    @property
    def unsafe(self) -> bool:
        return self.kind == UNSAFE


class Exhausted(Exception):
    pass


class _Det:
    """A deterministic edge: guard over X plus one update term per variable."""

    __slots__ = ("guard", "updates", "test", "apply")

    def __init__(self, guard: Formula, updates: dict[str, Term]):
        self.guard = guard
        self.updates = updates
        self.test = _compiled(guard)
        self.apply = compile_terms(updates)


def _compiled(f: Formula) -> Callable[[dict[str, int]], bool]:
    try:
        return compile_qf(f)
    except (RecursionError, SyntaxError, MemoryError):
        return lambda env: eval_qf(f, env)


def determined_vars(f: Formula, vocab: list[str]) -> set[str]:
    """Variables whose post-value is fixed by a top-level unit equality."""
    out = set()
    for c in top_conjuncts(f):
        if isinstance(c, Atom) and c.op == "eq":
            ps = [v for v, _ in c.term.coeffs if v.endswith("'")]
            if len(ps) == 1 and c.term.coeff(ps[0]) in (1, -1) and unprime(ps[0]) in vocab:
                out.add(unprime(ps[0]))
    return out


def deterministic_form(f: Formula, vocab: list[str]) -> _Det | None:
    if not is_quantifier_free(f):
        return None
    updates: dict[str, Term] = {}
    rest: list[Formula] = []
    primed = {prime(v) for v in vocab}
    for c in top_conjuncts(f):
        if isinstance(c, Atom) and c.op == "eq":
            ps = [v for v, _ in c.term.coeffs if v in primed]
            if len(ps) == 1 and c.term.coeff(ps[0]) in (1, -1) and unprime(ps[0]) not in updates:
                k = c.term.coeff(ps[0])
                updates[unprime(ps[0])] = c.term.drop(ps[0]).scale(-k)
                continue
        rest.append(c)
    if len(updates) != len(vocab):
        return None
    if any(v in primed for c in rest for v in c.free_vars()):
        return None
    return _Det(conj_all(rest), updates)


class Checker:
    """One run of GPS or GPSLite on a graph with a summary table."""

    def __init__(
        self,
        g: WeightedGraph,
        table: SummaryTable,
        solver: Solver,
        budget: Budget | None = None,
        refine: bool = True,
        validate: bool = False,
        interpolator: SpInterpolator | None = None,
        use_loop_hints: bool = True,
        fast_paths: bool = True,
        prefer_zero: bool = True,
        on_event: Callable[[str, "Checker"], None] | None = None,
    ):
        self.g = g
        self.vocab = list(g.vocab)
        self.table = table
        self.solver = solver
        self.budget = budget or Budget()
        self.refine_enabled = refine
        self.validate = validate
        self.interpolator = interpolator or SpInterpolator()
        self.use_loop_hints = use_loop_hints
        self.fast_paths = fast_paths
        self.on_event = on_event
        self.art = Art(g)
        self.stats = Stats()
        self.violations: list[str] = []
        self.prefer_zero = prefer_zero
        self._det = [deterministic_form(e.weight, self.vocab) if fast_paths else None for e in g.edges]
        self._determined = [determined_vars(e.weight, self.vocab) for e in g.edges]
        self._pre_fn: dict[int, Callable | None] = {}
        self._fast: list | None = None
        self._deadline: float | None = None
        self._smt0 = solver.stats.as_dict()

    # -- helpers

    def _out_of_time(self) -> bool:
        return self._deadline is not None and time.monotonic() > self._deadline

    def _weights(self, n: Node) -> list[Formula]:
        return [self.g.edge(e).weight for e in n.edges()]

    def _hint(self, v: int) -> Formula | None:
        if not self.use_loop_hints:
            return None
        return self.table.loop(v)

    def _event(self, what: str) -> None:
        if self.validate:
            from .validate import validate_well_labeled

            report = validate_well_labeled(self.art, self.table, self.solver, check_pruned=True)
            self.violations.extend(f"after {what}: {r}" for r in report)
        if self.on_event is not None:
            self.on_event(what, self)

    def _finish(self, kind: str, start: float, witness: Witness | None = None, reason: str = "") -> Verdict:
        self.stats.wall_time = time.monotonic() - start
        now = self.solver.stats.as_dict()
        self.stats.smt = {k: round(now[k] - self._smt0[k], 4) for k in now}
        self.stats.nodes = len(self.art.nodes)
        return Verdict(kind, self.stats, self.art, witness, reason)

    # -- Explore

    def _fast_table(self) -> list:
        if self._fast is None:
            out = []
            for e, det in zip(self.g.edges, self._det):
                pre = self.table.precondition(e.dst) if det is not None else None
                fn = None
                if pre is not None:
                    try:
                        fn = compile_step(det.guard, det.updates, pre, self.vocab)
                    except (NeedsSolver, RecursionError, SyntaxError, MemoryError):
                        fn = None
                out.append(fn)
            self._fast = out
        return self._fast

    def _precondition(self, v: int):
        try:
            return self._pre_fn[v]
        except KeyError:
            pre = self.table.precondition(v)
            fn = self._pre_fn[v] = None if pre is None else _compiled(pre)
            return fn

    def _step(self, e_id: int, m: dict[str, int]) -> tuple[Status, dict[str, int]]:
        """Is there M' with M ->w(e) M' from which the sink may be reachable?"""
        e = self.g.edge(e_id)
        det = self._det[e_id]
        if det is not None:
            if not det.test(m):
                self.stats.fast_steps += 1
                return Status.UNSAT, {}
            m2 = det.apply(m)
            pre = self._precondition(e.dst)
            if pre is not None:
                self.stats.fast_steps += 1
                return (Status.SAT, m2) if pre(m2) else (Status.UNSAT, {})
            r = self.solver.query([substitute(self.table[e.dst], {v: Term.constant(m2[v]) for v in self.vocab})], [])
            return (r.status, m2 if r.is_sat else {})
        nxt = substitute(e.weight, {v: Term.constant(m[v]) for v in self.vocab})
        if self.prefer_zero:
            # take fresh values as 0 when that still may reach the sink
            free = [v for v in self.vocab if v not in self._determined[e_id]]
            if free:
                zero = conj_all([nxt] + [eq(Term.var(prime(v)), 0) for v in free])
                r = check_plus(self.solver, zero, self.table[e.dst], self.vocab)
                if r.is_sat:
                    return r.status, r.midpoint
        r = check_plus(self.solver, nxt, self.table[e.dst], self.vocab)
        return r.status, r.midpoint

    def explore(self, node: Node, m: dict[str, int], prefix_states: list[dict[str, int]]) -> Witness | None:
        """Depth-first concrete execution from ``node`` in state ``m``, guided by the summaries."""
        self.stats.tests += 1
        states: dict[int, dict[str, int]] = {node.id: m}
        stack: list[Node] = [node]
        art, sink, cap, deadline = self.art, self.g.sink, self.budget.explore_steps, self._deadline
        enqueue, push, nodes = art.enqueue, art.frontier.append, art.nodes
        succ = [[(e.dst, e.id) for e in self.g.successors(v)] for v in self.g.vertices]
        fast_table = self._fast_table()
        steps = fast = unsat = 0
        # the loop allocates many small acyclic objects; cyclic GC passes only slow it down
        gc_was_enabled = gc.isenabled()
        gc.disable()
        try:
            while stack:
                n = stack.pop()
                mn = states[n.id]
                if n.vertex == sink:
                    return self._witness(node, n, prefix_states, states)
                if steps >= cap or (deadline is not None and not steps & 255 and time.monotonic() > deadline):
                    self.stats.cap_hits += 1
                    enqueue(n)
                    for rest in stack:
                        enqueue(rest)
                    return None
                steps += 1
                kids = n.children
                if not kids:
                    # Art.expand, inlined
                    d = n.depth + 1
                    kids = n.children = []
                    for dst, eid in succ[n.vertex]:
                        c = Node(len(nodes), dst, n, eid, d)
                        nodes.append(c)
                        kids.append(c)
                    n.status = INTERNAL
                base = len(stack)
                for c in kids:
                    f = fast_table[c.edge]
                    if f is not None:
                        # deterministic edge into a vertex with a quantifier-free precondition
                        fast += 1
                        m2 = f(mn)
                        if m2 is not None:
                            states[c.id] = m2
                            stack.append(c)
                            continue
                        unsat += 1
                        c.queued = True
                        push(c)
                        continue
                    st, m2 = self._step(c.edge, mn)
                    if st is Status.SAT:
                        states[c.id] = m2
                        stack.append(c)
                    else:
                        if st is Status.UNSAT:
                            unsat += 1
                        else:
                            self.stats.explore_unknown += 1
                        enqueue(c)
                if len(stack) - base > 1:
                    # the first satisfiable child is explored first
                    stack[base:] = stack[base:][::-1]
            return None
        finally:
            if gc_was_enabled:
                gc.enable()
            self.stats.explore_steps += steps
            self.stats.fast_steps += fast
            self.stats.explore_unsat += unsat

    def _witness(self, start: Node, end: Node, prefix_states, states) -> Witness:
        chain: list[Node] = []
        n: Node | None = end
        while n is not start:
            chain.append(n)
            n = n.parent
        chain.reverse()
        all_states = list(prefix_states[:-1]) + [states[start.id]] + [states[c.id] for c in chain]
        edges = list(end.edges())
        verts = [self.g.source] + [self.g.edge(e).dst for e in edges]
        return Witness(edges, verts, all_states)

    # -- GPS pieces

    def refine(self, nodes: list[Node], phis: list[Formula]) -> None:
        """Conjoin ``phis[i]`` to ``nodes[i]`` and drop coverings that break."""
        changed = False
        for n, phi in zip(nodes, phis):
            if phi is TRUE or phi == TRUE:
                continue
            if not self.art.strengthen(n, phi):
                continue
            changed = True
            for sigma in list(n.covering):
                r = self.solver.entails(sigma.label, n.label)
                if not r.is_unsat:
                    self.art.remove_covering(sigma)
                    self.stats.uncovered += 1
                    self.art.enqueue(sigma)
        if changed:
            self.stats.refinements += 1

    def try_cover(self, n: Node) -> bool | None:
        """Cover ``n`` by an ancestor at the same vertex; None means unknown."""
        unknown = False
        for tau in n.ancestors():
            if tau.vertex != n.vertex:
                continue
            if tau.label == TRUE:
                # nothing can leave true; the query is trivially unsat and its interpolants are all true
                self.art.add_covering(n, tau)
                return True
            between: list[Node] = []
            m: Node | None = n
            while m is not tau:
                between.append(m)
                m = m.parent
            between.reverse()
            fs = [guard(tau.label, self.vocab)]
            fs += [self.g.edge(b.edge).weight for b in between]
            fs.append(guard(neg(tau.label), self.vocab))
            hints = [self._hint(tau.vertex)] + [self._hint(b.vertex) for b in between]
            r = check(self.solver, fs, self.vocab, hints, self.interpolator)
            if r.is_unsat:
                itp = r.interpolants
                self.refine(between, itp[2:2 + len(between)])
                self.art.add_covering(n, tau)
                return True
            if r.status is Status.UNKNOWN:
                unknown = True
        return None if unknown else False

    # -- main loops

    def _prefix_check(self, n: Node):
        fs = self._weights(n) + [self.table[n.vertex]]
        path_nodes = n.nodes_from_root()[1:]
        hints = [self._hint(p.vertex) for p in path_nodes]
        if self.refine_enabled:
            return check(self.solver, fs, self.vocab, hints, self.interpolator)
        # GPSLite: feasibility only; the state at dst(pi) is the midpoint
        from ..smt.primitives import CheckResult, feasible_chain, states_of

        r = feasible_chain(self.solver, fs, self.vocab)
        if r.is_sat:
            return CheckResult(Status.SAT, states=states_of(r.model, self.vocab, len(fs)))
        return CheckResult(r.status, reason=r.reason)

    def run(self) -> Verdict:
        start = time.monotonic()
        b = self.budget
        self._deadline = start + b.time_limit if b.time_limit is not None else None
        art = self.art
        art.enqueue(art.root)
        while art.frontier:
            if (b.max_frontier is not None and self.stats.iterations >= b.max_frontier) or self._out_of_time():
                return self._finish(EXHAUSTED, start, reason="budget exhausted")
            n = art.dequeue()
            if not n.is_leaf or n.status in (COVERED, PRUNED, UNRESOLVED):
                continue
            self.stats.iterations += 1
            if self.refine_enabled:
                covered = self.try_cover(n)
                if covered:
                    self.stats.covers += 1
                    self._event("cover")
                    continue
            r = self._prefix_check(n)
            if r.is_unsat:
                self.stats.deadends += 1
                if self.refine_enabled:
                    path_nodes = n.nodes_from_root()[1:]
                    self.refine(path_nodes, r.interpolants[1:1 + len(path_nodes)])
                n.status = PRUNED
                self._event("refine")
                continue
            if r.status is Status.UNKNOWN:
                self.stats.unknown_results += 1
                n.retries += 1
                if n.retries <= b.max_retries:
                    art.enqueue(n)
                else:
                    n.status = UNRESOLVED
                    self.stats.unresolved += 1
                continue
            self.stats.explores += 1
            depth = n.depth
            w = self.explore(n, r.states[depth], r.states[: depth + 1])
            self._event("explore")
            if w is not None:
                return self._finish(UNSAFE, start, witness=w)
        if self.stats.unresolved:
            return self._finish(EXHAUSTED, start, reason=f"{self.stats.unresolved} unresolved paths")
        if not art.is_complete():  # pragma: no cover - guarded by construction
            raise AssertionError("frontier empty but ART incomplete")
        return self._finish(SAFE, start)


def gps(g: WeightedGraph, table: SummaryTable, solver: Solver, budget: Budget | None = None, **kw) -> Verdict:
    return Checker(g, table, solver, budget, refine=True, **kw).run()


def gpslite(g: WeightedGraph, table: SummaryTable, solver: Solver, budget: Budget | None = None, **kw) -> Verdict:
    return Checker(g, table, solver, budget, refine=False, **kw).run()
