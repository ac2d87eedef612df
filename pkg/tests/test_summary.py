import random

from hypothesis import given, settings
from hypothesis import strategies as st

from gpsmc import qe
from gpsmc.formula import FALSE, TRUE, compose_all, conj, conj_all, disj, eq, frame, identity, le, neg, var
from gpsmc.graph import enumerate_paths, path_weight
from gpsmc.summary import (
    RegexFactory,
    build_summary_table,
    cycle_expression,
    extract_recurrences,
    language,
    path_expressions_single_source,
    path_expressions_single_target,
    star_summarize,
    trivial_table,
)
from gpsmc.summary.pathexpr import read_word

from graphs import random_graph

seeds = st.integers(0, 2**32 - 1)
K = 4


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_single_target_expressions_denote_all_paths(seed):
    g = random_graph(random.Random(seed))
    exprs = path_expressions_single_target(g)
    for u in g.vertices:
        words = {read_word(w, True) for w in language(exprs[u], K)}
        assert words == {p.edges for p in enumerate_paths(g, u, g.sink, K)}


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_single_source_expressions_denote_all_paths(seed):
    g = random_graph(random.Random(seed))
    exprs = path_expressions_single_source(g, g.source)
    for v in g.vertices:
        assert language(exprs[v], K) == {p.edges for p in enumerate_paths(g, g.source, v, K)}


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_cycle_expression(seed):
    g = random_graph(random.Random(seed))
    fac = RegexFactory()
    for v in g.vertices:
        want = {
            p.edges
            for p in enumerate_paths(g, v, v, K)
            if p.edges and all(g.edge(i).dst != v for i in p.edges[:-1])
        }
        assert language(cycle_expression(g, v, fac), K) == want


def test_affine_recurrence(solver):
    vocab = ["x", "y"]
    body = conj(le(var("x"), 9), eq(var("x'"), var("x") + 2), eq(var("y'"), var("y")))
    rs = extract_recurrences(body, vocab, solver)
    kinds = {(r.var, r.kind, r.step) for r in rs.recurrences}
    assert ("x", "affine", 2) in kinds and ("y", "unchanged", 0) in kinds


def test_bounded_step_recurrence(solver):
    vocab = ["x"]
    body = conj(le(var("x") + 1, var("x'")), le(var("x'"), var("x") + 3))
    rs = extract_recurrences(body, vocab, solver)
    assert {(r.kind, r.step) for r in rs.recurrences} == {("upper", 3), ("lower", 1)}


def test_unsatisfiable_body_has_no_recurrences(solver):
    assert extract_recurrences(conj(le(var("x"), 0), le(1, var("x"))), ["x"], solver) is None


@settings(max_examples=25, deadline=None)
@given(st.integers(-3, 3), st.integers(-4, 4), st.integers(0, 4))
def test_star_contains_iterates(solver, step, bound, k):
    vocab = ["x", "y"]
    body = conj(le(var("x"), bound), eq(var("x'"), var("x") + step), eq(var("y'"), var("y") + 1))
    star = star_summarize(body, vocab, solver)
    it = compose_all([body] * k, vocab) if k else identity(vocab)
    assert solver.entails(it, qe.qe(star)).is_unsat


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_summaries_over_approximate_random_graphs(solver, seed):
    g = random_graph(random.Random(seed), vocab=("x", "y"))
    t = build_summary_table(g, solver)
    for u in g.vertices:
        # exact elimination keeps the entailment quantifier-free, so the solver cannot answer unknown
        try:
            summary = qe.qe(t[u])
        except qe.Blowup:
            summary = None
        for p in enumerate_paths(g, u, g.sink, 3):
            w = path_weight(g, p)
            if summary is not None:
                assert solver.entails(w, summary).is_unsat
            else:
                _assert_models_inside(solver, w, t[u])


def _assert_models_inside(solver, w, summary, samples=5):
    """Sampled models of ``w`` satisfy ``summary`` once pinned to constants."""
    names = sorted(w.free_vars() | summary.free_vars())
    seen = FALSE
    for _ in range(samples):
        r = solver.query([w, neg(seen)], names)
        if not r.is_sat:
            assert r.is_unsat
            return
        pin = conj_all(eq(var(n), r.model.get(n, 0)) for n in names)
        assert solver.query([pin, summary]).is_sat, r.model
        seen = disj(seen, pin)


def test_ex2_summary_excludes_small_results(solver, bench):
    from gpsmc.lang import load_graph

    g = load_graph(bench / "ex2.imp")
    t = build_summary_table(g, solver)
    # every path to the error leaves the loop with N <= 0 and reaches r = 2
    b = g.vertex("B")
    assert solver.entails(t[b], conj(le(var("N'"), 0), eq(var("r'"), 2))).is_unsat
    assert t.loop(b) is not None and t.loop(g.source) is None


def test_trivial_table():
    from gpsmc.formula import Vocabulary
    from gpsmc.graph import WeightedGraph

    g = WeightedGraph(Vocabulary(["x"]))
    g.add_vertex("s")
    g.add_vertex("t")
    g.sink = 1
    g.add_edge(0, 1, frame(["x"], []))
    t = trivial_table(g)
    assert t[0] is TRUE and t[1] is TRUE and t.kind == "trivial"
