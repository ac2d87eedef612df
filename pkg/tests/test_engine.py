import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpsmc.engine import (
    COVERED,
    EXHAUSTED,
    PRUNED,
    SAFE,
    UNSAFE,
    Art,
    Budget,
    Checker,
    gps,
    gpslite,
    is_safe_certificate,
    validate_well_labeled,
)
from gpsmc.formula import FALSE, TRUE, Vocabulary, conj, eq, frame, ge, le, var
from gpsmc.graph import WeightedGraph, enumerate_paths
from gpsmc.lang import instrument_gas, load_graph, lower, parse
from gpsmc.lang.generate import generate
from gpsmc.summary import build_summary_table, trivial_table


def two_vertex(weight):
    g = WeightedGraph(Vocabulary(["x"]))
    g.add_vertex("s")
    g.add_vertex("t")
    g.sink = 1
    g.add_edge(0, 1, weight)
    return g


def prepared(path, solver, gas=True):
    g = load_graph(path)
    if gas:
        g = instrument_gas(g)
    return g, build_summary_table(g, solver)


def test_unreachable_sink_is_safe_immediately(solver):
    g = two_vertex(FALSE)
    v = gps(g, build_summary_table(g, solver), solver)
    assert v.kind == SAFE and v.stats.iterations == 1 and v.stats.tests == 0
    assert is_safe_certificate(v.art, build_summary_table(g, solver), solver) == []


def test_reachable_sink_gives_replaying_witness(solver):
    g = two_vertex(conj(ge(var("x"), 7), frame(["x"], [])))
    v = gps(g, trivial_table(g), solver)
    assert v.kind == UNSAFE
    assert v.witness.states[0]["x"] >= 7
    assert v.witness.replays(g, solver)
    data = json.loads(v.witness.to_json())
    assert data["path"] == [0] and len(data["states"]) == 2
    assert v.witness.to_text(g).startswith("step 0: s {x=")


def test_frontier_is_fifo_and_deduplicated():
    g = two_vertex(TRUE)
    art = Art(g)
    a, b = art.root, art.expand(art.root)[0]
    art.enqueue(a)
    art.enqueue(b)
    art.enqueue(a)
    assert [art.dequeue().id, art.dequeue().id] == [a.id, b.id]
    assert not art.frontier


def test_refine_with_true_changes_nothing(solver, bench):
    g, t = prepared(bench / "ex2.imp", solver)
    ch = Checker(g, t, solver)
    ch.run()
    before = [(n.id, n.label) for n in ch.art.nodes]
    refinements = ch.stats.refinements
    nodes = ch.art.nodes[1:]
    ch.refine(nodes, [TRUE] * len(nodes))
    assert [(n.id, n.label) for n in ch.art.nodes] == before
    assert ch.stats.refinements == refinements


@pytest.fixture(scope="module")
def ex3_proof(solver, bench):
    g, t = prepared(bench / "ex3.imp", solver)
    v = gps(g, t, solver)
    assert v.kind == SAFE
    return g, t, v


def test_ex3_proof_is_a_certificate(solver, ex3_proof):
    _, t, v = ex3_proof
    assert is_safe_certificate(v.art, t, solver) == []
    assert v.art.coverings()


def test_validator_detects_corruption(solver, ex3_proof):
    _, t, v = ex3_proof
    art = v.art
    internal = [n for n in art.nodes if n.children and n.parent is not None and n.parent.label == TRUE]
    victim = internal[0]
    saved = victim.label
    victim.label = FALSE
    try:
        assert any("consecution" in m for m in validate_well_labeled(art, t, solver))
    finally:
        victim.label = saved

    sigma, tau = art.coverings()[0]
    other = next(n for n in art.nodes if n.vertex != sigma.vertex)
    sigma.covered_by = other
    try:
        assert any("covering" in m for m in validate_well_labeled(art, t, solver))
    finally:
        sigma.covered_by = tau

    art.root.label = le(var("x"), 0)
    try:
        assert "root label is not true" in validate_well_labeled(art, t, solver)
    finally:
        art.root.label = TRUE
    assert validate_well_labeled(art, t, solver) == []


def test_complete_art_covers_every_path(ex3_proof):
    """Each path is either read by the tree (coverings as silent moves) or passes a pruned node."""
    g, _, v = ex3_proof
    art = v.art
    max_len = 6
    words = {n.id: art.paths_of(n, max_len) for n in art.nodes}
    pruned = set().union(*(words[n.id] for n in art.nodes if n.status == PRUNED))
    for dst in g.vertices:
        for p in enumerate_paths(g, g.source, dst, max_len):
            read = any(p.edges in words[n.id] for n in art.nodes if n.vertex == dst)
            cut = any(p.edges[:i] in pruned for i in range(len(p.edges) + 1))
            assert read or cut, p.edges


def test_covered_nodes_are_leaves(ex3_proof):
    _, _, v = ex3_proof
    for n in v.art.nodes:
        if n.status == COVERED:
            assert not n.children and n.covered_by is not None


def test_budget_exhaustion(solver, bench):
    g, t = prepared(bench / "ex3.imp", solver)
    v = gpslite(g, t, solver, Budget(max_frontier=5))
    assert v.kind == EXHAUSTED and v.stats.iterations == 5


def test_validate_mode_reports_nothing_on_sound_runs(solver, bench):
    for name in ("ex2.imp", "ex3.imp", "ex2.wg"):
        g, t = prepared(bench / name, solver, gas=name.endswith(".imp"))
        ch = Checker(g, t, solver, validate=True)
        assert ch.run().kind == SAFE
        assert ch.violations == []


def test_gpslite_labels_stay_true(solver, bench):
    g, t = prepared(bench / "ex2.imp", solver)
    v = gpslite(g, t, solver)
    assert v.kind == SAFE
    assert all(n.label == TRUE for n in v.art.nodes)
    assert not v.art.coverings()


def test_ungassed_loop_stops_at_step_cap(solver):
    prog = parse("vars x; x := 0; while (true) { x := x + 1; } assert(x < 0);")
    g = lower(prog).graph
    v = gps(g, trivial_table(g), solver, Budget(max_frontier=2, explore_steps=500))
    assert v.kind == EXHAUSTED and v.stats.cap_hits >= 1 and v.stats.explore_steps >= 500


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["safe", "unsafe"]), st.sampled_from(["gps", "gpslite"]))
def test_verdicts_never_contradict_enumeration(solver, seed, want, engine):
    src = generate(random.Random(seed), want)
    g = instrument_gas(lower(src.program).graph)
    t = build_summary_table(g, solver, 20)
    run = gps if engine == "gps" else gpslite
    v = run(g, t, solver, Budget(max_frontier=300, time_limit=30))
    assert (want, v.kind) not in ((SAFE, UNSAFE), (UNSAFE, SAFE))
    if v.kind == UNSAFE:
        assert v.witness.replays(g, solver)
    if v.kind == SAFE and engine == "gps":
        assert is_safe_certificate(v.art, t, solver) == []
