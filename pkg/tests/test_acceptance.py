"""End-to-end acceptance checks; one PASS/FAIL line per criterion is printed in the summary."""

from __future__ import annotations

import gc
import random
import shutil
import statistics
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from gpsmc.cli import RunConfig, run, run_corpus
from gpsmc.engine import EXHAUSTED, SAFE, UNSAFE, Budget, Checker, gps, gpslite, validate_well_labeled
from gpsmc.formula import conj, divides, evaluate, gt, identity, is_state_formula, neg, to_post, var
from gpsmc.graph import enumerate_paths, path_weight
from gpsmc.lang import instrument_gas, load_graph
from gpsmc.lang.generate import generate
from gpsmc.qe import eliminate
from gpsmc.smt.primitives import check, feasible_chain
from gpsmc.summary import build_summary_table

from oracles import brute_exists, grid, np_eval, random_formula
from sequences import random_sequence

LK = [10, 100, 1000, 10000]


def crit(num, title):
    return pytest.mark.criterion(num, title)


def checked(path: Path, solver, engine=gps, gas=True, **budget):
    g = load_graph(path)
    if gas:
        g = instrument_gas(g)
    t = build_summary_table(g, solver)
    start = time.monotonic()
    v = engine(g, t, solver, Budget(**budget))
    return g, t, v, time.monotonic() - start


@crit(1, "EX-1 refuted with one test, witness N >= 1000")
def test_ex1_refutation(solver, bench, record_property):
    g, _, v, dt = checked(bench / "ex1.imp", solver)
    record_property("detail", f"{v.kind}, tests={v.stats.tests}, iterations={v.stats.iterations}, {dt:.2f}s")
    assert v.kind == UNSAFE
    assert v.witness.states[0]["N"] >= 1000
    assert v.witness.replays(g, solver)
    assert v.stats.tests == 1
    assert v.stats.iterations <= 2
    assert dt < 10


@crit(2, "L&K family: equal iterations, wall time within 3x")
def test_lock_and_key_scaling(bench, record_property):
    iters, medians = {}, {}
    for c in LK:
        times = []
        for _ in range(7):
            r = run(RunConfig(path=bench / f"lk_{c}.imp", explore_steps=50_000))
            assert r.verdict.kind == UNSAFE, c
            iters.setdefault(c, set()).add(r.verdict.stats.iterations)
            times.append(r.wall_time)
            del r
            gc.collect()
        medians[c] = statistics.median(times)
    ratio = max(medians.values()) / min(medians.values())
    record_property("detail", f"iterations={sorted(set.union(*iters.values()))}, ratio={ratio:.2f}, "
                    + ", ".join(f"{c}:{m * 1000:.0f}ms" for c, m in medians.items()))
    assert len(set.union(*iters.values())) == 1
    assert ratio <= 3.0


@crit(3, "EX-2 safe under gps and gpslite; gpslite has >= 3 dead-end Unsat results")
def test_ex2_verification(solver, bench, record_property):
    _, _, v1, dt1 = checked(bench / "ex2.imp", solver, gps)
    _, _, v2, dt2 = checked(bench / "ex2.imp", solver, gpslite)
    dead = v2.stats.deadends + v2.stats.explore_unsat
    record_property("detail", f"gps {v1.kind} {dt1:.2f}s, gpslite {v2.kind} {dt2:.2f}s, dead-end unsat={dead}")
    assert v1.kind == SAFE and v2.kind == SAFE
    assert dead >= 3
    assert dt1 < 10 and dt2 < 10


@crit(4, "EX-3 safe with covered B-loop label x > 1 & 2 | x; gpslite exhausts 200 iterations")
def test_ex3(solver, bench, record_property):
    g, t, v, dt = checked(bench / "ex3.imp", solver, gps)
    assert v.kind == SAFE
    assert validate_well_labeled(v.art, t, solver, check_pruned=True) == []
    b = g.vertex("B")
    want = conj(gt(var("x"), 1), divides(2, var("x")))
    targets = {n.covered_by for n in v.art.nodes if n.covered_by is not None}
    good = [n for n in targets if n.vertex == b and solver.entails(n.label, want).is_unsat]
    _, _, lite, dt2 = checked(bench / "ex3.imp", solver, gpslite, max_frontier=200)
    record_property("detail", f"gps {dt:.2f}s, covered B nodes with the invariant={len(good)}, gpslite {lite.kind} {dt2:.2f}s")
    assert good
    assert lite.kind == EXHAUSTED
    assert dt < 30 and dt2 < 30


@crit(5, "DOG/CAT refuted with gas; without gas the first test hits the step cap")
def test_gas_example(solver, bench, record_property):
    _, _, v, _ = checked(bench / "dogcat.imp", solver, max_frontier=500)
    assert v.kind == UNSAFE

    g = load_graph(bench / "dogcat.imp")
    t = build_summary_table(g, solver)
    first = {}

    def on_event(what, ch):
        if what == "explore" and not first:
            first.update(tests=ch.stats.tests, cap_hits=ch.stats.cap_hits, steps=ch.stats.explore_steps)

    budget = Budget(max_frontier=500, time_limit=30)
    v2 = Checker(g, t, solver, budget, on_event=on_event).run()
    record_property("detail", f"gas: {v.kind} in {v.stats.iterations} iterations; no gas: {v2.kind}, first test {first}")
    assert first["tests"] == 1 and first["cap_hits"] == 1
    assert first["steps"] == budget.explore_steps
    assert v2.kind == EXHAUSTED


def fixture_graphs(bench: Path):
    for p in sorted(bench.iterdir()):
        if p.suffix in (".imp", ".wg"):
            g = load_graph(p)
            yield p.name, g
            if p.suffix == ".imp":
                yield p.name + "+gas", instrument_gas(g)


@crit(6, "every path of length <= 5 entails its vertex summary")
def test_summary_soundness(solver, bench, record_property):
    checked_paths, bad = 0, []
    for name, g in fixture_graphs(bench):
        t = build_summary_table(g, solver)
        for u in g.vertices:
            for p in enumerate_paths(g, u, g.sink, 5):
                checked_paths += 1
                if not solver.entails(path_weight(g, p), t[u]).is_unsat:
                    bad.append((name, g.names[u], p.edges))
    record_property("detail", f"{checked_paths} paths, {len(bad)} violations")
    assert checked_paths > 0
    assert bad == []


@crit(7, "Cooper elimination matches brute force on 500 random formulas")
def test_qe_exactness(record_property):
    rng = random.Random(7)
    bad = []
    for i in range(500):
        names = ["x", "y", "z"][: rng.choice([2, 3])]
        f = random_formula(rng, names)
        free = names[1:]
        got = eliminate(["x"], f)
        assert "x" not in got.free_vars()
        want = brute_exists(f, "x", free, -8, 8, 200)
        have = np_eval(got, grid(free, -8, 8))
        if not np.array_equal(want, have):
            bad.append(i)
    record_property("detail", f"500 formulas, {len(bad)} disagreements")
    assert bad == []


@crit(8, "check returns valid interpolants or replayable states")
def test_check_contract(solver, record_property):
    rng = random.Random(8)
    vocab = ["x", "y"]
    feasible = infeasible = 0
    bad = []
    tries = 0
    while (feasible < 200 or infeasible < 200) and tries < 5000:
        tries += 1
        fs = random_sequence(rng, vocab)
        sat = feasible_chain(solver, fs, vocab, want_states=False).is_sat
        if (sat and feasible >= 200) or (not sat and infeasible >= 200):
            continue
        r = check(solver, fs, vocab)
        if sat:
            feasible += 1
            ok = r.is_sat and len(r.states) == len(fs) + 1 and all(
                evaluate(f, r.states[i], r.states[i + 1]) for i, f in enumerate(fs))
        else:
            infeasible += 1
            ok = r.is_unsat and _interpolants_ok(solver, fs, r.interpolants, vocab)
        if not ok:
            bad.append(fs)
    record_property("detail", f"{feasible} feasible, {infeasible} infeasible, {len(bad)} violations")
    assert feasible == 200 and infeasible == 200
    assert bad == []


def _interpolants_ok(solver, fs, itp, vocab) -> bool:
    if len(itp) != len(fs) + 1 or not all(is_state_formula(p) for p in itp):
        return False
    if not solver.is_sat(neg(itp[0])).is_unsat or not solver.is_sat(itp[-1]).is_unsat:
        return False
    return all(
        solver.query([itp[i], f, to_post(neg(itp[i + 1]), vocab)]).is_unsat for i, f in enumerate(fs)
    )


@crit(9, "generated programs: sound on 100 safe, all 100 unsafe refuted with replaying witnesses")
def test_generated_programs(tmp_path, record_property):
    rng = random.Random(2024)
    wrong, unrefuted, proved, bad_witness = [], [], 0, []
    for i, want in enumerate([SAFE] * 100 + [UNSAFE] * 100):
        p = tmp_path / f"g{i:03d}.imp"
        p.write_text(generate(rng, want).source)
        r = run(RunConfig(path=p, max_frontier=2000, time_budget=60, table_budget=20))
        k = r.verdict.kind
        if (want, k) in ((SAFE, UNSAFE), (UNSAFE, SAFE)):
            wrong.append(p.read_text())
        if want == UNSAFE and k != UNSAFE:
            unrefuted.append(p.read_text())
        if want == SAFE and k == SAFE:
            proved += 1
        if "witness does not replay" in r.violations:
            bad_witness.append(p.read_text())
    record_property("detail", f"wrong={len(wrong)}, unrefuted={len(unrefuted)}, "
                    f"bad witnesses={len(bad_witness)}, safe proved={proved}/100")
    assert wrong == []
    assert unrefuted == []
    assert bad_witness == []


@crit(10, "--validate-art finds no violation on the corpus")
def test_corpus_well_labeled(bench, record_property):
    rows = run_corpus(bench, RunConfig(validate_art=True, explore_steps=50_000), jobs=4)
    violations = [(r.file, v) for r in rows for v in r.violations]
    contradictions = [r.file for r in rows if r.contradicts]
    record_property("detail", f"{len(rows)} files, {len(violations)} violations, {len(contradictions)} contradictions")
    assert rows
    assert violations == []
    assert contradictions == []


@crit(11, "trivial summaries solve fewer L&K instances within 60 s each")
def test_ablation(bench, tmp_path, record_property):
    for c in LK:
        shutil.copy(bench / f"lk_{c}.imp", tmp_path)
    base = RunConfig(max_frontier=None, time_budget=60, explore_steps=50_000)
    full = run_corpus(tmp_path, base, jobs=4)
    triv = run_corpus(tmp_path, replace(base, summaries="trivial"), jobs=4)
    solved_full = sum(r.verdict == UNSAFE for r in full)
    solved_triv = sum(r.verdict == UNSAFE for r in triv)
    record_property("detail", f"full {solved_full}/4, trivial {solved_triv}/4")
    assert solved_triv < solved_full
