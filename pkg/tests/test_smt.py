import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpsmc.formula import FALSE, TRUE, conj, divides, eq, exists, ge, le, neg, prime, to_post, var
from gpsmc.smt import Solver, SolverError, SpInterpolator, check, check_plus, parse_values, to_smt
from gpsmc.smt.primitives import feasible_chain

from oracles import grid, np_eval, random_formula

x, y = var("x"), var("y")


def test_sat_model_satisfies(solver):
    r = solver.is_sat(conj(ge(x, 3), le(x + y, 1), divides(3, y)))
    assert r.is_sat
    assert r.model["x"] >= 3 and r.model["x"] + r.model["y"] <= 1 and r.model["y"] % 3 == 0


def test_unsat_and_entailment(solver):
    assert solver.is_sat(conj(eq(x * 2, y * 2 + 1))).is_unsat
    assert solver.entails(ge(x, 3), ge(x, 2)).is_unsat
    assert solver.entails(ge(x, 2), ge(x, 3)).is_sat


def test_quantified_query(solver):
    f = exists(["k"], eq(x, var("k") * 4))
    assert solver.query([f, eq(x, 8)]).is_sat
    assert solver.query([f, eq(x, 6)]).is_unsat


def test_values_parse_negative_numbers():
    assert parse_values("((|x| 3) (y (- 12)))") == {"x": 3, "y": -12}


def test_encoding_quotes_symbols():
    assert "|x'|" in to_smt(le(var(prime("x")), 0))


def test_bad_command_raises():
    with pytest.raises(SolverError):
        Solver("definitely-not-a-solver-binary")


def test_optimize_const(solver):
    assert solver.optimize_const(conj(ge(x, 0), le(x * 3, 10)), x, hi=100) == 3
    assert solver.optimize_const(ge(x, 0), x, hi=100) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_satisfiability_matches_bounded_enumeration(seed):
    f = random_formula(random.Random(seed), ["x", "y"])
    box = conj(ge(x, -6), le(x, 6), ge(y, -6), le(y, 6))
    with Solver() as s:
        r = s.query([f, box], ["x", "y"])
    assert r.is_sat == bool(np_eval(f, grid(["x", "y"], -6, 6)).any())


def test_check_plus_midpoint(solver):
    inc = conj(eq(var("x'"), x + 1), eq(var("y'"), y))
    tgt = conj(eq(x, 5), eq(var("x'"), x))
    r = check_plus(solver, inc, tgt, ["x", "y"])
    assert r.is_sat and r.midpoint["x"] == 5
    assert check_plus(solver, inc, conj(le(x, 0), ge(x, 1)), ["x", "y"]).is_unsat


def test_check_gives_interpolants_on_infeasible(solver):
    vocab = ["x"]
    fs = [eq(var("x'"), 0), eq(var("x'"), x + 2), conj(le(x, -1), eq(var("x'"), x))]
    r = check(solver, fs, vocab)
    assert r.is_unsat
    itp = r.interpolants
    assert itp[0] == TRUE and itp[-1] == FALSE
    for i, f in enumerate(fs):
        assert solver.query([itp[i], f, to_post(neg(itp[i + 1]), vocab)]).is_unsat


def test_check_gives_states_on_feasible(solver):
    vocab = ["x"]
    fs = [eq(var("x'"), 3), eq(var("x'"), x * 2)]
    r = check(solver, fs, vocab)
    assert r.is_sat and [s["x"] for s in r.states[1:]] == [3, 6]


def test_loop_hint_yields_inductive_interpolant(solver):
    vocab = ["x"]
    body = conj(eq(var("x'"), x + 2))
    fs = [eq(var("x'"), 0), body, conj(eq(x, 5), eq(var("x'"), x))]
    r = check(solver, fs, vocab, hints=[body, body], interpolator=SpInterpolator())
    assert r.is_unsat
    # the middle interpolant should survive another loop iteration
    mid = r.interpolants[1]
    assert solver.query([mid, body, to_post(neg(mid), vocab)]).is_unsat


def test_feasible_chain_reports_states(solver):
    r = feasible_chain(solver, [eq(var("x'"), x + 1)], ["x"])
    assert r.is_sat and r.model["x@1"] == r.model["x@0"] + 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_check_contract_property(solver, seed):
    from sequences import random_sequence

    from gpsmc.formula import evaluate

    vocab = ["x", "y"]
    fs = random_sequence(random.Random(seed), vocab)
    r = check(solver, fs, vocab)
    if r.is_sat:
        assert all(evaluate(f, r.states[i], r.states[i + 1]) for i, f in enumerate(fs))
    else:
        assert r.is_unsat
        itp = r.interpolants
        assert solver.is_sat(neg(itp[0])).is_unsat and solver.is_sat(itp[-1]).is_unsat
        for i, f in enumerate(fs):
            assert solver.query([itp[i], f, to_post(neg(itp[i + 1]), vocab)]).is_unsat
