import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpsmc import qe
from gpsmc.formula import conj, divides, eq, exists, is_quantifier_free, le, var

from oracles import brute_exists, grid, np_eval, random_formula


def agree(f, got, free, lo=-6, hi=6):
    want = brute_exists(f, "x", free, lo, hi, 150)
    have = np_eval(got, grid(free, lo, hi))
    return np.array_equal(want, have)


def test_even_witness_needs_divisibility():
    f = eq(var("y"), var("x") * 2)
    got = qe.eliminate(["x"], f)
    assert agree(f, got, ["y"])
    assert got == divides(2, var("y"))


def test_bounds_combine():
    f = conj(le(var("y"), var("x") * 3), le(var("x") * 3, var("z")))
    assert agree(f, qe.eliminate(["x"], f), ["y", "z"])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exact_elimination_matches_brute_force(seed):
    rng = random.Random(seed)
    f = random_formula(rng, ["x", "y", "z"])
    got = qe.eliminate(["x"], f)
    assert is_quantifier_free(got) and "x" not in got.free_vars()
    assert agree(f, got, ["y", "z"])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_over_approximation_contains_exact(seed):
    f = random_formula(random.Random(seed), ["x", "y"])
    over = qe.eliminate(["x"], f, qe.OverApprox)
    want = brute_exists(f, "x", ["y"], -6, 6, 150)
    have = np_eval(over, grid(["y"], -6, 6))
    assert not (want & ~have).any()


def test_project_handles_nested_existentials():
    inner = exists(["k"], conj(eq(var("x"), var("k") * 2), le(var("k"), var("y"))))
    got = qe.qe(exists(["x"], conj(inner, le(var("z"), var("x")))))
    assert is_quantifier_free(got)
    pts = grid(["y", "z"], -5, 5)
    # exists even x with z <= x <= 2y
    want = np.array([any(z <= x <= 2 * y and x % 2 == 0 for x in range(-20, 21)) for y, z in zip(pts["y"], pts["z"])])
    assert np.array_equal(np_eval(got, pts), want)


def test_blowup_is_reported():
    rng = random.Random(3)
    f = conj(*[random_formula(rng, ["x", "y", "z"], depth=2) for _ in range(6)])
    with pytest.raises(qe.Blowup):
        qe.eliminate(["x", "y"], f, qe.Exact, cap=5)
    assert is_quantifier_free(qe.project_safe(["x", "y"], f, cap=5))
