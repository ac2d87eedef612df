import random

from hypothesis import given, settings
from hypothesis import strategies as st

from gpsmc.formula import (
    FALSE,
    TRUE,
    Term,
    compile_qf,
    compile_step,
    compose,
    conj,
    disj,
    eq,
    eval_qf,
    evaluate,
    exists,
    frame,
    identity,
    le,
    neg,
    prime,
    simplify,
    substitute,
    to_post,
    to_text,
    var,
)
from gpsmc.lang import parse_formula

from oracles import random_formula

NAMES = ["x", "y", "z"]
seeds = st.integers(0, 2**32 - 1)
envs = st.fixed_dictionaries({n: st.integers(-12, 12) for n in NAMES})


def rf(seed):
    return random_formula(random.Random(seed), NAMES)


def test_term_normalizes():
    t = Term.of({"x": 2, "y": 0}) + Term.var("x", -2) + 3
    assert t.is_const() and t.const == 3
    assert (var("x") * 3 - var("x")).coeff("x") == 2


def test_term_substitute_and_evaluate():
    t = Term.of({"x": 2, "y": -1}, 4)
    s = t.substitute({"x": var("y") + 1})
    assert s == Term.of({"y": 1}, 6)
    assert t.evaluate({"x": 3, "y": 5}) == 5


def test_smart_constructors_fold_constants():
    assert le(3, 4) is TRUE
    assert le(5, 4) is FALSE
    assert conj(TRUE, FALSE) is FALSE
    assert disj(FALSE, TRUE) is TRUE
    a = le(var("x"), 0)
    assert conj(a, a) == a
    assert eval_qf(conj(a, neg(a)), {"x": 0}) is False


@settings(max_examples=300, deadline=None)
@given(seeds, envs)
def test_negation_flips_truth(seed, env):
    f = rf(seed)
    assert eval_qf(neg(f), env) == (not eval_qf(f, env))


@settings(max_examples=300, deadline=None)
@given(seeds, envs)
def test_compiled_predicate_matches_interpreter(seed, env):
    f = rf(seed)
    assert compile_qf(f)(env) == eval_qf(f, env)


@settings(max_examples=200, deadline=None)
@given(seeds, envs)
def test_simplify_preserves_meaning(seed, env):
    f = rf(seed)
    assert eval_qf(simplify(f), env) == eval_qf(f, env)


@settings(max_examples=200, deadline=None)
@given(seeds, envs)
def test_text_round_trip(seed, env):
    f = rf(seed)
    assert eval_qf(parse_formula(to_text(f)), env) == eval_qf(f, env)


@settings(max_examples=200, deadline=None)
@given(seeds, envs, st.integers(-3, 3), st.integers(-5, 5))
def test_substitution_is_evaluation(seed, env, k, c):
    f = rf(seed)
    t = var("y").scale(k) + c
    env2 = {**env, "x": k * env["y"] + c}
    assert eval_qf(substitute(f, {"x": t}), env) == eval_qf(f, env2)


@settings(max_examples=200, deadline=None)
@given(seeds, seeds, envs)
def test_compiled_step(seed1, seed2, env):
    test, post = rf(seed1), rf(seed2)
    ups = {"x": var("x") + var("y"), "y": var("y") - 1, "z": Term.constant(7)}
    out = compile_step(test, ups, post, NAMES)(env)
    nxt = {v: t.evaluate(env) for v, t in ups.items()}
    expect = nxt if eval_qf(test, env) and eval_qf(post, nxt) else None
    assert out == expect


def test_compose_is_relational_product():
    vocab = ["x"]
    inc = eq(var(prime("x")), var("x") + 1)
    dbl = eq(var(prime("x")), var("x") * 2)
    both = compose(inc, dbl, vocab)
    for x in range(-5, 6):
        assert evaluate(both, {"x": x}, {"x": 2 * (x + 1)})
        assert not evaluate(both, {"x": x}, {"x": 2 * (x + 1) + 1})
    assert evaluate(compose(identity(vocab), inc, vocab), {"x": 3}, {"x": 4})


def test_evaluate_resolves_unit_existentials():
    f = exists(["k"], conj(eq(var("k"), var("x") + 1), eq(var(prime("x")), var("k") * 3)))
    assert evaluate(f, {"x": 1}, {"x": 6})
    assert not evaluate(f, {"x": 1}, {"x": 5})


def test_frame_and_post():
    f = frame(["x", "y"], ["x"])
    assert evaluate(f, {"x": 1, "y": 2}, {"x": 9, "y": 2})
    assert not evaluate(f, {"x": 1, "y": 2}, {"x": 1, "y": 3})
    p = to_post(le(var("x"), 0), ["x"])
    assert p.free_vars() == {"x'"}
