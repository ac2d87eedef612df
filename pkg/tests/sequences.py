"""Random transition-formula sequences over a small vocabulary."""

from __future__ import annotations

import random

from gpsmc.formula import Formula, Term, conj, divides, eq, frame, le, ne, prime


def random_step(rng: random.Random, vocab: list[str]) -> Formula:
    r = rng.random()
    x = rng.choice(vocab)
    if r < 0.45:
        t = Term.of({v: rng.randint(-2, 2) for v in vocab}, rng.randint(-3, 3))
        if rng.random() < 0.5:
            t = Term.var(x) + rng.randint(-3, 3)
        return conj(eq(Term.var(prime(x)), t), frame(vocab, [x]))
    if r < 0.55:
        return frame(vocab, [x])  # havoc x
    g = Term.of({v: rng.randint(-3, 3) for v in vocab}, rng.randint(-6, 6))
    k = rng.random()
    atom = le(g, 0) if k < 0.6 else eq(g, 0) if k < 0.75 else ne(g, 0) if k < 0.85 else divides(rng.randint(2, 3), g)
    return conj(atom, frame(vocab, []))


def random_sequence(rng: random.Random, vocab: list[str]) -> list[Formula]:
    return [random_step(rng, vocab) for _ in range(rng.randint(1, 6))]
