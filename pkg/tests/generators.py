"""Seeded random generators shared by the property suites."""
from __future__ import annotations

import random

from cupverify.basis import unpurified_classes
from cupverify.euf import CongruenceState, Literal, Term, app, const, constants_of

CONSTS = [const(n) for n in ("a", "b", "c", "d", "e", "p")]
FUNCS = {"f": 2, "g": 1}


def rand_term(rng: random.Random, depth: int, consts=CONSTS) -> Term:
    if depth == 0 or rng.random() < 0.45:
        return rng.choice(consts)
    fn = rng.choice(sorted(FUNCS))
    return app(fn, *[rand_term(rng, depth - 1, consts) for _ in range(FUNCS[fn])])


def rand_literals(rng: random.Random, n_max: int = 8, depth: int = 3, neq: float = 0.2,
                  consts=CONSTS) -> list[Literal]:
    n = rng.randint(1, n_max)
    out = []
    for _ in range(n):
        lhs = rand_term(rng, rng.randint(0, 1), consts) if rng.random() < 0.6 else rand_term(rng, depth, consts)
        rhs = rand_term(rng, depth, consts)
        out.append(Literal(lhs, rhs, rng.random() >= neq))
    return out


def rand_gamma(rng: random.Random, **kw) -> list[Literal]:
    """A satisfiable random literal set."""
    while True:
        g = rand_literals(rng, **kw)
        if not CongruenceState.of(g).unsat:
            return g


def purify(gamma, seed_v, max_size: int = 5):
    """Grow seed_v until it purifies every seed constant, or give up."""
    state = CongruenceState.of(gamma)
    V = list(dict.fromkeys(seed_v))
    changed = True
    while changed:
        changed = False
        for a in list(V):
            for ms in unpurified_classes(state, set(V), a):
                cs = [m for m in ms if m.is_const]
                if not cs:
                    return None
                V.append(cs[0])
                changed = True
                break
            if changed:
                break
    return V if len(V) <= max_size else None


def rand_v(rng: random.Random, gamma, k_max: int = 5) -> list[Term]:
    cs = sorted(constants_of(gamma), key=lambda t: t.key)
    k = rng.randint(1, min(k_max, len(cs)))
    return rng.sample(cs, k)
