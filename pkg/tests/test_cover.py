import random
from itertools import chain, combinations

import pytest
from hypothesis import given, settings, strategies as st

from cupverify.basis import base_abstract
from cupverify.cover import (
    CoveredFormula,
    HornClause,
    as_covered,
    cover,
    disjunction_equivalent,
    formula_entails,
    is_satisfiable,
    v_equivalent,
    witness_universe,
)
from cupverify.euf import CongruenceState, Literal, const, constants_of, entails, parse_literals

from generators import FUNCS, rand_gamma, rand_v


def P(text):
    return parse_literals(text)


def C(names):
    return [const(n) for n in names.split()]


def H(ante, cons):
    (c,) = P(cons)
    return HornClause(frozenset(P(ante)), c)


def test_cover_shared_argument():
    beta = P("x0 = f(a0,w) & y0 = f(b0,w) & c0 = d0")
    phi = cover(beta, C("w"))
    assert phi.literals == P("c0 = d0")
    assert phi.horn == {H("a0 = b0", "x0 = y0")}
    assert phi.text == "c0 = d0 & (a0 = b0 -> x0 = y0)"


def test_cover_without_eliminated_constants_is_identity():
    beta = P("x = f(a,b) & a != b")
    assert cover(beta, C("w")) == CoveredFormula(frozenset(beta), frozenset())


def test_cover_three_way_sharing():
    phi = cover(P("u = f(a,w) & v = f(b,w) & s = f(c,w)"), C("w"))
    assert phi.horn == {H("a = b", "u = v"), H("a = c", "s = u"), H("b = c", "s = v")}


def test_three_way_clauses_match_subset_enumeration():
    # minimal antecedents over argument equalities, found by brute force
    beta = P("u = f(a,w) & v = f(b,w) & s = f(c,w)")
    heads = C("u v s")
    atoms = [Literal(x, y, True) for x, y in combinations(C("a b c"), 2)]
    found = set()
    for h1, h2 in combinations(heads, 2):
        goal = Literal(h1, h2, True)
        subsets = chain.from_iterable(combinations(atoms, k) for k in (1, 2, 3))
        minimal = []
        for sub in subsets:
            # skip antecedents that already imply a smaller one
            sub_state = CongruenceState.of(sub)
            if any(all(entails(sub_state, l) for l in m) for m in minimal):
                continue
            if entails(CongruenceState.of(list(beta) + list(sub)), goal):
                minimal.append(sub)
        found |= {HornClause(frozenset(m), goal) for m in minimal}
    assert cover(beta, C("w")).horn == found


def test_cover_rejects_unsat():
    with pytest.raises(ValueError):
        cover(P("x = f(a,w) & x != f(a,w)"), C("w"))


def test_v_equivalence_examples():
    V = C("x1 y1 p0 q0")
    phi1 = P("x1 = f(p0,x0) & y1 = f(q0,y0) & x0 = y0")
    phi2 = P("x1 = f(p0,wbar) & y1 = f(q0,wbar)")
    phi3 = P("x1 = f(p0,x0) & y1 = f(q0,y0)")
    c1 = cover(phi1, C("x0 y0"))
    c2 = cover(phi2, C("wbar"))
    c3 = cover(phi3, C("x0 y0"))
    assert v_equivalent(c1, c1, V)
    assert v_equivalent(c1, c2, V)
    assert not v_equivalent(c1, c3, V)


def test_v_equivalent_rejects_stray_constants():
    with pytest.raises(ValueError):
        v_equivalent(as_covered(P("a = b")), as_covered(P("a = z")), C("a b"))


def test_disjunction_equivalence_by_case_split():
    d1 = as_covered(P("a = b"))
    d2 = as_covered(P("a != b"))
    assert disjunction_equivalent([d1, d2], CoveredFormula())
    assert not disjunction_equivalent([d1], CoveredFormula())
    assert disjunction_equivalent([as_covered(P("a = b & c = d")), as_covered(P("a = b"))], as_covered(P("a = b")))


def _beta(seed):
    rng = random.Random(seed)
    g = rand_gamma(rng, n_max=6, depth=2)
    V = rand_v(rng, g, 4)
    beta = base_abstract(g, V)
    return beta, set(V), constants_of(beta) - set(V)


def _probes(V, rng, n=25):
    U = witness_universe(V, FUNCS)
    out = []
    for _ in range(n):
        k = rng.randint(1, 2)
        out.append([Literal(rng.choice(U), rng.choice(U), rng.random() < 0.6) for _ in range(k)])
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_cover_is_sound_and_depth_one(seed):
    beta, V, W = _beta(seed)
    phi = cover(beta, W)
    assert phi.constants() <= V
    assert phi.depth <= 1
    base = as_covered(beta)
    for g in phi.conjuncts():
        assert formula_entails(base, g)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_horn_antecedents_are_minimal(seed):
    beta, V, W = _beta(seed)
    phi = cover(beta, W)
    for h in phi.horn:
        for drop in h.antecedent:
            rest = [l for l in h.antecedent if l is not drop]
            assert not entails(CongruenceState.of(list(beta) + rest), h.consequent)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_cover_preserves_unsat_of_probes(seed):
    beta, V, W = _beta(seed)
    phi = cover(beta, W)
    rng = random.Random(seed)
    for psi in _probes(V, rng):
        assert CongruenceState.of(list(beta) + psi).unsat == (not is_satisfiable(phi, psi))
