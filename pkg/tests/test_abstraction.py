import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from cupverify.abstraction import (
    AbstractConfig,
    alpha_b,
    alpha_brn,
    alpha_cover,
    alpha_r,
    is_context_constant,
    rename_swap,
)
from cupverify.euf import CongruenceState, Literal, app, const, constants_of, entails, parse_literals
from cupverify.upl import (
    FreshSupply,
    concrete_bounded,
    initial_config,
    parse,
    step,
)
from cupverify.explorer import main_step_failures

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
FIG1 = parse((CORPUS / "fig1.upl").read_text())


def P(text):
    return parse_literals(text)


def texts(lits):
    return sorted(l.text for l in lits)


def test_rename_swap_examples():
    a, b = const("a"), const("b")
    assert texts(rename_swap(P("a = c & b = d"), a, b)) == ["b = c", "d = x"]
    assert rename_swap(P("c = d"), a, b) == P("c = d")
    assert texts(rename_swap(P("a = b"), a, b)) == ["b = x"]
    with pytest.raises(ValueError):
        rename_swap(P("a = b"), a, a)


def test_rename_swap_picks_unused_fresh_name():
    out = rename_swap(P("a = x & b = c"), const("a"), const("b"))
    assert texts(out) == ["b = x", "c = x_1"]


def _fig1_line10_after_one_iteration():
    run = concrete_bounded(FIG1, 30)
    for c in run.configs:
        if c.stmt is not None and c.stmt.line == 10 and c.q["c"] is not const("c0"):
            return c
    raise AssertionError("no such configuration")


def test_alpha_r_examples():
    p = parse("x := t; skip")
    c = step(initial_config(p))[0]
    assert c.q["x"] is not const("x0")
    r = alpha_r(c)
    assert r.q == {"x": const("x0"), "t": const("t0")}
    assert texts(r.pc) == ["t0 = x0"]
    assert alpha_r(r) == r
    c0 = initial_config(FIG1)
    assert alpha_r(c0) == c0


def test_alpha_b_fig1_line_nine():
    c = _fig1_line10_after_one_iteration()
    b = alpha_b(c)
    q = c.q
    W = constants_of(b.pc) - set(c.stored())
    assert len(W) == 1
    (w,) = W
    want = {Literal(q["x"], app("f", q["a"], w), True), Literal(q["y"], app("f", q["b"], w), True)}
    assert want <= b.pc
    assert entails(CongruenceState.of(b.pc), Literal(q["c"], q["d"], True))
    assert b.stack == c.stack and b.state == c.state


def test_alpha_b_is_a_fixpoint_on_its_output():
    c = _fig1_line10_after_one_iteration()
    b = alpha_b(c)
    assert alpha_b(b) == b


def test_alpha_b_unary_program_has_no_fresh_constants():
    p = parse((CORPUS / "unary_loop.upl").read_text())
    for c in concrete_bounded(p, 25).configs:
        assert constants_of(alpha_b(c).pc) <= set(c.stored())


def test_alpha_brn_examples():
    a = alpha_brn(initial_config(FIG1))
    assert a.location == initial_config(FIG1).location and a.pc == ()
    c = _fig1_line10_after_one_iteration()
    assert alpha_brn(c).pc_text == "c0 = d0 & x0 = f(a0,w_Z1) & y0 = f(b0,w_Z1)"


def test_alpha_brn_ignores_fresh_name_choices():
    # one run numbers fresh constants globally, the other per configuration
    supply = FreshSupply()
    supply.counters = {"x": 40, "y": 7, "c": 3}
    c1 = c2 = initial_config(FIG1)
    for _ in range(14):
        assert alpha_brn(c1) == alpha_brn(c2)
        c1 = step(c1, supply)[0]
        c2 = step(c2)[0]


def test_alpha_cover_examples():
    c = _fig1_line10_after_one_iteration()
    assert alpha_cover(alpha_brn(c)).text == "c0 = d0 & (a0 = b0 -> x0 = y0)"
    plain = AbstractConfig(1, tuple(sorted(P("x0 = f(a0,b0)"))))
    assert alpha_cover(plain).literals == P("x0 = f(a0,b0)")
    three = AbstractConfig(1, tuple(sorted(P("u0 = f(a0,w_Z1) & v0 = f(b0,w_Z1) & s0 = f(c0,w_Z1)"))))
    assert len(alpha_cover(three).horn) == 3


def _corpus(unary=False):
    return sorted(p for p in CORPUS.glob("*.upl") if not unary or p.name.startswith("unary_"))


def _configs(path, bound=18):
    p = parse(path.read_text())
    return p, concrete_bounded(p, bound).configs


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(_corpus()), st.integers(0, 10**6))
def test_renaming_preserves_variable_facts(path, seed):
    p, cs = _configs(path)
    c = random.Random(seed).choice(cs)
    r = alpha_r(c)
    s1, s2 = CongruenceState.of(c.pc), CongruenceState.of(r.pc)
    for u, cu in c.state:
        for v, cv in c.state:
            for pos in (True, False):
                assert entails(s1, Literal(cu, cv, pos)) == entails(s2, Literal(r.q[u], r.q[v], pos))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(_corpus()), st.integers(0, 10**6))
def test_abstract_pc_is_depth_one_over_initial_and_context_constants(path, seed):
    p, cs = _configs(path)
    c = random.Random(seed).choice(cs)
    a = alpha_brn(c)
    c0 = set(p.initial_constants)
    assert all(x in c0 or is_context_constant(x) for x in constants_of(a.pc))
    assert all(l.depth <= 1 for l in a.pc)
    assert list(a.pc) == sorted(a.pc)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(_corpus()), st.integers(0, 10**6))
def test_step_commutes_with_base_abstraction(path, seed):
    p, cs = _configs(path)
    c = random.Random(seed).choice(cs)
    if path.name.startswith(("memo_", "early_", "noncoherent_")):
        return
    assert main_step_failures(c) == []
