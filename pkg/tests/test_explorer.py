from pathlib import Path

import pytest

from cupverify.cover import as_covered, v_equivalent
from cupverify.euf import parse_literals
from cupverify.explorer import (
    BudgetExceeded,
    Limits,
    bisim_validate,
    check_coherence,
    decide_reachability,
    explore,
    inductive_failures,
    invariants,
    one_cup_bound,
)
from cupverify.upl import EXIT, Assume, parse

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def load(name):
    return parse((CORPUS / name).read_text())


def loc_of(prog, line, kind):
    (s,) = [s for s in prog.statements_at_line(line) if isinstance(s, kind)]
    return s.loc


def test_skip_explores_to_one_node():
    ts = explore(parse("skip"))
    assert len(ts.nodes) == 1 and not ts.edges
    assert ts.nodes[0].is_terminal


def test_fig1_loop_reaches_fixpoint():
    p = load("fig1.upl")
    ts = explore(p)
    assert ts.complete
    amap = invariants(ts)
    while_loc = p.statements_at_line(3)[0].loc
    (d,) = amap.at(while_loc)
    assert v_equivalent(d, as_covered(parse_literals("x0 = y0")), p.initial_constants)


def test_one_cup_node_count_respects_bound():
    p = parse("x := g(y); assume(x != z); y := g(x)")
    ts = explore(p)
    assert len(ts.nodes) <= one_cup_bound(p)


def test_reachability_examples():
    assert decide_reachability(load("fig1.upl")).name == "unreachable"
    v = decide_reachability(parse("assume(x == y)"))
    assert v.reachable and len(v.trace) == 2 and v.trace[-1].is_terminal
    v = decide_reachability(parse("assume(x == y); assume(x != y)"))
    assert not v.reachable and v.assertion_map.at(EXIT) == []


def test_trace_is_an_edge_path():
    v = decide_reachability(load("reachable_exit.upl"))
    ts = v.ts
    ids = [ts.index[a.key] for a in v.trace]
    assert ids[0] == ts.initial
    assert all((a, b) in ts.edges for a, b in zip(ids, ids[1:]))


def test_fig1_invariants_at_named_lines():
    p = load("fig1.upl")
    amap = invariants(explore(p))
    C0 = p.initial_constants
    (d9,) = amap.at(loc_of(p, 10, Assume))
    assert d9.text == "c0 = d0 & (a0 = b0 -> x0 = y0)"
    (d3,) = amap.at(p.statements_at_line(3)[0].loc)
    assert v_equivalent(d3, as_covered(parse_literals("x0 = y0")), C0)
    assert amap.at(EXIT) == []
    assert inductive_failures(amap) == []


def test_wrong_assertion_map_is_caught():
    p = load("fig1.upl")
    amap = invariants(explore(p))
    # dropping x0 = y0 before the final assume lets the exit through
    amap.table[loc_of(p, 11, Assume)] = [as_covered(parse_literals("a0 = b0 & c0 = d0"))]
    bad = inductive_failures(amap)
    assert len(bad) == 1 and "leaves exit" in bad[0]


def test_invariants_need_a_complete_system():
    ts = explore(load("fig1.upl"), Limits(max_nodes=5))
    assert not ts.complete
    with pytest.raises(BudgetExceeded):
        invariants(ts)
    with pytest.raises(BudgetExceeded):
        decide_reachability(load("fig1.upl"), Limits(max_steps=3))


def test_coherence_examples():
    assert check_coherence(load("fig1.upl")).coherent
    p = parse("y := f(x); y := x; z := f(x)")
    r = check_coherence(p)
    assert r.kind == "memoizing" and r.term.text == "f(x0)"
    assert p.nodes[r.location].target == "z"
    p = parse("a := f(x); a := x; assume(x == y)")
    r = check_coherence(p)
    assert r.kind == "early-assume" and r.term.text == "f(x0)"
    assert isinstance(p.nodes[r.location], Assume)
    assert r.trace[-1].location == r.location


def test_coherence_budget_gives_unknown():
    assert check_coherence(load("fig1.upl"), Limits(max_nodes=3)).status == "unknown"


def test_noncoherent_verdict_is_sound_only():
    v = decide_reachability(load("memo_violation.upl"))
    assert v.sound_only


def test_bisim_examples():
    assert bisim_validate(parse("skip"), 10).ok
    assert bisim_validate(load("fig1.upl"), 40).ok


def test_bisim_reports_failing_edge_of_noncoherent_program():
    rep = bisim_validate(load("noncoherent_lost_superterm.upl"), 40)
    assert any(m.clause == "ii" for m in rep.mismatches)


def test_parallel_exploration_matches_sequential():
    p = load("loop_branch.upl")
    a = explore(p)
    b = explore(p, Limits(jobs=4))
    assert a.to_json() == b.to_json()


def test_dot_node_count_matches_json():
    ts = explore(load("fig1.upl"))
    dot = ts.to_dot()
    assert dot.count("[label=") == ts.to_json()["stats"]["nodes"]
