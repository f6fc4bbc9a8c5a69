"""Abstract transition systems: exploration, reachability, invariants, coherence."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Callable

from .abstraction import (
    AbstractConfig,
    alpha_b,
    alpha_brn,
    alpha_coherence,
    alpha_cover,
    offending_superterm,
)
from .basis import unpurified_classes
from .cover import CoveredFormula, HornClause, covered_entails, entails_disjunction
from .euf import CongruenceState, Literal, Term, app, entails
from .upl import (
    EXIT,
    Assume,
    AssignFn,
    Configuration,
    Program,
    concrete_bounded,
    initial_config,
    initial_constant,
    settle,
    step,
)


class BudgetExceeded(Exception):
    def __init__(self, msg: str, ts: "AbstractTS | None" = None):
        super().__init__(msg)
        self.ts = ts


@dataclass
class Limits:
    max_nodes: int = 100_000
    max_steps: int = 1_000_000
    jobs: int = 1

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_steps <= 0 or self.jobs <= 0:
            raise ValueError("budgets must be positive")


# --- JSON encodings -----------------------------------------------------------

def term_json(t: Term):
    if t.is_const:
        return t.fn
    return [t.fn] + [term_json(a) for a in t.args]


def literal_json(l: Literal) -> dict:
    return {"op": "=" if l.positive else "!=", "lhs": term_json(l.lhs), "rhs": term_json(l.rhs)}


def horn_json(h: HornClause) -> dict:
    return {"if": [literal_json(l) for l in sorted(h.antecedent)], "then": literal_json(h.consequent)}


def formula_json(phi: CoveredFormula) -> dict:
    return {
        "literals": [literal_json(l) for l in sorted(phi.literals)],
        "horn": [horn_json(h) for h in sorted(phi.horn, key=lambda h: h.key)],
        "text": phi.text,
    }


# --- transition system --------------------------------------------------------

@dataclass
class AbstractTS:
    program: Program
    nodes: list[AbstractConfig] = field(default_factory=list)
    index: dict[tuple, int] = field(default_factory=dict)
    parent: dict[int, int | None] = field(default_factory=dict)
    edges: set[tuple[int, int]] = field(default_factory=set)
    steps: int = 0
    complete: bool = True
    stopped: bool = False
    initial: int = 0

    def _add(self, a: AbstractConfig, parent: int | None) -> int:
        i = len(self.nodes)
        self.nodes.append(a)
        self.index[a.key] = i
        self.parent[i] = parent
        return i

    def successors(self, i: int) -> list[int]:
        return sorted(j for a, j in self.edges if a == i)

    def terminals(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.is_terminal]

    def trace_to(self, i: int) -> list[AbstractConfig]:
        path = []
        cur: int | None = i
        while cur is not None:
            path.append(self.nodes[cur])
            cur = self.parent[cur]
        return path[::-1]

    def stats(self) -> dict:
        return {
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "steps": self.steps,
            "locations": len({n.location for n in self.nodes}),
            "complete": self.complete,
        }

    def node_json(self, i: int) -> dict:
        n = self.nodes[i]
        return {
            "id": i,
            "location": n.location,
            "label": self.program.location_label(n.location),
            "pc": [literal_json(l) for l in n.pc],
            "terminal": n.is_terminal,
        }

    def to_json(self) -> dict:
        return {
            "initial": self.initial,
            "nodes": [self.node_json(i) for i in range(len(self.nodes))],
            "edges": [list(e) for e in sorted(self.edges)],
            "stats": self.stats(),
        }

    def to_dot(self) -> str:
        lines = ["digraph ts {", "  node [shape=box];"]
        for i, n in enumerate(self.nodes):
            label = f"{self.program.location_label(n.location)}\\n{n.pc_text}"
            label = label.replace('"', '\\"')
            shape = ", peripheries=2" if n.is_terminal else ""
            lines.append(f'  n{i} [label="{label}"{shape}];')
        for a, b in sorted(self.edges):
            lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


Visit = Callable[[AbstractTS, int], bool]


def explore(
    program: Program,
    limits: Limits | None = None,
    abstraction: Callable[[Configuration], AbstractConfig] = alpha_brn,
    visit: Visit | None = None,
) -> AbstractTS:
    """Breadth-first fixpoint of the abstract successor relation.

    With several jobs, successors of a whole layer are computed in parallel
    and merged in layer order, so node numbering matches the sequential run.
    A `visit` hook returning True stops the search at that node.
    """
    limits = limits or Limits()
    ts = AbstractTS(program)
    ts._add(abstraction(initial_config(program)), None)

    def expand(i: int) -> list[AbstractConfig]:
        return [abstraction(c) for c in step(ts.nodes[i].to_config(program))]

    pool = ThreadPoolExecutor(limits.jobs) if limits.jobs > 1 else None
    try:
        frontier = [0]
        while frontier:
            batch = list(pool.map(expand, frontier)) if pool else None
            nxt = []
            for k, i in enumerate(frontier):
                if visit is not None and visit(ts, i):
                    ts.stopped = True
                    return ts
                for a in batch[k] if batch is not None else expand(i):
                    ts.steps += 1
                    if ts.steps > limits.max_steps:
                        ts.complete = False
                        return ts
                    j = ts.index.get(a.key)
                    if j is None:
                        if len(ts.nodes) >= limits.max_nodes:
                            ts.complete = False
                            return ts
                        j = ts._add(a, i)
                        nxt.append(j)
                    ts.edges.add((i, j))
            frontier = nxt
    finally:
        if pool:
            pool.shutdown()
    return ts


# --- invariants -----------------------------------------------------------------

@dataclass
class AssertionMap:
    program: Program
    table: dict[int, list[CoveredFormula]]

    def at(self, loc: int) -> list[CoveredFormula]:
        return self.table.get(loc, [])

    def text(self, loc: int) -> str:
        ds = self.at(loc)
        if not ds:
            return "false"
        if len(ds) == 1:
            return ds[0].text
        return " | ".join(f"[{d.text}]" for d in ds)

    def to_json(self) -> list[dict]:
        out = []
        for loc in self.program.locations():
            out.append({
                "location": loc,
                "label": self.program.location_label(loc),
                "line": self.program.nodes[loc].line if loc != EXIT else None,
                "disjuncts": [formula_json(d) for d in self.at(loc)],
            })
        return out


def _prune(ds: list[CoveredFormula]) -> list[CoveredFormula]:
    """Drop disjuncts that entail another kept disjunct."""
    uniq = list({d.key: d for d in ds}.values())
    uniq.sort(key=lambda d: (len(d.conjuncts()), d.key))
    kept: list[CoveredFormula] = []
    for d in uniq:
        if not any(covered_entails(d, k) for k in kept):
            kept.append(d)
    return kept


def invariants(ts: AbstractTS, check: bool = True) -> AssertionMap:
    if not ts.complete or ts.stopped:
        raise BudgetExceeded("invariants need a complete transition system", ts)
    table: dict[int, list[CoveredFormula]] = {loc: [] for loc in ts.program.locations()}
    for n in ts.nodes:
        table[n.location].append(alpha_cover(n))
    amap = AssertionMap(ts.program, {loc: _prune(ds) for loc, ds in table.items()})
    if check:
        bad = inductive_failures(amap)
        if bad:
            raise AssertionError("assertion map is not inductive: " + "; ".join(bad))
    return amap


def inductive_failures(amap: AssertionMap) -> list[str]:
    """Check that the initial configuration satisfies its assertion and that
    every step from a state satisfying a disjunct lands in the successor's
    assertion, read over the new stored constants."""
    prog = amap.program
    out = []
    init = initial_config(prog)
    if not entails_disjunction([], [], amap.at(init.location)):
        out.append(f"initial location {init.location} not covered")
    for loc in prog.locations():
        if loc == EXIT:
            continue
        node_stack = _stack_at(prog, loc)
        if node_stack is None:
            continue
        for d in amap.at(loc):
            cfg = Configuration(node_stack, prog.q0(), d.literals)
            for succ in step(cfg):
                new = list(succ.pc - d.literals)
                lits = list(d.literals) + new
                rename = {initial_constant(v): c for v, c in succ.state}
                targets = [t.substitute(rename) for t in amap.at(succ.location)]
                if not entails_disjunction(lits, d.horn, targets):
                    out.append(f"step from {prog.location_label(loc)} under [{d.text}] "
                               f"leaves {prog.location_label(succ.location)}")
    return out


def _stack_at(prog: Program, loc: int):
    """A continuation stack for a location, found by walking the program."""
    if not hasattr(prog, "_stacks"):
        stacks: dict[int, tuple] = {}
        seen = set()
        todo = [initial_config(prog)]
        # locations determine their stacks, so a stack-only search suffices
        while todo:
            c = todo.pop()
            if c.location in seen:
                continue
            seen.add(c.location)
            stacks[c.location] = c.stack
            todo.extend(_structural_succs(c))
        prog._stacks = stacks
    return prog._stacks.get(loc)


def _structural_succs(c: Configuration) -> list[Configuration]:
    # assumes are taken unconditionally here: only the control flow matters
    if isinstance(c.stmt, Assume):
        return [Configuration(settle(c.stack[1:]), c.state, c.pc)]
    return step(c)


# --- coherence --------------------------------------------------------------------

@dataclass
class CoherenceReport:
    status: str  # coherent | violation | unknown
    kind: str | None = None  # memoizing | early-assume
    location: int | None = None
    label: str | None = None
    line: int | None = None
    term: Term | None = None
    trace: list[AbstractConfig] = field(default_factory=list)

    @property
    def coherent(self) -> bool:
        return self.status == "coherent"

    def text(self) -> str:
        if self.status != "violation":
            return f"{self.status} (checked on the abstraction)"
        t = self.term.text if self.term is not None else "?"
        return f"violation: {self.kind} at {self.label} on {t}"

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "kind": self.kind,
            "location": self.location,
            "label": self.label,
            "line": self.line,
            "term": term_json(self.term) if self.term is not None else None,
            "trace": [{"location": a.location, "pc": [literal_json(l) for l in a.pc]}
                      for a in self.trace],
            "checked_on": "abstraction",
        }


def coherence_violation(config: Configuration) -> tuple[str, Term] | None:
    """Check the two coherence conditions at the statement about to run."""
    s = config.stmt
    q = config.q
    V = set(config.stored())
    state = CongruenceState.of(config.pc)
    if isinstance(s, AssignFn):
        t = app(s.fn, *[q[a] for a in s.args])
        st = CongruenceState.of(list(config.pc) + [Literal(t, t, True)])
        ms = st.members(t)
        computed = state.has(t) or len(ms) > 1
        if computed and not any(m in V for m in ms):
            return "memoizing", t
    if isinstance(s, Assume) and s.cond.positive:
        for a in (q[s.cond.lhs], q[s.cond.rhs]):
            bad = unpurified_classes(state, V, a)
            if bad:
                t = offending_superterm(state, V, a)
                return "early-assume", t if t is not None else bad[0][0]
    return None


def check_coherence(program: Program, limits: Limits | None = None) -> CoherenceReport:
    found: list[tuple[int, str, Term]] = []

    def visit(ts: AbstractTS, i: int) -> bool:
        v = coherence_violation(ts.nodes[i].to_config(program))
        if v:
            found.append((i, *v))
            return True
        return False

    ts = explore(program, limits, alpha_coherence, visit)
    if found:
        i, kind, term = found[0]
        loc = ts.nodes[i].location
        return CoherenceReport(
            "violation", kind, loc, program.location_label(loc),
            program.nodes[loc].line, term, ts.trace_to(i),
        )
    if not ts.complete:
        return CoherenceReport("unknown")
    return CoherenceReport("coherent")


# --- reachability -------------------------------------------------------------------

@dataclass
class Verdict:
    reachable: bool
    trace: list[AbstractConfig]
    assertion_map: AssertionMap | None
    coherence: CoherenceReport
    ts: AbstractTS

    @property
    def sound_only(self) -> bool:
        return not self.coherence.coherent

    @property
    def name(self) -> str:
        return "reachable" if self.reachable else "unreachable"


def decide_reachability(program: Program, limits: Limits | None = None) -> Verdict:
    ts = explore(program, limits)
    coherence = check_coherence(program, limits)
    term = ts.terminals()
    if term:
        return Verdict(True, ts.trace_to(term[0]), None, coherence, ts)
    if not ts.complete:
        raise BudgetExceeded("exploration budget exhausted before a fixpoint", ts)
    return Verdict(False, [], invariants(ts), coherence, ts)


# --- step-wise agreement between concrete and abstract systems ----------------------

def main_step_failures(config: Configuration) -> list[str]:
    """Successors of a configuration and of its base abstraction agree, both in
    number and after abstraction."""
    out = []
    cs = step(config)
    abs_cfg = alpha_b(config)
    bs = step(abs_cfg)
    if len(cs) != len(bs):
        out.append(f"enabledness differs at location {config.location}: {len(cs)} vs {len(bs)}")
        return out
    for c, b in zip(cs, bs):
        ac, ab = alpha_brn(c), alpha_brn(b)
        if ac.key != ab.key:
            out.append(f"abstraction differs after location {config.location}: {ac!r} vs {ab!r}")
    return out


@dataclass
class Mismatch:
    clause: str
    detail: str


@dataclass
class BisimReport:
    configs: int
    edges: int
    mismatches: list[Mismatch]
    partial: bool
    nodes_hit: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {
            "configs": self.configs,
            "edges": self.edges,
            "nodes_hit": self.nodes_hit,
            "partial": self.partial,
            "mismatches": [{"clause": m.clause, "detail": m.detail} for m in self.mismatches],
        }


def _var_facts(pc, state) -> set[tuple[str, str, bool]]:
    st = CongruenceState.of(pc)
    out = set()
    for i, (u, cu) in enumerate(state):
        for v, cv in state[i + 1:]:
            for pos in (True, False):
                if entails(st, Literal(cu, cv, pos)):
                    out.add((u, v, pos))
    return out


def bisim_validate(
    program: Program,
    step_bound: int,
    limits: Limits | None = None,
    max_configs: int = 200_000,
) -> BisimReport:
    ts = explore(program, limits)
    if not ts.complete:
        raise BudgetExceeded("exploration budget exhausted before a fixpoint", ts)
    run = concrete_bounded(program, step_bound, max_configs)
    ids: list[int | None] = []
    bad: list[Mismatch] = []
    for c in run.configs:
        a = alpha_brn(c)
        j = ts.index.get(a.key)
        ids.append(j)
        if j is None:
            bad.append(Mismatch("i", f"abstraction of a concrete configuration is not a node: {a!r}"))
    succ: dict[int, set[int]] = {}
    for i, j in run.edges:
        succ.setdefault(i, set()).add(j)
        if ids[i] is not None and ids[j] is not None and (ids[i], ids[j]) not in ts.edges:
            bad.append(Mismatch("i", f"concrete step {ts.nodes[ids[i]]!r} -> {ts.nodes[ids[j]]!r} has no abstract edge"))
    # a truncated run stops inside the last parent it was expanding
    cutoff = run.edges[-1][0] if run.partial and run.edges else len(run.configs)
    for i, d in enumerate(run.depth):
        if d >= step_bound or i >= cutoff or ids[i] is None:
            continue
        got = {ids[j] for j in succ.get(i, ())}
        want = set(ts.successors(ids[i]))
        for j in sorted(want - got):
            bad.append(Mismatch("ii", f"abstract edge {ts.nodes[ids[i]]!r} -> {ts.nodes[j]!r} unmatched"))
    for i, c in enumerate(run.configs):
        if ids[i] is None:
            continue
        a = ts.nodes[ids[i]]
        concrete = _var_facts(c.pc, c.state)
        abstract = _var_facts(a.pc, program.q0())
        if concrete != abstract:
            bad.append(Mismatch("iii", f"variable facts differ at {a!r}: "
                                       f"{sorted(concrete ^ abstract)}"))
    hit = len({j for j in ids if j is not None})
    return BisimReport(len(run.configs), len(run.edges), bad, run.partial, hit)


# --- 1-CUP counting bound -----------------------------------------------------------

def one_cup_bound(program: Program) -> int:
    """locations x subsets of depth-1 literals over the initial constants."""
    n = len(program.variables)
    terms = n + sum(n ** k for k in program.functions.values())
    lits = 2 * comb(terms, 2)
    return len(program.locations()) * 2 ** lits
