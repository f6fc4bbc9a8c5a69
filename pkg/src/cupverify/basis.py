"""Depth-1 bases of literal sets, purifiers and canonical naming of fresh constants."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .euf import (
    CongruenceState,
    Literal,
    Term,
    app,
    const,
    constants_of,
    sort_literals,
)

HOLE = const("?")
CONTEXT_PREFIX = "w_Z"


@dataclass(frozen=True)
class VBasis:
    w_constants: frozenset[Term]
    beta: frozenset[Literal]
    delta: frozenset[Literal]

    def __str__(self) -> str:
        ws = ", ".join(sorted(w.text for w in self.w_constants))
        b = ", ".join(l.text for l in sort_literals(self.beta))
        d = ", ".join(l.text for l in sort_literals(self.delta))
        return f"W={{{ws}}} beta={{{b}}} delta={{{d}}}"


def _order_key(v_set, order) -> Callable[[Term], tuple]:
    if order is None:
        return lambda c: (0, c.key)
    rank = {c: i for i, c in enumerate(order)}
    return lambda c: (rank.get(c, len(rank)), c.key)


def _fresh_names(avoid: set[str]):
    i = 0
    while True:
        name = f"w{i}"
        i += 1
        if name not in avoid:
            yield const(name)


def compute_basis(
    gamma: Iterable[Literal],
    v_set: Iterable[Term],
    order: Sequence[Term] | None = None,
) -> VBasis:
    """Factor gamma through class representatives.

    Each congruence class is represented by its least member of v_set (by
    `order`, falling back to term order), or by a fresh constant when it has
    none.
    """
    gamma = list(gamma)
    V = set(v_set)
    state = CongruenceState.of(gamma)
    if state.unsat:
        raise ValueError("cannot compute a basis of an unsatisfiable set")
    vkey = _order_key(V, order)
    fresh = _fresh_names({c.fn for c in constants_of(gamma) | V})

    rep: dict[Term, Term] = {}
    W: set[Term] = set()
    beta: set[Literal] = set()
    delta: set[Literal] = set()
    for members in state.classes():
        root = state.find(members[0])
        vs = sorted((m for m in members if m.is_const and m in V), key=vkey)
        if vs:
            rep[root] = vs[0]
        else:
            w = next(fresh)
            W.add(w)
            rep[root] = w
        # beta_eq: the full set of equalities among V members
        for a, b in combinations(vs, 2):
            beta.add(Literal(a, b, True))
        # delta_eq: remaining constants
        for m in members:
            if m.is_const and m not in V:
                delta.add(Literal(rep[root], m, True))

    def r(t: Term) -> Term:
        return rep[state.find(t)]

    for s, t in state.diseq_pairs():
        lit = Literal(rep[s], rep[t], False)
        if rep[s] in V and rep[t] in V:
            beta.add(lit)
        else:
            delta.add(lit)

    for t in state.terms():
        if t.is_const:
            continue
        head = r(t)
        args = [r(a) for a in t.args]
        lit = Literal(head, app(t.fn, *args), True)
        if head in V and any(a in V for a in args):
            beta.add(lit)
        else:
            delta.add(lit)
    return VBasis(frozenset(W), frozenset(beta), frozenset(delta))


def superterm_classes(state: CongruenceState, a: Term) -> set[Term]:
    """Roots of classes that contain a strict superterm of `a` (up to congruence)."""
    if not state.has(a):
        return set()
    reach = {state.find(a)}
    strict: set[Term] = set()
    changed = True
    apps = [t for t in state.terms() if t.args]
    while changed:
        changed = False
        for t in apps:
            r = state.find(t)
            if r in strict:
                continue
            if any(state.find(x) in reach for x in t.args):
                strict.add(r)
                reach.add(r)
                changed = True
    return strict


def purifies(gamma: Iterable[Literal], v_set: Iterable[Term], a: Term) -> bool:
    V = set(v_set)
    if a not in V:
        return False
    state = gamma if isinstance(gamma, CongruenceState) else CongruenceState.of(gamma)
    return not unpurified_classes(state, V, a)


def unpurified_classes(state: CongruenceState, V: set[Term], a: Term) -> list[list[Term]]:
    """Superterm classes of `a` with no member in V, as sorted member lists."""
    out = []
    for root in superterm_classes(state, a):
        ms = state.members(root)
        if not any(m in V for m in ms):
            out.append(ms)
    return sorted(out, key=lambda ms: ms[0].key)


# --- templates and contexts -------------------------------------------------

@dataclass(frozen=True)
class Template:
    """A function symbol applied to holes (None) and fresh constants."""

    fn: str
    slots: tuple[Term | None, ...]

    def __str__(self) -> str:
        return f"{self.fn}({','.join('?' if s is None else s.text for s in self.slots)})"

    def matches(self, t: Term, W: set[Term]) -> bool:
        if t.fn != self.fn or len(t.args) != len(self.slots):
            return False
        for a, s in zip(t.args, self.slots):
            if s is None:
                if a in W:
                    return False
            elif a is not s:
                return False
        return True


def template_of(t: Term, W: set[Term]) -> Template:
    return Template(t.fn, tuple(a if a in W else None for a in t.args))


def hole_abstract(lit: Literal, W: set[Term]) -> Literal:
    return lit.substitute({w: HOLE for w in W})


def context(lits: Iterable[Literal], xi: Template, W: set[Term]) -> frozenset[Literal]:
    """Hole-abstracted literals whose application side matches the template."""
    out = set()
    for l in lits:
        if any(side.args and xi.matches(side, W) for side in (l.lhs, l.rhs)):
            out.add(hole_abstract(l, W))
    return frozenset(out)


def context_text(z: Iterable[Literal]) -> str:
    return "{" + ", ".join(l.text for l in sort_literals(z)) + "}"


def templates(lits: Iterable[Literal], W: set[Term]) -> list[Template]:
    seen: dict[str, Template] = {}
    for l in lits:
        for t in l.terms():
            if t.args and t.constants() & W:
                xi = template_of(t, W)
                seen.setdefault(str(xi), xi)
    return [seen[k] for k in sorted(seen)]


def w_contexts(beta: Iterable[Literal], v_set: Iterable[Term]) -> dict[Term, frozenset[Literal]]:
    """For each fresh constant, the union of the contexts of the templates it occurs in."""
    beta = list(beta)
    W = constants_of(beta) - set(v_set)
    out: dict[Term, frozenset[Literal]] = {}
    for xi in templates(beta, W):
        z = context(beta, xi, W)
        for w in xi.slots:
            if w is not None:
                out[w] = out.get(w, frozenset()) | z
    return out


# --- normalization ----------------------------------------------------------

def _label_terms(n: int) -> list[Term]:
    return [const(f"?{i}") for i in range(n)]


def canonical_w_labels(lits: list[Literal], W: set[Term]) -> dict[Term, int]:
    """Partition refinement over the literals each fresh constant occurs in.

    Round 0 describes a constant by its occurrences with every fresh constant
    turned into a hole; later rounds tell the other fresh constants apart by
    their previous label. Labels are ranks of sorted descriptions, so they do
    not depend on the incoming names.
    """
    occurs: dict[Term, list[Literal]] = {w: [] for w in W}
    for l in lits:
        for c in l.constants():
            if c in occurs:
                occurs[c].append(l)
    labels = {w: 0 for w in W}
    n_classes = 1
    while True:
        names = _label_terms(max(labels.values()) + 1)
        sigs = {}
        for w in W:
            mapping = {o: names[labels[o]] for o in W}
            mapping[w] = HOLE
            desc = tuple(sorted(l.substitute(mapping).text for l in occurs[w]))
            sigs[w] = (labels[w], desc)
        distinct = sorted(set(sigs.values()))
        labels = {w: distinct.index(sigs[w]) for w in W}
        if len(distinct) == n_classes:
            return labels
        n_classes = len(distinct)


def normalize_w(beta: Iterable[Literal], v_set: Iterable[Term]) -> set[Literal]:
    """Rename every constant outside v_set to a canonical context constant."""
    beta = list(beta)
    for l in beta:
        if l.depth > 1:
            raise ValueError(f"literal deeper than 1: {l.text}")
    W = constants_of(beta) - set(v_set)
    if not W:
        return set(beta)
    labels = canonical_w_labels(beta, W)
    mapping = {w: const(f"{CONTEXT_PREFIX}{labels[w] + 1}") for w in W}
    return {l.substitute(mapping) for l in beta}


def base_abstract(
    gamma: Iterable[Literal],
    v_set: Iterable[Term],
    order: Sequence[Term] | None = None,
) -> set[Literal]:
    V = list(v_set)
    return normalize_w(compute_basis(gamma, V, order).beta, V)


# --- checks used by tests and debugging ---------------------------------------

def basis_violations(gamma: Iterable[Literal], basis: VBasis, v_set: Iterable[Term]) -> list[str]:
    """Conditions (a), (c), (d), (e) checked by inspection and entailment."""
    gamma = list(gamma)
    V = set(v_set)
    W = set(basis.w_constants)
    out = []
    if W & constants_of(gamma):
        out.append("(a) fresh constants occur in gamma")
    VW = V | W
    for l in basis.beta:
        ok = False
        if l.depth == 0:
            ok = l.lhs in V and l.rhs in V
        elif l.positive and l.lhs.is_const and not l.rhs.is_const:
            args = set(l.rhs.args)
            ok = l.lhs in V and args <= VW and bool(args & V) and l.rhs.depth == 1
        if not ok:
            out.append(f"(c) beta literal has wrong shape: {l.text}")
    for l in basis.delta:
        ok = False
        if l.depth == 0 and l.positive:
            ok = (l.lhs in VW and l.rhs not in VW) or (l.rhs in VW and l.lhs not in VW)
        elif l.depth == 0:
            ok = (l.lhs in W and l.rhs in VW) or (l.rhs in W and l.lhs in VW)
        elif l.positive and l.lhs.is_const and l.rhs.depth == 1:
            args = set(l.rhs.args)
            ok = l.lhs in VW and args <= VW and (l.lhs not in V or args <= W)
        if not ok:
            out.append(f"(c) delta literal has wrong shape: {l.text}")
    st = CongruenceState.of(basis.beta | basis.delta)
    for v in V:
        for w in W:
            if st.has(v) and st.has(w) and st.same(v, w):
                out.append(f"(d) {v.text} = {w.text} derivable")
    for w1, w2 in combinations(sorted(W), 2):
        if st.has(w1) and st.has(w2) and st.same(w1, w2):
            out.append(f"(e) {w1.text} = {w2.text} derivable")
    return out
