"""Elimination of fresh constants from depth-1 literal sets, and equivalence checks."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .euf import (
    CongruenceState,
    Literal,
    Term,
    app,
    assert_all,
    const,
    constants_of,
    entails,
    sort_literals,
)


@dataclass(frozen=True)
class HornClause:
    antecedent: frozenset[Literal]
    consequent: Literal

    def __post_init__(self):
        if not self.antecedent:
            raise ValueError("a Horn clause needs a non-empty antecedent")
        if not all(l.positive for l in self.antecedent) or not self.consequent.positive:
            raise ValueError("Horn clauses are built from equalities")

    @property
    def text(self) -> str:
        ante = " & ".join(l.text for l in sort_literals(self.antecedent))
        return f"{ante} -> {self.consequent.text}"

    @property
    def key(self) -> tuple:
        return (tuple(l.key for l in sort_literals(self.antecedent)), self.consequent.key)

    def __repr__(self) -> str:
        return self.text

    def constants(self) -> set[Term]:
        return constants_of(self.antecedent) | self.consequent.constants()

    def substitute(self, mapping) -> "HornClause":
        return HornClause(
            frozenset(l.substitute(mapping) for l in self.antecedent),
            self.consequent.substitute(mapping),
        )


@dataclass(frozen=True)
class CoveredFormula:
    literals: frozenset[Literal] = frozenset()
    horn: frozenset[HornClause] = frozenset()

    @property
    def text(self) -> str:
        parts = [l.text for l in sort_literals(self.literals)]
        parts += [f"({h.text})" for h in sorted(self.horn, key=lambda h: h.key)]
        return " & ".join(parts) if parts else "true"

    @property
    def key(self) -> tuple:
        return (
            tuple(l.key for l in sort_literals(self.literals)),
            tuple(h.key for h in sorted(self.horn, key=lambda h: h.key)),
        )

    def __repr__(self) -> str:
        return self.text

    def constants(self) -> set[Term]:
        out = constants_of(self.literals)
        for h in self.horn:
            out |= h.constants()
        return out

    @property
    def depth(self) -> int:
        ds = [l.depth for l in self.literals]
        for h in self.horn:
            ds += [l.depth for l in h.antecedent] + [h.consequent.depth]
        return max(ds, default=0)

    def substitute(self, mapping) -> "CoveredFormula":
        return CoveredFormula(
            frozenset(l.substitute(mapping) for l in self.literals),
            frozenset(h.substitute(mapping) for h in self.horn),
        )

    def conjuncts(self) -> list:
        return sort_literals(self.literals) + sorted(self.horn, key=lambda h: h.key)


def as_covered(lits: Iterable[Literal]) -> CoveredFormula:
    return CoveredFormula(frozenset(lits), frozenset())


# --- Horn reasoning ---------------------------------------------------------

def saturate(
    literals: Iterable[Literal],
    horn: Iterable[HornClause] = (),
    extra: Iterable[Literal] = (),
) -> CongruenceState:
    """Congruence closure of the literals, firing Horn clauses to a fixpoint.

    Equality antecedents that are not derivable are false in the term model
    of what was derived, so this decides entailment for such clause sets.
    """
    state = CongruenceState.of(list(literals) + list(extra))
    pending = list(horn)
    fired = True
    while fired and pending and not state.unsat:
        fired = False
        rest = []
        for h in pending:
            if all(state.same(a.lhs, a.rhs) for a in h.antecedent):
                state = assert_all(state, [h.consequent])
                fired = True
            else:
                rest.append(h)
        pending = rest
    return state


def formula_entails(phi: CoveredFormula, goal: Literal | HornClause) -> bool:
    if isinstance(goal, HornClause):
        st = saturate(phi.literals, phi.horn, goal.antecedent)
        return entails(st, goal.consequent)
    return entails(saturate(phi.literals, phi.horn), goal)


def covered_entails(phi1: CoveredFormula, phi2: CoveredFormula) -> bool:
    return all(formula_entails(phi1, g) for g in phi2.conjuncts())


def is_satisfiable(phi: CoveredFormula, extra: Iterable[Literal] = ()) -> bool:
    return not saturate(phi.literals, phi.horn, extra).unsat


def _negations(conj) -> list[list[Literal]]:
    """Ways to falsify one conjunct, each as a list of literals."""
    if isinstance(conj, HornClause):
        return [sorted(conj.antecedent, key=lambda l: l.key) + [conj.consequent.negate()]]
    return [[conj.negate()]]


def entails_disjunction(
    literals: Iterable[Literal],
    horn: Iterable[HornClause],
    disjuncts: Sequence[CoveredFormula],
) -> bool:
    """Does the conjunction entail the disjunction? Case split on which
    conjunct of each disjunct fails; entailed iff every branch is unsat."""
    literals, horn = list(literals), list(horn)

    def branch(i: int, extra: list[Literal]) -> bool:
        if saturate(literals, horn, extra).unsat:
            return True
        if i == len(disjuncts):
            return False
        cs = disjuncts[i].conjuncts()
        if not cs:
            return True  # a true disjunct cannot be falsified
        for c in cs:
            for neg in _negations(c):
                if not branch(i + 1, extra + neg):
                    return False
        return True

    return branch(0, [])


def disjunction_equivalent(ds: Sequence[CoveredFormula], phi: CoveredFormula) -> bool:
    """Logical equivalence of a disjunction of covered formulas and one formula."""
    if not all(covered_entails(d, phi) for d in ds):
        return False
    return entails_disjunction(phi.literals, phi.horn, ds)


def v_equivalent(phi1: CoveredFormula, phi2: CoveredFormula, v_set: Iterable[Term]) -> bool:
    """Both formulas range over v_set only, so V-equivalence is mutual entailment."""
    V = set(v_set)
    for phi in (phi1, phi2):
        stray = phi.constants() - V
        if stray:
            raise ValueError(f"constants outside the kept set: {sorted(c.text for c in stray)}")
    return covered_entails(phi1, phi2) and covered_entails(phi2, phi1)


# --- cover ------------------------------------------------------------------

def cover(beta: Iterable[Literal], eliminate: Iterable[Term]) -> CoveredFormula:
    """Strongest Horn-bearing formula over the remaining constants implied by beta.

    Meant for depth-1 inputs in basis shape, where eliminated constants only
    fill argument positions: two applications can then only become equal
    through equalities between kept constants at matching positions.
    """
    beta = list(beta)
    E = set(eliminate)
    if not E & constants_of(beta):
        st = CongruenceState.of(beta)
        if st.unsat:
            raise ValueError("cannot cover an unsatisfiable set")
        return CoveredFormula(frozenset(beta), frozenset())
    state = CongruenceState.of(beta)
    if state.unsat:
        raise ValueError("cannot cover an unsatisfiable set")
    K = constants_of(beta) - E

    kept_rep: dict[Term, Term] = {}  # class root -> least kept constant
    for members in state.classes():
        ks = [m for m in members if m.is_const and m in K]
        if ks:
            kept_rep[state.find(members[0])] = ks[0]

    def krep(t: Term) -> Term | None:
        return kept_rep.get(state.find(t))

    # retained depth-1 terms: applications whose arguments all have kept names
    named: dict[Term, list[Term]] = {}  # root -> retained terms in the class
    for members in state.classes():
        root = state.find(members[0])
        out = []
        if root in kept_rep:
            out.append(kept_rep[root])
        for m in members:
            if m.args and all(krep(a) is not None for a in m.args):
                t = app(m.fn, *[krep(a) for a in m.args])
                if t not in out:
                    out.append(t)
        for m in members:
            if m.is_const and m in K and m not in out:
                out.append(m)
        if out:
            named[root] = out

    literals: set[Literal] = set()
    for root, ts in named.items():
        head = ts[0]
        for t in ts[1:]:
            literals.add(Literal(head, t, True))
    heads = sorted((ts[0] for ts in named.values()), key=lambda t: t.key)
    for a, b in combinations(heads, 2):
        if entails(state, Literal(a, b, False)):
            literals.add(Literal(a, b, False))

    # Horn clauses from pairs of applications that share eliminated arguments
    apps = [t for t in state.terms() if t.args]
    clauses: dict[tuple, HornClause] = {}
    for s, t in combinations(apps, 2):
        if s.fn != t.fn or len(s.args) != len(t.args):
            continue
        rs, rt = state.find(s), state.find(t)
        if rs is rt or rs not in named or rt not in named:
            continue
        atoms = []
        shares = False
        ok = True
        for a, b in zip(s.args, t.args):
            if state.same(a, b):
                if krep(a) is None:
                    shares = True
                continue
            ka, kb = krep(a), krep(b)
            if ka is None or kb is None:
                ok = False
                break
            atoms.append(Literal(ka, kb, True))
        if not ok or not shares or not atoms:
            continue
        goal = Literal(named[rs][0], named[rt][0], True)
        base = assert_all(state, atoms)
        if base.unsat or not entails(base, goal):
            continue
        atoms = _minimize(state, atoms, goal)
        h = HornClause(frozenset(atoms), goal)
        clauses[h.key] = h

    # drop clauses subsumed by another with the same consequent
    kept = []
    for h in clauses.values():
        if not any(
            o is not h and o.consequent == h.consequent and o.antecedent < h.antecedent
            for o in clauses.values()
        ):
            kept.append(h)
    return CoveredFormula(frozenset(literals), frozenset(kept))


def _minimize(state: CongruenceState, atoms: list[Literal], goal: Literal) -> list[Literal]:
    atoms = sorted(set(atoms), key=lambda l: l.key)
    i = 0
    while i < len(atoms):
        trial = atoms[:i] + atoms[i + 1:]
        if trial and entails(assert_all(state, trial), goal):
            atoms = trial
        else:
            i += 1
    return atoms


# --- witness universe for equivalence checks --------------------------------

def witness_universe(v_set: Iterable[Term], functions: dict[str, int]) -> list[Term]:
    """Depth-<=1 terms over v_set plus one fresh constant per argument position."""
    V = sorted(set(v_set), key=lambda t: t.key)
    extra = []
    for f, n in sorted(functions.items()):
        for i in range(n):
            extra.append(const(f"z#{f}{i}"))
    base = V + extra
    out = list(base)
    for f, n in sorted(functions.items()):
        out += _apps(f, n, base)
    return out


def _apps(f: str, n: int, base: list[Term]) -> list[Term]:
    if n == 0:
        return []
    combos: list[list[Term]] = [[]]
    for _ in range(n):
        combos = [c + [b] for c in combos for b in base]
    return [app(f, *c) for c in combos]
