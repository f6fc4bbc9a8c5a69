"""Renaming, base and normalizing abstractions of configurations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .basis import CONTEXT_PREFIX, compute_basis, normalize_w, unpurified_classes
from .cover import CoveredFormula, cover
from .euf import CongruenceState, Literal, Term, app, const, constants_of, sort_literals
from .upl import Configuration, Program, Stmt, initial_constant

DEAD = "#dead"  # marks a stored constant that has an unstored superterm


@dataclass(frozen=True)
class AbstractConfig:
    location: int
    pc: tuple[Literal, ...]
    stack: tuple[Stmt, ...] = field(default=(), compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return (self.location, tuple(l.text for l in self.pc))

    @property
    def pc_text(self) -> str:
        return " & ".join(l.text for l in self.pc) if self.pc else "true"

    @property
    def is_terminal(self) -> bool:
        return self.location == 0

    def w_constants(self) -> set[Term]:
        return {c for c in constants_of(self.pc) if is_context_constant(c)}

    def to_config(self, program: Program) -> Configuration:
        return Configuration(self.stack, program.q0(), frozenset(self.pc))

    def __repr__(self) -> str:
        return f"<{self.location}: {self.pc_text}>"


def is_context_constant(c: Term) -> bool:
    return c.is_const and c.fn.startswith(CONTEXT_PREFIX)


def rename_swap(
    phi: Iterable[Literal], a: Term, b: Term, avoid: Iterable[Term] = ()
) -> set[Literal]:
    """phi[b -> x][a -> b] for a constant x fresh in phi."""
    if a is b:
        raise ValueError("rename_swap needs two different constants")
    phi = list(phi)
    used = {c.fn for c in constants_of(phi)} | {a.fn, b.fn} | {c.fn for c in avoid}
    name, i = "x", 0
    while name in used:
        i += 1
        name = f"x_{i}"
    x = const(name)
    return {l.substitute({b: x}).substitute({a: b}) for l in phi}


def rename_to_initial(pc: Iterable[Literal], state) -> set[Literal]:
    """Apply q(v) >-> v0 for each variable with q(v) != v0, in variable order."""
    pc = set(pc)
    state = list(state)
    avoid = {c for _, c in state} | {initial_constant(v) for v, _ in state}
    for v, c in state:
        v0 = initial_constant(v)
        if c is not v0:
            pc = rename_swap(pc, c, v0, avoid)
    return pc


def alpha_r(config: Configuration) -> Configuration:
    q0 = tuple((v, initial_constant(v)) for v, _ in config.state)
    return Configuration(config.stack, q0, frozenset(rename_to_initial(config.pc, config.state)))


def _basis_beta(config: Configuration):
    V = config.stored()
    return V, compute_basis(config.pc, V, order=V)


def alpha_b(config: Configuration) -> Configuration:
    V, basis = _basis_beta(config)
    return Configuration(config.stack, config.state, frozenset(normalize_w(basis.beta, V)))


def _finish(config: Configuration, lits: Iterable[Literal]) -> AbstractConfig:
    renamed = rename_to_initial(lits, config.state)
    c0 = [initial_constant(v) for v, _ in config.state]
    pc = normalize_w(renamed, c0)
    return AbstractConfig(config.location, tuple(sort_literals(pc)), config.stack)


def alpha_brn(config: Configuration) -> AbstractConfig:
    """Basis over the stored constants, normalize, rename to q0, normalize again."""
    V, basis = _basis_beta(config)
    return _finish(config, normalize_w(basis.beta, V))


def alpha_cover(ac: AbstractConfig) -> CoveredFormula:
    return cover(ac.pc, ac.w_constants())


# --- abstraction that keeps the facts needed to judge coherence -------------

def memo_facts(basis_delta: Iterable[Literal], W: set[Term], V: set[Term]) -> set[Literal]:
    """Applications over stored constants whose value is not stored."""
    out = set()
    for l in basis_delta:
        if not l.positive:
            continue
        for w, t in ((l.lhs, l.rhs), (l.rhs, l.lhs)):
            if w in W and t.args and all(a in V for a in t.args):
                out.add(l)
    return out


def alpha_coherence(config: Configuration) -> AbstractConfig:
    """Like alpha_brn, but also keeps computed-but-unstored applications of
    stored constants and marks stored constants that have lost a superterm."""
    V = config.stored()
    Vs = set(V)
    basis = compute_basis(config.pc, V, order=V)
    lits = set(basis.beta) | memo_facts(basis.delta, set(basis.w_constants), Vs)
    state = CongruenceState.of(config.pc)
    used = {c.fn for c in constants_of(config.pc) | constants_of(lits) | Vs}
    k = 0
    have = {t for l in lits for t in l.terms()}
    for v in V:
        marker = app(DEAD, v)
        if marker in have or not unpurified_classes(state, Vs, v):
            continue
        while f"m{k}" in used:
            k += 1
        lits.add(Literal(const(f"m{k}"), marker, True))
        k += 1
    return _finish(config, normalize_w(lits, V))


def offending_superterm(state: CongruenceState, V: set[Term], a: Term) -> Term | None:
    """Least unstored superterm of `a`, written with `a` in place of its class-mates."""
    best = None
    for ms in unpurified_classes(state, V, a):
        for m in ms:
            if not m.args or m.fn == DEAD:
                continue
            t = app(m.fn, *[a if state.same(x, a) else x for x in m.args])
            if best is None or t.key < best.key:
                best = t
    return best
