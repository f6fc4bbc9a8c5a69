"""Ground EUF terms, literals and congruence closure."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping


class Term:
    """Interned ground term. Structurally equal terms are the same object."""

    __slots__ = ("fn", "args", "uid", "depth", "text", "key")

    fn: str
    args: tuple["Term", ...]
    uid: int
    depth: int
    text: str
    key: tuple

    def __repr__(self) -> str:
        return self.text

    def __lt__(self, other: "Term") -> bool:
        return self.key < other.key

    @property
    def is_const(self) -> bool:
        return not self.args

    def subterms(self) -> Iterable["Term"]:
        """Post-order traversal, including self."""
        for a in self.args:
            yield from a.subterms()
        yield self

    def constants(self) -> set["Term"]:
        return {t for t in self.subterms() if t.is_const}

    def contains(self, sub: "Term") -> bool:
        if self is sub:
            return True
        return any(a.contains(sub) for a in self.args)


_TABLE: dict[tuple, Term] = {}


def _mk(fn: str, args: tuple[Term, ...]) -> Term:
    k = (fn, tuple(a.uid for a in args))
    t = _TABLE.get(k)
    if t is not None:
        return t
    t = object.__new__(Term)
    t.fn = fn
    t.args = args
    t.uid = len(_TABLE)
    t.depth = 1 + max(a.depth for a in args) if args else 0
    t.text = fn if not args else f"{fn}({','.join(a.text for a in args)})"
    # constants sort before applications; ties broken by text
    t.key = (t.depth, t.text)
    _TABLE[k] = t
    return t


def const(name: str) -> Term:
    return _mk(name, ())


def app(fn: str, *args: Term | str) -> Term:
    if not args:
        raise ValueError(f"function {fn} needs at least one argument")
    return _mk(fn, tuple(a if isinstance(a, Term) else const(a) for a in args))


def as_term(x: Term | str) -> Term:
    return x if isinstance(x, Term) else parse_term(x)


def substitute(t: Term, mapping: Mapping[Term, Term]) -> Term:
    """Replace every occurrence of a mapped subterm (outermost first)."""
    hit = mapping.get(t)
    if hit is not None:
        return hit
    if not t.args:
        return t
    new = tuple(substitute(a, mapping) for a in t.args)
    if all(n is o for n, o in zip(new, t.args)):
        return t
    return _mk(t.fn, new)


# --- literals ---------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    lhs: Term
    rhs: Term
    positive: bool = True

    def __post_init__(self):
        # canonical orientation
        if self.rhs.key < self.lhs.key:
            l, r = self.rhs, self.lhs
            object.__setattr__(self, "lhs", l)
            object.__setattr__(self, "rhs", r)

    def __repr__(self) -> str:
        return self.text

    @property
    def text(self) -> str:
        return f"{self.lhs.text} {'=' if self.positive else '!='} {self.rhs.text}"

    @property
    def key(self) -> tuple:
        return (self.lhs.key, self.rhs.key, 0 if self.positive else 1)

    def __lt__(self, other: "Literal") -> bool:
        return self.key < other.key

    def negate(self) -> "Literal":
        return Literal(self.lhs, self.rhs, not self.positive)

    @property
    def depth(self) -> int:
        return max(self.lhs.depth, self.rhs.depth)

    def terms(self) -> set[Term]:
        return set(self.lhs.subterms()) | set(self.rhs.subterms())

    def constants(self) -> set[Term]:
        return self.lhs.constants() | self.rhs.constants()

    def substitute(self, mapping: Mapping[Term, Term]) -> "Literal":
        return Literal(substitute(self.lhs, mapping), substitute(self.rhs, mapping), self.positive)


def eq(a: Term | str, b: Term | str) -> Literal:
    return Literal(as_term(a), as_term(b), True)


def neq(a: Term | str, b: Term | str) -> Literal:
    return Literal(as_term(a), as_term(b), False)


def sort_literals(lits: Iterable[Literal]) -> list[Literal]:
    return sorted(set(lits), key=lambda l: l.key)


def constants_of(lits: Iterable[Literal]) -> set[Term]:
    out: set[Term] = set()
    for l in lits:
        out |= l.constants()
    return out


def terms_of(lits: Iterable[Literal]) -> set[Term]:
    out: set[Term] = set()
    for l in lits:
        out |= l.terms()
    return out


def formula_text(lits: Iterable[Literal]) -> str:
    lits = sort_literals(lits)
    return " & ".join(l.text for l in lits) if lits else "true"


# --- text form --------------------------------------------------------------

_TOK = re.compile(r"\s*(!=|=|\(|\)|,|&|[A-Za-z0-9_#?]+)")


def _tokens(text: str) -> list[str]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m:
            raise ValueError(f"bad character at {pos} in {text!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _parse_term_toks(toks: list[str], i: int) -> tuple[Term, int]:
    name = toks[i]
    i += 1
    if i < len(toks) and toks[i] == "(":
        args = []
        i += 1
        while True:
            a, i = _parse_term_toks(toks, i)
            args.append(a)
            if toks[i] == ",":
                i += 1
                continue
            if toks[i] == ")":
                return app(name, *args), i + 1
            raise ValueError(f"unexpected {toks[i]!r}")
    return const(name), i


def parse_term(text: str) -> Term:
    toks = _tokens(text)
    t, i = _parse_term_toks(toks, 0)
    if i != len(toks):
        raise ValueError(f"trailing input in term {text!r}")
    return t


def parse_literals(text: str) -> set[Literal]:
    """Parse `a = f(b) & c != d` (also accepts commas between literals)."""
    toks = _tokens(text)
    out: set[Literal] = set()
    i = 0
    while i < len(toks):
        lhs, i = _parse_term_toks(toks, i)
        op = toks[i]
        if op not in ("=", "!="):
            raise ValueError(f"expected = or != in {text!r}")
        rhs, i = _parse_term_toks(toks, i + 1)
        out.add(Literal(lhs, rhs, op == "="))
        if i < len(toks):
            if toks[i] not in ("&", ","):
                raise ValueError(f"expected separator in {text!r}")
            i += 1
    return out


# --- signature --------------------------------------------------------------

@dataclass
class Signature:
    constants: list[str] = field(default_factory=list)
    functions: dict[str, int] = field(default_factory=dict)
    initial_constants: list[str] = field(default_factory=list)

    def __post_init__(self):
        clash = set(self.constants) & set(self.functions)
        if clash:
            raise ValueError(f"names used as both constant and function: {sorted(clash)}")
        if not set(self.initial_constants) <= set(self.constants):
            raise ValueError("initial constants must be constants")
        for f, n in self.functions.items():
            if n < 1:
                raise ValueError(f"arity of {f} must be positive")
        # interned first, in their fixed order
        for c in self.constants:
            const(c)

    def order(self, c: Term) -> int:
        try:
            return self.constants.index(c.fn)
        except ValueError:
            return len(self.constants)

    def intern(self, desc) -> Term:
        """Intern a term given as text, a Term, or nested tuples ("f", "a", ("g", "b"))."""
        if isinstance(desc, str):
            desc = parse_term(desc)
        if isinstance(desc, Term):
            return self._check(desc)
        if isinstance(desc, tuple):
            fn, *args = desc
            return self._check(app(fn, *[self.intern(a) for a in args]) if args else const(fn))
        raise TypeError(f"cannot intern {desc!r}")

    def _check(self, t: Term) -> Term:
        for s in t.subterms():
            if s.is_const:
                if s.fn not in self.constants:
                    raise ValueError(f"unknown constant {s.fn}")
            else:
                n = self.functions.get(s.fn)
                if n is None:
                    raise ValueError(f"unknown function {s.fn}")
                if n != len(s.args):
                    raise ValueError(f"arity mismatch for {s.fn}: expected {n}, got {len(s.args)}")
        return t


# --- congruence closure -----------------------------------------------------

class CongruenceState:
    """Congruence closure over the terms of the asserted literals.

    Treated as a value: the module-level helpers never mutate a state that was
    handed to them.
    """

    def __init__(self) -> None:
        self.asserted: frozenset[Literal] = frozenset()
        self._root: dict[Term, Term] = {}
        self._members: dict[Term, list[Term]] = {}
        self._uses: dict[Term, list[Term]] = {}
        self._sig: dict[tuple, Term] = {}
        self._diseqs: list[tuple[Term, Term]] = []
        self.unsat = False

    @classmethod
    def of(cls, lits: Iterable[Literal]) -> "CongruenceState":
        s = cls()
        for l in lits:
            s._assert(l)
        return s

    def copy(self) -> "CongruenceState":
        s = CongruenceState.__new__(CongruenceState)
        s.asserted = self.asserted
        s._root = dict(self._root)
        s._members = {k: list(v) for k, v in self._members.items()}
        s._uses = {k: list(v) for k, v in self._uses.items()}
        s._sig = dict(self._sig)
        s._diseqs = list(self._diseqs)
        s.unsat = self.unsat
        return s

    # mutation (private) ------------------------------------------------------

    def _add(self, t: Term) -> None:
        if t in self._root:
            return
        for a in t.args:
            self._add(a)
        self._root[t] = t
        self._members[t] = [t]
        self._uses[t] = []
        if t.args:
            for a in {self._root[a] for a in t.args}:
                self._uses[a].append(t)
            k = self._sig_key(t)
            other = self._sig.get(k)
            if other is None:
                self._sig[k] = t
            else:
                self._union(t, other)

    def _sig_key(self, t: Term) -> tuple:
        return (t.fn, tuple(self._root[a].uid for a in t.args))

    def _union(self, a: Term, b: Term) -> None:
        pending = [(a, b)]
        while pending:
            x, y = pending.pop()
            rx, ry = self._root[x], self._root[y]
            if rx is ry:
                continue
            if len(self._members[rx]) < len(self._members[ry]):
                rx, ry = ry, rx
            # ry's class folds into rx
            for m in self._members.pop(ry):
                self._root[m] = rx
                self._members[rx].append(m)
            moved = self._uses.pop(ry)
            for p in moved:
                k = self._sig_key(p)
                other = self._sig.get(k)
                if other is None:
                    self._sig[k] = p
                elif self._root[other] is not self._root[p]:
                    pending.append((p, other))
            self._uses[rx].extend(moved)
        if not self.unsat:
            self.unsat = any(self._root[s] is self._root[t] for s, t in self._diseqs)

    def _assert(self, lit: Literal) -> None:
        self.asserted = self.asserted | {lit}
        self._add(lit.lhs)
        self._add(lit.rhs)
        if lit.positive:
            self._union(lit.lhs, lit.rhs)
        else:
            self._diseqs.append((lit.lhs, lit.rhs))
            if self._root[lit.lhs] is self._root[lit.rhs]:
                self.unsat = True

    # queries -----------------------------------------------------------------

    def has(self, t: Term) -> bool:
        return t in self._root

    def find(self, t: Term) -> Term:
        return self._root[t]

    def same(self, a: Term, b: Term) -> bool:
        if a is b:
            return True
        if a in self._root and b in self._root:
            return self._root[a] is self._root[b]
        s = self.copy()
        s._add(a)
        s._add(b)
        return s._root[a] is s._root[b]

    def terms(self) -> list[Term]:
        return sorted(self._root, key=lambda t: t.key)

    def members(self, t: Term) -> list[Term]:
        return sorted(self._members[self._root[t]], key=lambda t: t.key)

    def classes(self) -> list[list[Term]]:
        """Classes as sorted member lists, ordered by their least member."""
        out = [sorted(ms, key=lambda t: t.key) for ms in self._members.values()]
        return sorted(out, key=lambda ms: ms[0].key)

    def diseq_pairs(self) -> list[tuple[Term, Term]]:
        """Asserted disequalities as pairs of class roots."""
        return [(self._root[s], self._root[t]) for s, t in self._diseqs]

    def separated(self, a: Term, b: Term) -> bool:
        """Some asserted disequality connects the classes of a and b."""
        if a not in self._root or b not in self._root:
            return False
        ra, rb = self._root[a], self._root[b]
        for s, t in self._diseqs:
            rs, rt = self._root[s], self._root[t]
            if (rs is ra and rt is rb) or (rs is rb and rt is ra):
                return True
        return False


def assert_literal(state: CongruenceState, lit: Literal) -> CongruenceState:
    s = state.copy()
    s._assert(lit)
    return s


def assert_all(state: CongruenceState, lits: Iterable[Literal]) -> CongruenceState:
    s = state.copy()
    for l in lits:
        s._assert(l)
    return s


def entails(state: CongruenceState, lit: Literal) -> bool:
    if state.unsat:
        return True
    if lit.positive:
        return state.same(lit.lhs, lit.rhs)
    if state.separated(lit.lhs, lit.rhs):
        return True
    if state.same(lit.lhs, lit.rhs):
        return False
    s = state.copy()
    s._assert(Literal(lit.lhs, lit.rhs, True))
    return s.unsat


def proves(state: CongruenceState, lit: Literal) -> bool:
    """Derivability without case reasoning: equalities by congruence, and
    disequalities only by rewriting an asserted one with equalities."""
    if lit.positive:
        return state.same(lit.lhs, lit.rhs)
    return state.separated(lit.lhs, lit.rhs)


def is_sat(lits: Iterable[Literal]) -> bool:
    return not CongruenceState.of(lits).unsat


def entails_all(lits: Iterable[Literal], goal: Literal) -> bool:
    return entails(CongruenceState.of(lits), goal)


def entailed_literals_over(state: CongruenceState, universe: Iterable[Term]) -> set[Literal]:
    us = sorted(set(universe), key=lambda t: t.key)
    out: set[Literal] = set()
    if state.unsat:
        for i, a in enumerate(us):
            for b in us[i:]:
                if a is not b:
                    out.add(Literal(a, b, True))
                out.add(Literal(a, b, False))
        return out
    s = state.copy()
    for t in us:
        s._add(t)
    for a, b in combinations(us, 2):
        if s._root[a] is s._root[b]:
            out.add(Literal(a, b, True))
        elif entails(s, Literal(a, b, False)):
            out.add(Literal(a, b, False))
    return out


# --- brute-force oracle -----------------------------------------------------

class _Bottom:
    def __repr__(self) -> str:
        return "⊥"


BOTTOM = _Bottom()


def subterm_closure(terms: Iterable[Term]) -> set[Term]:
    out: set[Term] = set()
    for t in terms:
        out.update(t.subterms())
    return out


def brute_force_closure(gamma: Iterable[Literal], universe: Iterable[Term]) -> set:
    """Saturate gamma under the EUF proof rules, restricted to universe terms.

    Deliberately naive and independent of CongruenceState: equalities are kept
    as explicit pairs. Returns literals (including reflexive ones) and BOTTOM
    when a contradiction is derived.
    """
    gamma = list(gamma)
    U = subterm_closure(list(universe) + [t for l in gamma for t in (l.lhs, l.rhs)])
    eqs: set[tuple[Term, Term]] = {(t, t) for t in U}  # Refl
    asserted_neq = set()
    for l in gamma:
        if l.positive:
            eqs.add((l.lhs, l.rhs))
        else:
            asserted_neq.add((l.lhs, l.rhs))
    apps: dict[tuple[str, int], list[Term]] = {}
    for t in U:
        if t.args:
            apps.setdefault((t.fn, len(t.args)), []).append(t)

    changed = True
    while changed:
        changed = False
        new = set()
        # Symm
        for x, y in eqs:
            if (y, x) not in eqs:
                new.add((y, x))
        # Trans
        succ: dict[Term, set[Term]] = {}
        for x, y in eqs:
            succ.setdefault(x, set()).add(y)
        for x, ys in succ.items():
            for y in list(ys):
                for z in succ.get(y, ()):
                    if (x, z) not in eqs:
                        new.add((x, z))
        # Cong
        for group in apps.values():
            for s in group:
                for t in group:
                    if (s, t) not in eqs and all((a, b) in eqs for a, b in zip(s.args, t.args)):
                        new.add((s, t))
        if new:
            eqs |= new
            changed = True

    # PMod on disequalities: rewrite either side with an equal term
    neqs: set[tuple[Term, Term]] = set()
    frontier = set(asserted_neq)
    while frontier:
        neqs |= frontier
        nxt = set()
        for s, t in frontier:
            for x, y in eqs:
                if x is s and (y, t) not in neqs:
                    nxt.add((y, t))
                if x is t and (s, y) not in neqs:
                    nxt.add((s, y))
            if (t, s) not in neqs:
                nxt.add((t, s))
        frontier = nxt

    out: set = {Literal(x, y, True) for x, y in eqs}
    out |= {Literal(x, y, False) for x, y in neqs}
    if any((x, y) in eqs for x, y in asserted_neq):  # EqNeq
        out.add(BOTTOM)
    return out


def oracle_entails(gamma: Iterable[Literal], lit: Literal, universe: Iterable[Term] = ()) -> bool:
    """Entailment decided through brute_force_closure alone."""
    gamma = list(gamma)
    U = list(universe) + [lit.lhs, lit.rhs]
    if lit.positive:
        closed = brute_force_closure(gamma, U)
        return BOTTOM in closed or Literal(lit.lhs, lit.rhs, True) in closed
    closed = brute_force_closure(gamma + [Literal(lit.lhs, lit.rhs, True)], U)
    return BOTTOM in closed
