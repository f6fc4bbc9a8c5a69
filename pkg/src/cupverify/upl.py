"""UPL: syntax tree, concrete parser and symbolic small-step semantics."""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from .euf import CongruenceState, Literal, Term, app, const, constants_of, Signature

EXIT = 0  # location of the terminal configuration


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Cond:
    lhs: str
    rhs: str
    positive: bool = True

    def negate(self) -> "Cond":
        return Cond(self.lhs, self.rhs, not self.positive)

    @property
    def text(self) -> str:
        return f"{self.lhs} {'==' if self.positive else '!='} {self.rhs}"


class Stmt:
    loc: int = -1
    line: int = 0
    col: int = 0
    synthetic: bool = False

    def label(self) -> str:
        raise NotImplementedError

    def children(self) -> list["Stmt"]:
        return []


@dataclass(eq=False)
class Skip(Stmt):
    def label(self) -> str:
        return "skip"


@dataclass(eq=False)
class Assign(Stmt):
    target: str
    source: str

    def label(self) -> str:
        return f"{self.target} := {self.source}"


@dataclass(eq=False)
class AssignFn(Stmt):
    target: str
    fn: str
    args: tuple[str, ...]

    def label(self) -> str:
        return f"{self.target} := {self.fn}({', '.join(self.args)})"


@dataclass(eq=False)
class Assume(Stmt):
    cond: Cond

    def label(self) -> str:
        return f"assume({self.cond.text})"


@dataclass(eq=False)
class Seq(Stmt):
    first: Stmt
    second: Stmt

    def label(self) -> str:
        return f"{self.first.label()}; ..."

    def children(self):
        return [self.first, self.second]


@dataclass(eq=False)
class If(Stmt):
    cond: Cond
    then: Stmt
    orelse: Stmt
    then_assume: Assume = field(init=False, repr=False)
    else_assume: Assume = field(init=False, repr=False)

    def __post_init__(self):
        self.then_assume = Assume(self.cond)
        self.else_assume = Assume(self.cond.negate())
        self.then_assume.synthetic = self.else_assume.synthetic = True

    def label(self) -> str:
        return f"if ({self.cond.text})"

    def children(self):
        return [self.then_assume, self.then, self.else_assume, self.orelse]


@dataclass(eq=False)
class While(Stmt):
    cond: Cond
    body: Stmt
    unrolled: If = field(init=False, repr=False)

    def __post_init__(self):
        back = Seq(self.body, self)
        done = Skip()
        self.unrolled = If(self.cond, back, done)
        for s in (back, done, self.unrolled):
            s.synthetic = True

    def label(self) -> str:
        return f"while ({self.cond.text})"

    def children(self):
        return [self.unrolled]


def walk(s: Stmt) -> Iterator[Stmt]:
    """Pre-order over all nodes, synthetic ones included, each visited once."""
    seen: set[int] = set()
    todo = [s]
    while todo:
        n = todo.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        todo.extend(reversed(n.children()))


def primitive_statements(s: Stmt) -> list[Stmt]:
    """Source statements other than sequencing."""
    return [n for n in walk(s) if not n.synthetic and not isinstance(n, Seq)]


@dataclass
class Program:
    root: Stmt
    variables: list[str]
    functions: dict[str, int]
    text: str = ""
    nodes: dict[int, Stmt] = field(default_factory=dict)

    def __post_init__(self):
        loc = 1
        for n in walk(self.root):
            n.loc = loc
            self.nodes[loc] = n
            loc += 1
        # synthetic nodes borrow the source position of the statement they expand
        for n in walk(self.root):
            if isinstance(n, If):
                for a in (n.then_assume, n.else_assume):
                    a.line, a.col = n.line, n.col
            if isinstance(n, While):
                u = n.unrolled
                for a in (u, u.then, u.orelse, u.then_assume, u.else_assume):
                    a.line, a.col = n.line, n.col

    @property
    def initial_constants(self) -> list[Term]:
        return [initial_constant(v) for v in self.variables]

    @property
    def signature(self) -> Signature:
        c0 = [initial_constant(v).fn for v in self.variables]
        return Signature(list(c0), dict(self.functions), list(c0))

    def q0(self) -> tuple[tuple[str, Term], ...]:
        return tuple((v, initial_constant(v)) for v in self.variables)

    def locations(self) -> list[int]:
        """Control locations: exit plus every node that can head a continuation."""
        heads = [l for l, n in self.nodes.items() if not isinstance(n, (Seq, Skip))]
        return [EXIT] + sorted(heads)

    def location_label(self, loc: int) -> str:
        if loc == EXIT:
            return "exit"
        n = self.nodes[loc]
        return f"{n.line}:{n.label()}"

    def statements_at_line(self, line: int) -> list[Stmt]:
        return [n for n in self.nodes.values() if n.line == line and not n.synthetic
                and not isinstance(n, Seq)]


def initial_constant(var: str) -> Term:
    return const(f"{var}0")


# --- parser -----------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<op>:=|==|!=|[(){};,])|(?P<ident>[a-z][a-zA-Z0-9_]*)"
)
_KEYWORDS = {"skip", "assume", "if", "then", "else", "while"}
_RESERVED_VAR = re.compile(r"w_Z\d*$")


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    out, pos, line, col = [], 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind == "op":
                out.append(_Tok(s, s, line, col))
            elif kind == "ident":
                out.append(_Tok("kw" if s in _KEYWORDS else "ident", s, line, col))
            col += len(s)
        pos = m.end()
    out.append(_Tok("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0
        self.variables: list[str] = []
        self.functions: dict[str, int] = {}

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            got = t.text or "end of input"
            raise ParseError(f"expected {want!r}, got {got!r}", t.line, t.col)
        return t

    def var(self) -> str:
        t = self.expect("ident")
        if t.text in self.functions:
            raise ParseError(f"{t.text} is used as a function", t.line, t.col)
        if _RESERVED_VAR.match(t.text):
            raise ParseError(f"variable name {t.text} is reserved", t.line, t.col)
        if t.text not in self.variables:
            self.variables.append(t.text)
        return t.text

    def program(self) -> Stmt:
        s = self.seq()
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected {t.text!r}", t.line, t.col)
        return s

    def seq(self) -> Stmt:
        stmts = [self.stmt()]
        while self.peek().kind == ";":
            while self.peek().kind == ";":
                self.next()
            if self.peek().kind in ("}", "eof"):
                break
            stmts.append(self.stmt())
        out = stmts[-1]
        for s in reversed(stmts[:-1]):
            seq = Seq(s, out)
            seq.line, seq.col = s.line, s.col
            out = seq
        return out

    def cond(self) -> Cond:
        lhs = self.var()
        t = self.next()
        if t.kind not in ("==", "!="):
            raise ParseError(f"expected '==' or '!=', got {t.text!r}", t.line, t.col)
        rhs = self.var()
        return Cond(lhs, rhs, t.kind == "==")

    def stmt(self) -> Stmt:
        t = self.peek()
        if t.kind == "kw" and t.text == "skip":
            self.next()
            s: Stmt = Skip()
        elif t.kind == "kw" and t.text == "assume":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            s = Assume(c)
        elif t.kind == "kw" and t.text == "if":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            self.expect("kw", "then")
            self.expect("{")
            a = self.seq()
            self.expect("}")
            self.expect("kw", "else")
            self.expect("{")
            b = self.seq()
            self.expect("}")
            s = If(c, a, b)
        elif t.kind == "kw" and t.text == "while":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            self.expect("{")
            body = self.seq()
            self.expect("}")
            s = While(c, body)
        elif t.kind == "ident":
            target = self.var()
            self.expect(":=")
            src = self.expect("ident")
            if self.peek().kind == "(":
                s = self.call(target, src)
            else:
                self.i -= 1
                s = Assign(target, self.var())
        else:
            got = t.text or "end of input"
            raise ParseError(f"expected a statement, got {got!r}", t.line, t.col)
        s.line, s.col = t.line, t.col
        return s

    def call(self, target: str, fn: _Tok) -> Stmt:
        if fn.text in self.variables:
            raise ParseError(f"{fn.text} is used as a variable", fn.line, fn.col)
        self.expect("(")
        args = [self.var()]
        while self.peek().kind == ",":
            self.next()
            args.append(self.var())
        self.expect(")")
        known = self.functions.setdefault(fn.text, len(args))
        if known != len(args):
            raise ParseError(
                f"function {fn.text} used with {len(args)} arguments, earlier with {known}",
                fn.line, fn.col,
            )
        return AssignFn(target, fn.text, tuple(args))


def parse(text: str) -> Program:
    p = _Parser(text)
    root = p.program()
    return Program(root, p.variables, p.functions, text)


# --- semantics --------------------------------------------------------------

@dataclass(frozen=True)
class Configuration:
    stack: tuple[Stmt, ...]
    state: tuple[tuple[str, Term], ...]
    pc: frozenset[Literal]

    @property
    def location(self) -> int:
        return self.stack[0].loc if self.stack else EXIT

    @property
    def stmt(self) -> Stmt | None:
        return self.stack[0] if self.stack else None

    @property
    def is_terminal(self) -> bool:
        return not self.stack

    @property
    def q(self) -> dict[str, Term]:
        return dict(self.state)

    def stored(self) -> list[Term]:
        """C(q), in variable order without repeats."""
        out: list[Term] = []
        for _, c in self.state:
            if c not in out:
                out.append(c)
        return out


def settle(stack: tuple[Stmt, ...]) -> tuple[Stmt, ...]:
    """Split sequences and drop finished skips so the head is executable."""
    while stack:
        top = stack[0]
        if isinstance(top, Seq):
            stack = (top.first, top.second) + stack[1:]
        elif isinstance(top, Skip):
            stack = stack[1:]
        else:
            break
    return stack


def initial_config(program: Program) -> Configuration:
    return Configuration(settle((program.root,)), program.q0(), frozenset())


class FreshSupply:
    """Per-variable counters shared by a whole run: x#1, x#2, ..."""

    def __init__(self) -> None:
        self.counters: dict[str, int] = {}

    def fresh(self, var: str, avoid: set[Term]) -> Term:
        while True:
            k = self.counters.get(var, 0) + 1
            self.counters[var] = k
            c = const(f"{var}#{k}")
            if c not in avoid:
                return c


def _fresh_for(var: str, config: Configuration, supply: FreshSupply | None) -> Term:
    used = constants_of(config.pc) | {c for _, c in config.state}
    if supply is not None:
        return supply.fresh(var, used)
    prefix = f"{var}#"
    k = 0
    for c in used:
        if c.fn.startswith(prefix) and c.fn[len(prefix):].isdigit():
            k = max(k, int(c.fn[len(prefix):]))
    return const(f"{prefix}{k + 1}")


def cond_literal(cond: Cond, q: dict[str, Term]) -> Literal:
    return Literal(q[cond.lhs], q[cond.rhs], cond.positive)


def step(config: Configuration, supply: FreshSupply | None = None) -> list[Configuration]:
    if config.is_terminal:
        return []
    top, rest = config.stack[0], config.stack[1:]
    q = config.q
    if isinstance(top, Assume):
        lit = cond_literal(top.cond, q)
        pc = config.pc | {lit}
        if CongruenceState.of(pc).unsat:
            return []
        return [Configuration(settle(rest), config.state, pc)]
    if isinstance(top, (Assign, AssignFn)):
        x = _fresh_for(top.target, config, supply)
        if isinstance(top, Assign):
            rhs = q[top.source]
        else:
            rhs = app(top.fn, *[q[a] for a in top.args])
        state = tuple((v, x if v == top.target else c) for v, c in config.state)
        return [Configuration(settle(rest), state, config.pc | {Literal(x, rhs, True)})]
    if isinstance(top, If):
        return [
            Configuration(settle((top.then_assume, top.then) + rest), config.state, config.pc),
            Configuration(settle((top.else_assume, top.orelse) + rest), config.state, config.pc),
        ]
    if isinstance(top, While):
        return [Configuration(settle((top.unrolled,) + rest), config.state, config.pc)]
    raise TypeError(f"cannot step {top!r}")


@dataclass
class BoundedRun:
    configs: list[Configuration]
    depth: list[int]
    edges: list[tuple[int, int]]
    partial: bool = False


def concrete_bounded(program: Program, step_bound: int, max_configs: int = 200_000) -> BoundedRun:
    """All configurations within step_bound steps of the initial one."""
    if step_bound < 0:
        raise ValueError("step bound must be non-negative")
    supply = FreshSupply()
    run = BoundedRun([initial_config(program)], [0], [])
    todo = deque([0])
    while todo:
        i = todo.popleft()
        if run.depth[i] >= step_bound:
            continue
        for c in step(run.configs[i], supply):
            if len(run.configs) >= max_configs:
                run.partial = True
                return run
            run.configs.append(c)
            run.depth.append(run.depth[i] + 1)
            j = len(run.configs) - 1
            run.edges.append((i, j))
            todo.append(j)
    return run
