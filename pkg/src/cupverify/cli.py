"""Command-line entry point: cupverify <command> FILE [options]."""
from __future__ import annotations

import argparse
import json
import sys

from .explorer import (
    BudgetExceeded,
    Limits,
    bisim_validate,
    check_coherence,
    decide_reachability,
    explore,
    invariants,
    literal_json,
)
from .upl import EXIT, ParseError, Program, parse, primitive_statements

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_IO = 4


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _trace_json(trace) -> list[dict]:
    return [{"location": a.location, "pc": [literal_json(l) for l in a.pc]} for a in trace]


def cmd_parse(prog: Program, args) -> str:
    stmts = primitive_statements(prog.root)
    if args.format == "json":
        return _dump({
            "variables": prog.variables,
            "functions": prog.functions,
            "statements": [{"line": s.line, "col": s.col, "text": s.label()} for s in stmts],
            "locations": [{"location": l, "label": prog.location_label(l)} for l in prog.locations()],
        })
    lines = [f"variables: {', '.join(prog.variables)}"]
    fs = ", ".join(f"{f}/{n}" for f, n in sorted(prog.functions.items()))
    lines.append(f"functions: {fs or '-'}")
    lines.append(f"statements: {len(stmts)}")
    for l in prog.locations():
        lines.append(f"  [{l}] {prog.location_label(l)}")
    return "\n".join(lines) + "\n"


def cmd_coherence(prog: Program, args) -> str:
    rep = check_coherence(prog, _limits(args))
    if rep.status == "unknown":
        raise BudgetExceeded("coherence check ran out of budget")
    if args.format == "json":
        return _dump(rep.to_json())
    return rep.text() + "\n"


def cmd_reach(prog: Program, args) -> str:
    v = decide_reachability(prog, _limits(args))
    if args.format == "json":
        out = {
            "verdict": v.name,
            "sound_only": v.sound_only,
            "coherence": v.coherence.to_json(),
            "stats": v.ts.stats(),
            "trace": _trace_json(v.trace),
        }
        if v.assertion_map is not None:
            out["invariants"] = v.assertion_map.to_json()
        return _dump(out)
    lines = [f"verdict: {v.name}" + (" (sound only: program not coherent)" if v.sound_only else "")]
    lines.append(f"coherence: {v.coherence.text()}")
    st = v.ts.stats()
    lines.append(f"abstract system: {st['nodes']} nodes, {st['edges']} edges")
    if v.reachable:
        lines.append("trace:")
        for a in v.trace:
            lines.append(f"  {prog.location_label(a.location)} | {a.pc_text}")
    return "\n".join(lines) + "\n"


def cmd_invariants(prog: Program, args) -> str:
    ts = explore(prog, _limits(args))
    if not ts.complete:
        raise BudgetExceeded("exploration budget exhausted before a fixpoint", ts)
    amap = invariants(ts)
    if args.format == "json":
        return _dump({"invariants": amap.to_json(), "stats": ts.stats()})
    lines = []
    for loc in prog.locations():
        if loc == EXIT:
            continue
        lines.append(f"{prog.location_label(loc)}\n    {amap.text(loc)}")
    lines.append(f"exit\n    {amap.text(EXIT)}")
    return "\n".join(lines) + "\n"


def cmd_graph(prog: Program, args) -> str:
    ts = explore(prog, _limits(args))
    if not ts.complete:
        raise BudgetExceeded("exploration budget exhausted before a fixpoint", ts)
    if args.format == "json":
        return _dump(ts.to_json())
    if args.format == "dot":
        return ts.to_dot()
    st = ts.stats()
    lines = [f"nodes: {st['nodes']}, edges: {st['edges']}"]
    for i, n in enumerate(ts.nodes):
        succ = ", ".join(str(j) for j in ts.successors(i))
        lines.append(f"  {i}: {prog.location_label(n.location)} | {n.pc_text} -> [{succ}]")
    return "\n".join(lines) + "\n"


def cmd_bisim(prog: Program, args) -> str:
    rep = bisim_validate(prog, args.bound, _limits(args))
    if args.format == "json":
        return _dump({"bound": args.bound, **rep.to_json()})
    lines = [
        f"bound {args.bound}: {rep.configs} concrete configurations, {rep.edges} steps, "
        f"{rep.nodes_hit} abstract nodes hit",
        f"mismatches: {len(rep.mismatches)}" + (" (concrete run truncated)" if rep.partial else ""),
    ]
    lines += [f"  ({m.clause}) {m.detail}" for m in rep.mismatches]
    return "\n".join(lines) + "\n"


COMMANDS = {
    "parse": cmd_parse,
    "coherence": cmd_coherence,
    "reach": cmd_reach,
    "invariants": cmd_invariants,
    "graph": cmd_graph,
    "bisim-check": cmd_bisim,
}


def _limits(args) -> Limits:
    return Limits(args.max_nodes, args.max_steps, args.jobs)


def _positive(s: str) -> int:
    n = int(s)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cupverify", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("file", help="UPL program, or - for stdin")
    p.add_argument("--format", choices=["text", "json", "dot"], default="text")
    p.add_argument("--max-nodes", type=_positive, default=Limits.max_nodes)
    p.add_argument("--max-steps", type=_positive, default=Limits.max_steps)
    p.add_argument("--bound", type=int, default=40, help="step bound for bisim-check")
    p.add_argument("--jobs", type=_positive, default=1)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.format == "dot" and args.command != "graph":
        print("error: --format dot is only available for graph", file=sys.stderr)
        return EXIT_IO
    if args.bound < 0:
        print("error: --bound must be non-negative", file=sys.stderr)
        return EXIT_IO
    try:
        if args.file == "-":
            text = sys.stdin.read()
        else:
            with open(args.file, encoding="utf-8") as fh:
                text = fh.read()
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: cannot read {args.file}: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        prog = parse(text)
    except ParseError as e:
        print(f"{args.file}:{e.line}:{e.col}: parse error: {e.msg}", file=sys.stderr)
        return EXIT_PARSE
    try:
        out = COMMANDS[args.command](prog, args)
    except BudgetExceeded as e:
        print(f"error: budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
