"""Command-line interface.

Exit codes: 0 success, 1 validation or parse error, 2 the step produced a
pregraph that is not a graph, 3 a precondition (conflict-freedom or the
symmetry condition) is unverified or fails and no override was given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import documents as docs
from .engine import PreconditionError, full_parallel_step, auto_parallel_step, run
from .export import MissingCoordinates, export_dot, export_svg
from .library import gen_koch_init, gen_mesh_init, gen_moore_grid, gen_triangle_s
from .matching import SymmetryConditionFailed, all_matches, auto_match_set
from .pregraph import graph_witness, validate_graph, NotAGraph
from .rules import analysis_report, validate_rule

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NON_GRAPH = 2
EXIT_UNVERIFIED = 3


def _read(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_rules(path: str):
    return docs.load_rules(_read(path))


def _load_graph(path: str | None):
    return docs.load_graph(_read(path))


def _cmd_validate(args) -> int:
    report = {}
    ok = True
    rules = _load_rules(args.rules)
    report["rules"] = {}
    for r in rules:
        violations = validate_rule(r)
        report["rules"][r.name] = violations
        ok = ok and not violations
    if args.graph is not None:
        g = _load_graph(args.graph)
        violations = [str(v) for v in validate_graph(g)]
        report["graph"] = violations
        ok = ok and not violations
    _write(docs.dumps(report), args.out)
    return EXIT_OK if ok else EXIT_INVALID


def _cmd_analyze(args) -> int:
    rules = _load_rules(args.rules)
    _write(docs.dumps(analysis_report(rules)), args.out)
    return EXIT_OK


def _check_rules_valid(rules) -> None:
    bad = {r.name: validate_rule(r) for r in rules if validate_rule(r)}
    if bad:
        raise docs.ParseError("$", f"invalid rules: {bad}")


def _cmd_match(args) -> int:
    rules = _load_rules(args.rules)
    _check_rules_valid(rules)
    host = graph_witness(_load_graph(args.graph))
    if args.mode == "auto":
        ms = auto_match_set(rules, host)
    else:
        ms = all_matches(rules, host)
    _write(docs.dumps([m.to_json() for m in ms]), args.out)
    return EXIT_OK


def _cmd_step(args) -> int:
    rules = _load_rules(args.rules)
    _check_rules_valid(rules)
    host = graph_witness(_load_graph(args.graph))
    step = full_parallel_step if args.mode == "full" else auto_parallel_step
    res = step(rules, host, override=args.allow_unchecked)
    _write(docs.emit_graph(res.result), args.out)
    return EXIT_OK if res.is_graph else EXIT_NON_GRAPH


def _cmd_run(args) -> int:
    rules = _load_rules(args.rules)
    _check_rules_valid(rules)
    host = graph_witness(_load_graph(args.graph))
    snapshot = None
    if args.snapshot_dir is not None:
        directory = Path(args.snapshot_dir)
        directory.mkdir(parents=True, exist_ok=True)

        def snapshot(k, res):
            (directory / f"step_{k:03d}.json").write_text(
                docs.emit_graph(res.result), encoding="utf-8")

    report = run(rules, host, args.mode, max_steps=args.steps,
                 stop_on_fixpoint=args.until_fixpoint,
                 override=args.allow_unchecked, snapshot=snapshot)
    _write(docs.dumps(docs.run_report_to_json(report)), args.out)
    if report.steps and not report.steps[-1].is_graph:
        return EXIT_NON_GRAPH
    return EXIT_OK


def _cmd_export(args) -> int:
    g = _load_graph(args.graph)
    if args.format == "dot":
        _write(export_dot(g), args.out)
    elif args.format == "svg":
        _write(export_svg(g), args.out)
    else:
        _write(docs.emit_graph(g), args.out)
    return EXIT_OK


def _cmd_gen(args) -> int:
    if args.target == "koch":
        g = gen_koch_init()
    elif args.target == "mesh":
        g = gen_mesh_init()
    elif args.target == "triangle-s":
        g = gen_triangle_s()
    else:
        fill = tuple(float(x) for x in args.fill.split(","))
        g = gen_moore_grid(args.rows, args.cols, fill, torus=args.torus)
    _write(docs.emit_graph(g), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pargraph",
        description="Attributed port-graph rewriting with overlapping rules.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        return p

    p = add("validate", _cmd_validate, help="validate rule and graph documents")
    p.add_argument("--rules", required=True)
    p.add_argument("--graph", default=None)

    p = add("analyze", _cmd_analyze,
            help="symmetry, parallel-safety and conflict-freedom report")
    p.add_argument("--rules", required=True)

    p = add("match", _cmd_match, help="enumerate matches as JSON")
    p.add_argument("--rules", required=True)
    p.add_argument("--graph", default=None, help="graph file (default stdin)")
    p.add_argument("--mode", choices=["all", "auto"], default="all")

    p = add("step", _cmd_step, help="apply one parallel rewrite step")
    p.add_argument("--rules", required=True)
    p.add_argument("--graph", default=None, help="graph file (default stdin)")
    p.add_argument("--mode", choices=["full", "auto"], required=True)
    p.add_argument("--allow-unchecked", action="store_true",
                   help="run even if conflict-freedom is not established")

    p = add("run", _cmd_run, help="iterate rewrite steps")
    p.add_argument("--rules", required=True)
    p.add_argument("--graph", default=None, help="graph file (default stdin)")
    p.add_argument("--mode", choices=["full", "auto"], required=True)
    p.add_argument("-n", "--steps", type=int, required=True)
    p.add_argument("--until-fixpoint", action="store_true")
    p.add_argument("--snapshot-dir", default=None)
    p.add_argument("--allow-unchecked", action="store_true")

    p = add("export", _cmd_export, help="export a graph as dot, svg or json")
    p.add_argument("--graph", default=None, help="graph file (default stdin)")
    p.add_argument("--format", choices=["dot", "svg", "json"], required=True)

    p = add("gen", _cmd_gen, help="generate a built-in initial graph")
    p.add_argument("target", choices=["koch", "grid", "mesh", "triangle-s"])
    p.add_argument("--rows", type=int, default=8)
    p.add_argument("--cols", type=int, default=8)
    p.add_argument("--fill", default="0", help="comma-separated cell values")
    p.add_argument("--torus", action="store_true",
                   help="wrap the grid (extension, not part of the source systems)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (PreconditionError, SymmetryConditionFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNVERIFIED
    except (docs.ParseError, NotAGraph, MissingCoordinates, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
