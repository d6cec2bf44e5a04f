"""Command line entry points: run, repl, check-style, serve."""

from __future__ import annotations

import argparse
import sys

from .syntax import ParseError, read_hypertext_file
from .typesys import TypeCheckError
from .workspace import EvalError, Workspace


def _build_parser():
    p = argparse.ArgumentParser(prog="evoarch",
                                description="architecture description language "
                                            "with a live, evolvable runtime")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a source file")
    run.add_argument("file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--max-steps", type=int, default=1_000_000)
    run.add_argument("--trace", help="write the event trace to this file")
    run.add_argument("--load", help="start from a snapshot file")
    run.add_argument("--script", action="store_true",
                     help="treat the file as a REPL session script")
    run.add_argument("--typecheck-only", action="store_true",
                     help="emit diagnostics, do not execute")

    repl = sub.add_parser("repl", help="interactive workspace")
    repl.add_argument("--seed", type=int, default=0)
    repl.add_argument("--load", help="start from a snapshot file")
    repl.add_argument("--script", help="read inputs from a file instead of stdin")

    chk = sub.add_parser("check-style", help="check style constraints over a file's systems")
    chk.add_argument("file")
    chk.add_argument("--style", required=True)
    chk.add_argument("--seed", type=int, default=0)

    srv = sub.add_parser("serve", help="expose one workspace over HTTP")
    srv.add_argument("--listen", default="127.0.0.1:8417")
    srv.add_argument("--seed", type=int, default=0)
    srv.add_argument("--load", help="start from a snapshot file")
    srv.add_argument("--console", help="also serve the console app from this directory")
    return p


def _load_source(path):
    return read_hypertext_file(path)


def cmd_run(args):
    src = _load_source(args.file)
    if args.typecheck_only:
        from .syntax import parse
        from .typesys import Checker, TypeEnv
        text = src.to_carrier()
        try:
            program = parse(src)
            Checker().check_program(program, TypeEnv())
        except ParseError as e:
            print(f"ERROR {e.line}:{e.col} parse {e.message}")
            return 2
        except TypeCheckError as e:
            print(e.at(text))
            return 2
        print("OK")
        return 0
    if args.load:
        ws = Workspace.load_snapshot(args.load)
        ws.step_budget = args.max_steps
    else:
        ws = Workspace(seed=args.seed, step_budget=args.max_steps)
    if args.script:
        with open(args.file, encoding="utf-8") as fh:
            ws.repl(stdin=fh, prompts=False)
    else:
        try:
            result = ws.eval_source(src)
        except EvalError as e:
            print(f"error ({e.phase}): {e.message}", file=sys.stderr)
            return 1
        for name, (vid, ty, rendered) in result.new_bindings.items():
            print(f"value {name} : {ty} = {rendered}")
        print(f"-- {result.summary()}")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for e in ws.runtime.events:
                fh.write(e.line() + "\n")
    return 0


def cmd_repl(args):
    if args.load:
        ws = Workspace.load_snapshot(args.load)
    else:
        ws = Workspace(seed=args.seed)
    if args.script:
        with open(args.script, encoding="utf-8") as fh:
            ws.repl(stdin=fh, prompts=False)
    else:
        ws.repl()
    return 0


def cmd_check_style(args):
    src = _load_source(args.file)
    ws = Workspace(seed=args.seed)
    try:
        ws.eval_source(src)
    except EvalError as e:
        print(f"error ({e.phase}): {e.message}", file=sys.stderr)
        return 2
    live = [c for c in ws.runtime.composites if not c.dissolved]
    if not live:
        print("no live composite systems to check", file=sys.stderr)
        return 2
    failures = 0
    for comp in live:
        report = ws.check_style(args.style, comp)
        for v in report.violations:
            failures += 1
            print(f"{comp.handle} VIOLATION {v.line()}")
        if report.ok:
            print(f"{comp.handle} OK")
    return 1 if failures else 0


def cmd_serve(args):
    from .gateway import serve
    host, _, port = args.listen.rpartition(":")
    if args.load:
        ws = Workspace.load_snapshot(args.load)
    else:
        ws = Workspace(seed=args.seed)
    serve(ws, host or "127.0.0.1", int(port), console_dir=args.console)
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {"run": cmd_run, "repl": cmd_repl,
               "check-style": cmd_check_style, "serve": cmd_serve}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
