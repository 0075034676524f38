"""Command line driver: run scripts, dump bytecode, trace, and a REPL.

    twistvm run FILE [--check] [--trace-dot DIR] [--bytecode]
                     [--include PATH]... [--step-limit N]
    twistvm repl [--include PATH]...

Exit codes: 0 success, 1 uncaught exception, 2 compile error,
3 step-limit exhaustion.
"""

import argparse
import os
import sys
from dataclasses import dataclass, field

from . import compiler, engine, frontend
from .frontend import SourceError
from .graph import render
from .inspect import emit_dot


@dataclass
class RunConfig:
    script: str | None  # None = REPL
    include_paths: list = field(default_factory=list)
    checked: bool = False
    trace_dir: str | None = None
    dump_bytecode: bool = False
    step_limit: int | None = None


class CliError(Exception):
    pass


def _default_include() -> str:
    # the shipped prelude sits next to this module
    return os.path.dirname(os.path.abspath(__file__))


def _find_import(name: str, importer_dir: str, include_paths: list) -> str:
    candidates = [os.path.join(importer_dir, name)]
    candidates += [os.path.join(p, name) for p in include_paths]
    candidates.append(os.path.join(_default_include(), name))
    for c in candidates:
        if os.path.isfile(c):
            return c
    raise CliError(f"cannot find import {name!r}")


def load_modules(path: str, include_paths: list) -> list:
    """Load a script and its import closure, imports first.

    Each file loads at most once; import cycles are an error.
    """
    loaded: dict[str, frontend.SurfaceModule] = {}
    order: list = []
    in_progress: list[str] = []

    def load(p: str):
        canon = os.path.realpath(p)
        if canon in loaded:
            return
        if canon in in_progress:
            raise CliError(f"import cycle through {p!r}")
        in_progress.append(canon)
        try:
            with open(p, encoding="utf-8") as fh:
                source = fh.read()
        except OSError as exc:
            raise CliError(f"cannot read {p!r}: {exc}") from exc
        try:
            module = frontend.parse_source(source, p)
        except SourceError as exc:
            raise CliError(f"{p}:{exc}") from exc
        for name in module.imports:
            load(_find_import(name, os.path.dirname(canon), include_paths))
        in_progress.pop()
        loaded[canon] = module
        order.append(module)

    load(path)
    return order


def build_program(modules: list) -> compiler.Program:
    from . import build_program as build

    return build(modules)


def run_file(config: RunConfig) -> int:
    """Load, compile, and run a script; returns the process exit code."""
    try:
        modules = load_modules(config.script, config.include_paths)
        program = build_program(modules)
    except (CliError, SourceError, compiler.CompileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if config.dump_bytecode:
        sys.stdout.write(compiler.disassemble_program(program))
        return 0

    if program.main is None:
        print("error: no `main` defined", file=sys.stderr)
        return 2

    on_boundary = None
    if config.trace_dir is not None:
        os.makedirs(config.trace_dir, exist_ok=True)
        trace_dir = config.trace_dir

        def on_boundary(state):
            snap = emit_dot(state, "twisted")
            path = os.path.join(trace_dir, f"step-{snap.step_index}.dot")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(snap.text)

    state = engine.initial_state(program, checked=config.checked)
    outcome = engine.run(state, step_limit=config.step_limit, on_boundary=on_boundary)

    if outcome.kind == "step-limit":
        print(f"error: step limit exhausted after {outcome.payload} steps",
              file=sys.stderr)
        return 3
    if outcome.kind == "exception":
        print(f"uncaught exception: {render(outcome.payload, program.short_names)}",
              file=sys.stderr)
        return 1
    if not state.printed:
        sys.stdout.write(render(outcome.payload, program.short_names) + "\n")
    return 0


# ---------------------------------------------------------------------------
# REPL

_ENTRY = "repl/input"  # '/' keeps it out of the user's namespace


class Session:
    """Accumulated declarations of one interactive session."""

    def __init__(self, include_paths: list | None = None):
        self.include_paths = list(include_paths or [])
        prelude = _find_import("prelude.eg", os.getcwd(), self.include_paths)
        self.preludes = load_modules(prelude, self.include_paths)
        self.decls: list = []

    def module(self, extra_decls: list) -> list:
        mods = list(self.preludes)
        mods.append(frontend.SurfaceModule("<repl>", self.decls + extra_decls))
        return mods


def repl_eval(line: str, session: Session) -> str | None:
    """Evaluate one REPL line.

    Declarations extend the session and yield None; expressions run and
    yield their rendered value. Errors raise SourceError/CompileError/
    CliError and leave the session unchanged.
    """
    tokens = frontend.tokenize(line)
    if not tokens:
        return None
    if tokens[0].kind == frontend.KEYWORD and tokens[0].lexeme in (
        "def", "data", "using", "namespace", "import",
    ):
        module = frontend.parse_module(tokens, "<repl>")
        candidate = list(session.decls)
        for decl in module.decls:
            if isinstance(decl, frontend.Def):
                # interactive redefinition replaces the old entry
                candidate = [
                    d
                    for d in candidate
                    if not (isinstance(d, frontend.Def) and d.name == decl.name)
                ]
            candidate.append(decl)
        probe = list(session.preludes)
        probe.append(frontend.SurfaceModule("<repl>", candidate))
        frontend.resolve(probe, engine.BUILTIN_KINDS)  # validate before committing
        session.decls = candidate
        return None

    parser = frontend._Parser(tokens)
    expr = parser.expr()
    extra = parser.peek()
    if extra is not None:
        raise frontend.ParseError(
            f"unexpected {extra.lexeme!r}", extra.line, extra.col
        )
    wrapper = frontend.Def(_ENTRY, expr)
    program = build_program(session.module([wrapper]))
    state = engine.initial_state(program, entry=_ENTRY)
    outcome = engine.run(state)
    if outcome.kind == "exception":
        return f"uncaught exception: {render(outcome.payload, program.short_names)}"
    return render(outcome.payload, program.short_names)


def repl(config: RunConfig) -> int:
    try:
        session = Session(config.include_paths)
    except (CliError, SourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    interactive = sys.stdin.isatty()
    if interactive:
        print("twistvm repl; Ctrl-D to exit")
    while True:
        if interactive:
            sys.stdout.write("> ")
            sys.stdout.flush()
        line = sys.stdin.readline()
        if not line:
            return 0
        line = line.strip()
        if not line:
            continue
        if line in (":q", ":quit"):
            return 0
        try:
            result = repl_eval(line, session)
        except (SourceError, compiler.CompileError, CliError) as exc:
            print(f"error: {exc}")
            continue
        if result is not None:
            print(result)


# ---------------------------------------------------------------------------
# argument parsing

def main(argv: list | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="twistvm",
        description="run scripts on the link-threaded graph-rewriting runtime",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a script")
    runp.add_argument("file")
    runp.add_argument("--check", action="store_true",
                      help="verify graph invariants after every step")
    runp.add_argument("--trace-dot", metavar="DIR",
                      help="write a DOT snapshot per step into DIR")
    runp.add_argument("--bytecode", action="store_true",
                      help="dump combinator disassembly instead of running")
    runp.add_argument("--include", action="append", default=[], metavar="PATH",
                      help="extra import search directory (repeatable)")
    runp.add_argument("--step-limit", type=int, default=None, metavar="N")

    replp = sub.add_parser("repl", help="interactive session")
    replp.add_argument("--include", action="append", default=[], metavar="PATH")

    args = parser.parse_args(argv)
    if args.command == "repl":
        code = repl(RunConfig(script=None, include_paths=args.include))
    else:
        if args.step_limit is not None and args.step_limit <= 0:
            parser.error("--step-limit must be positive")
        config = RunConfig(
            script=args.file,
            include_paths=args.include,
            checked=args.check,
            trace_dir=args.trace_dot,
            dump_bytecode=args.bytecode,
            step_limit=args.step_limit,
        )
        code = run_file(config)
    return code


if __name__ == "__main__":
    sys.exit(main())
