"""An eager combinator language on a stackless graph-rewriting runtime.

Pending work is held in thunks that carry their own control links
(what to rewrite next, where the result goes, which handler catches a
raise), so reduction is a flat loop over a root pointer and storage is
reclaimed by plain reference counting.
"""

from .compiler import (
    ClauseProgram,
    Combinator,
    CompileError,
    Program,
    assemble,
    compile_clauses,
    compile_program,
    disassemble,
    disassemble_program,
    lift_lambdas,
)
from .engine import (
    BUILTIN_KINDS,
    BUILTINS,
    MatchOutcome,
    Outcome,
    initial_state,
    match_clauses,
    raise_exception,
    run,
    spawn_parallel,
    step,
)
from .frontend import (
    LexError,
    ParseError,
    ResolveError,
    SourceError,
    SurfaceModule,
    Token,
    parse_module,
    parse_source,
    pretty_print,
    resolve,
    tokenize,
)
from .graph import (
    HOLE,
    SINK,
    Compound,
    InternalFault,
    RewriteState,
    Thunk,
    live_nodes,
    render,
    wire_term,
    write_result,
)
from .inspect import DotSnapshot, GraphReport, check, emit_dot

__version__ = "0.1.0"


def build_program(modules):
    """Resolve, lift, and compile surface modules into a Program."""
    table = resolve(modules, BUILTIN_KINDS)
    return compile_program(lift_lambdas(table), BUILTINS)


def program_from_source(source: str, name: str = "<input>"):
    """Compile a single source text (no imports) into a Program."""
    return build_program([parse_source(source, name)])
