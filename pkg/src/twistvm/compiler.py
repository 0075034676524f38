"""Combinator compilation: lambda lifting and clause bytecode.

Every definition becomes a combinator. A definition whose body is an
abstraction contributes that abstraction's guarded clauses; any other
body becomes a single nullary clause. Abstractions nested inside
expressions are lifted to fresh top-level combinators first, taking
their captured variables as leading extra parameters.

Each clause compiles to two straight-line instruction lists over a
register file:

  match code   -- binds arguments to registers and tests/projects them;
                  it never mutates the subject graph
  build code   -- wires the clause body as constants, inert compounds,
                  and a chain of new thunks, ending in exactly one
                  return instruction

Thunks made by build code are chained in creation order: the first
thunk created is the first rewritten. A register holding a not yet
reduced thunk is "pending"; using it as a cell operand turns that cell
into a hole and points the pending thunk's result link at it.
"""

from dataclasses import dataclass
from typing import NamedTuple

from . import frontend as f


class CompileError(Exception):
    pass


# ---------------------------------------------------------------------------
# instructions

class BindArg(NamedTuple):
    arg: int
    dst: int


class TestLiteral(NamedTuple):
    reg: int
    value: object  # int or str


class TestTag(NamedTuple):
    reg: int
    tag: object  # Combinator of kind "data" (or "builtin" tag)
    sub_arity: int


class Project(NamedTuple):
    reg: int
    field: int
    dst: int


class LoadConst(NamedTuple):
    value: object  # int, str, or Combinator
    dst: int


class MakeCompound(NamedTuple):
    head: int
    args: tuple
    dst: int


class MakeThunk(NamedTuple):
    head: int
    args: tuple
    dst: int
    handler: int | None = None  # register of a handler thunk, or inherit


class MakeHandler(NamedTuple):
    catch: int
    enclosing: int | None  # register of the outer handler thunk, or inherit
    dst: int


class TieHandler(NamedTuple):
    """Give a handler thunk the same continuation and destination as the
    pending thunk whose value it protects."""

    handler: int
    value: int


class ReturnValue(NamedTuple):
    reg: int


class ReturnChain(NamedTuple):
    first: int
    final: int


@dataclass(frozen=True)
class ClauseProgram:
    arity: int
    match_code: tuple
    build_code: tuple
    register_count: int


class Combinator:
    """A named rewrite rule: ordered guarded clauses, a data tag, or a
    host builtin."""

    __slots__ = ("name", "kind", "clauses", "host", "arity", "min_arity")

    def __init__(self, name, kind, clauses=(), host=None, arity=0):
        self.name = name
        self.kind = kind  # "defined" | "data" | "builtin"
        self.clauses = tuple(clauses)
        self.host = host
        self.arity = arity  # builtin host arity
        self.min_arity = min((c.arity for c in self.clauses), default=0)

    def __repr__(self):
        return f"<combinator {self.name}>"


class Program:
    """A compiled module set: the combinator table plus rendering help."""

    def __init__(self, combinators: dict):
        self.combinators = combinators
        self.main = combinators.get("main")
        short: dict[str, str | None] = {}
        for name in combinators:
            last = name.rsplit("::", 1)[-1]
            short[last] = name if short.get(last, name) == name else None
        self.short_names = {k: v for k, v in short.items() if v is not None}


# ---------------------------------------------------------------------------
# lambda lifting

def lift_lambdas(table: dict) -> dict:
    """Hoist nested abstractions to fresh top-level definitions.

    Returns a new declaration table in which every def body is either a
    top-level abstraction or an abstraction-free expression. Lifted
    combinators are named `<parent>/lift<k>` and take their captured
    variables as leading parameters.
    """
    out: dict[str, f.Declared] = {}
    for name, decl in table.items():
        if decl.kind != "def":
            out[name] = decl
            continue
        lifts: list[tuple[str, f.Lam]] = []
        counter = [0]
        body = decl.body
        if isinstance(body, f.Lam):
            body = f.Lam(
                [
                    f.Clause(c.patterns, _lift_expr(c.body, name, counter, lifts))
                    for c in body.clauses
                ]
            )
        else:
            body = _lift_expr(body, name, counter, lifts)
        out[name] = f.Declared(name, "def", body)
        for lift_name, lam in lifts:
            out[lift_name] = f.Declared(lift_name, "def", lam)
    return out


def _lift_expr(e, parent: str, counter: list, lifts: list):
    if isinstance(e, (f.Var, f.Ref, f.IntLit, f.TextLit)):
        return e
    if isinstance(e, f.App):
        return f.App(
            _lift_expr(e.fn, parent, counter, lifts),
            _lift_expr(e.arg, parent, counter, lifts),
        )
    if isinstance(e, f.TryCatch):
        return f.TryCatch(
            _lift_expr(e.body, parent, counter, lifts),
            _lift_expr(e.handler, parent, counter, lifts),
        )
    if isinstance(e, f.Lam):
        clauses = [
            f.Clause(c.patterns, _lift_expr(c.body, parent, counter, lifts))
            for c in e.clauses
        ]
        captured = _free_vars(f.Lam(clauses))
        name = f"{parent}/lift{counter[0]}"
        counter[0] += 1
        lifted = f.Lam(
            [
                f.Clause([f.PVar(v) for v in captured] + c.patterns, c.body)
                for c in clauses
            ]
        )
        lifts.append((name, lifted))
        replacement: f.Expr = f.Ref(name, name)
        for v in captured:
            replacement = f.App(replacement, f.Var(v))
        return replacement
    raise TypeError(e)


def _pattern_vars(p) -> list[str]:
    if isinstance(p, f.PVar):
        return [p.name]
    if isinstance(p, f.PComp):
        out = []
        for s in p.subs:
            out.extend(_pattern_vars(s))
        return out
    return []


def _free_vars(e, bound: frozenset = frozenset(), acc: list | None = None) -> list:
    """Free variables of an expression in first-occurrence order."""
    if acc is None:
        acc = []
    if isinstance(e, f.Var):
        if e.name not in bound and e.name not in acc:
            acc.append(e.name)
    elif isinstance(e, f.App):
        _free_vars(e.fn, bound, acc)
        _free_vars(e.arg, bound, acc)
    elif isinstance(e, f.TryCatch):
        _free_vars(e.body, bound, acc)
        _free_vars(e.handler, bound, acc)
    elif isinstance(e, f.Lam):
        for c in e.clauses:
            binders = frozenset()
            for p in c.patterns:
                binders |= frozenset(_pattern_vars(p))
            _free_vars(c.body, bound | binders, acc)
    return acc


# ---------------------------------------------------------------------------
# clause compilation

class _Ctx:
    def __init__(self, combinators):
        self.combinators = combinators
        self.registers = 0
        self.code: list = []
        self.vars: dict[str, int] = {}
        self.handler: int | None = None
        self.chain: list[int] = []  # registers of chain thunks, creation order

    def alloc(self) -> int:
        r = self.registers
        self.registers += 1
        return r


def compile_clauses(clauses: list, combinators: dict) -> list[ClauseProgram]:
    """Compile one abstraction's clauses, preserving source order."""
    return [_compile_clause(c, combinators) for c in clauses]


def _compile_clause(clause: f.Clause, combinators: dict) -> ClauseProgram:
    ctx = _Ctx(combinators)
    seen: set[str] = set()
    for p in clause.patterns:
        for v in _pattern_vars(p):
            if v in seen:
                raise CompileError(f"duplicate pattern variable {v!r} in clause")
            seen.add(v)

    match_code: list = []
    for i, p in enumerate(clause.patterns):
        r = ctx.alloc()
        match_code.append(BindArg(i, r))
        _compile_pattern(p, r, ctx, match_code)

    _compile_body(clause.body, ctx)
    program = ClauseProgram(
        arity=len(clause.patterns),
        match_code=tuple(match_code),
        build_code=tuple(ctx.code),
        register_count=ctx.registers,
    )
    verify_clause(program)
    return program


def _compile_pattern(p, reg: int, ctx: _Ctx, code: list):
    if isinstance(p, f.PVar):
        ctx.vars[p.name] = reg
    elif isinstance(p, f.PInt):
        code.append(TestLiteral(reg, p.value))
    elif isinstance(p, f.PText):
        code.append(TestLiteral(reg, p.value))
    elif isinstance(p, f.PTag):
        code.append(TestTag(reg, ctx.combinators[p.resolved], 0))
    elif isinstance(p, f.PComp):
        code.append(TestTag(reg, ctx.combinators[p.tag.resolved], len(p.subs)))
        for i, sub in enumerate(p.subs):
            r = ctx.alloc()
            code.append(Project(reg, i, r))
            _compile_pattern(sub, r, ctx, code)
    else:
        raise TypeError(p)


def _is_static(e, ctx: _Ctx) -> bool:
    """True when the expression is a value at wiring time: emitting it
    creates no thunks."""
    if isinstance(e, (f.IntLit, f.TextLit, f.Var)):
        return True
    if isinstance(e, f.Ref):
        return ctx.combinators[e.resolved].kind != "defined"
    if isinstance(e, f.TryCatch):
        return _is_static(e.body, ctx)
    if isinstance(e, f.App):
        head, args = _flatten(e)
        if not all(_is_static(a, ctx) for a in args):
            return False
        if isinstance(head, (f.IntLit, f.TextLit)):
            return True
        if isinstance(head, f.Ref):
            return ctx.combinators[head.resolved].kind == "data"
        return False
    return False


def _flatten(e):
    args = []
    while isinstance(e, f.App):
        args.append(e.arg)
        e = e.fn
    args.reverse()
    return e, args


def _compile_body(body, ctx: _Ctx):
    top = _emit(body, ctx)
    if ctx.chain:
        ctx.code.append(ReturnChain(ctx.chain[0], ctx.chain[-1]))
    else:
        ctx.code.append(ReturnValue(top))


def _emit(e, ctx: _Ctx, head_pos: bool = False) -> int:
    if isinstance(e, f.IntLit):
        r = ctx.alloc()
        ctx.code.append(LoadConst(e.value, r))
        return r
    if isinstance(e, f.TextLit):
        r = ctx.alloc()
        ctx.code.append(LoadConst(e.value, r))
        return r
    if isinstance(e, f.Var):
        return ctx.vars[e.name]
    if isinstance(e, f.Ref):
        comb = ctx.combinators[e.resolved]
        r = ctx.alloc()
        ctx.code.append(LoadConst(comb, r))
        if not head_pos and comb.kind == "defined":
            # a bare defined-combinator reference is itself a redex
            d = ctx.alloc()
            ctx.code.append(MakeThunk(r, (), d, ctx.handler))
            ctx.chain.append(d)
            return d
        return r
    if isinstance(e, f.TryCatch):
        if _is_static(e.body, ctx):
            # nothing in the protected expression can raise; the handler
            # expression is never needed
            return _emit(e.body, ctx, head_pos)
        catch_reg = _emit(e.handler, ctx)
        ht = ctx.alloc()
        ctx.code.append(MakeHandler(catch_reg, ctx.handler, ht))
        outer = ctx.handler
        ctx.handler = ht
        value_reg = _emit(e.body, ctx)
        ctx.handler = outer
        ctx.code.append(TieHandler(ht, value_reg))
        return value_reg
    if isinstance(e, f.App):
        head, args = _flatten(e)
        # arguments are emitted right to left: thunks run in creation
        # order, and the rightmost argument must reduce first
        arg_regs: list[int] = [0] * len(args)
        for i in range(len(args) - 1, -1, -1):
            arg_regs[i] = _emit(args[i], ctx)
        head_reg = _emit(head, ctx, head_pos=True)
        static_head = (
            isinstance(head, (f.IntLit, f.TextLit))
            or (
                isinstance(head, f.Ref)
                and ctx.combinators[head.resolved].kind == "data"
            )
        )
        pending = set(ctx.chain)
        if static_head and not any(r in pending for r in arg_regs):
            d = ctx.alloc()
            ctx.code.append(MakeCompound(head_reg, tuple(arg_regs), d))
            return d
        d = ctx.alloc()
        ctx.code.append(MakeThunk(head_reg, tuple(arg_regs), d, ctx.handler))
        ctx.chain.append(d)
        return d
    raise TypeError(e)


# ---------------------------------------------------------------------------
# static verification
#
# Build code is trusted by the engine's splice loop, so every clause is
# checked once at compile time: registers are written before read, tag
# projections stay in range, pending thunks are consumed exactly once,
# and the chain returned is exactly the thunks created, in order.

def verify_clause(program: ClauseProgram) -> None:
    written: set[int] = set()
    tag_arity: dict[int, int] = {}
    pending: dict[int, bool] = {}  # chain-thunk register -> consumed?
    handlers: set[int] = set()
    chain: list[int] = []

    def read(r):
        if r not in written:
            raise CompileError(f"register r{r} read before write")
        if pending.get(r):
            raise CompileError(f"pending thunk r{r} used twice")

    for ins in program.match_code:
        kind = type(ins)
        if kind is BindArg:
            if not 0 <= ins.arg < program.arity:
                raise CompileError("argument index out of range")
            written.add(ins.dst)
        elif kind is TestLiteral:
            read(ins.reg)
        elif kind is TestTag:
            read(ins.reg)
            tag_arity[ins.reg] = ins.sub_arity
        elif kind is Project:
            read(ins.reg)
            if ins.reg not in tag_arity:
                raise CompileError("projection without a preceding tag test")
            if not 0 <= ins.field < tag_arity[ins.reg]:
                raise CompileError("projection field out of range")
            written.add(ins.dst)
        else:
            raise CompileError(f"{kind.__name__} not allowed in match code")

    if not program.build_code:
        raise CompileError("empty build code")
    for where, ins in enumerate(program.build_code):
        kind = type(ins)
        last = where == len(program.build_code) - 1
        if kind in (ReturnValue, ReturnChain) and not last:
            raise CompileError("return instruction before end of build code")
        if kind is LoadConst:
            written.add(ins.dst)
        elif kind is MakeCompound:
            read(ins.head)
            for r in ins.args:
                read(r)
            if ins.head in pending or any(r in pending for r in ins.args):
                raise CompileError("compound may not contain pending thunks")
            written.add(ins.dst)
        elif kind is MakeThunk:
            for r in (ins.head, *ins.args):
                if r not in written:
                    raise CompileError(f"register r{r} read before write")
                if pending.get(r):
                    raise CompileError(f"pending thunk r{r} used twice")
                if r in pending:
                    pending[r] = True  # consumed: its result fills this cell
            if ins.handler is not None and ins.handler not in handlers:
                raise CompileError("thunk handler operand is not a handler")
            written.add(ins.dst)
            pending[ins.dst] = False
            chain.append(ins.dst)
        elif kind is MakeHandler:
            read(ins.catch)
            if ins.catch in pending:
                pending[ins.catch] = True
            if ins.enclosing is not None and ins.enclosing not in handlers:
                raise CompileError("enclosing operand is not a handler")
            written.add(ins.dst)
            handlers.add(ins.dst)
        elif kind is TieHandler:
            if ins.handler not in handlers:
                raise CompileError("tie on a non-handler register")
            if ins.value not in pending:
                raise CompileError("tie target is not a pending thunk")
        elif kind is ReturnValue:
            read(ins.reg)
            if chain:
                raise CompileError("value return with unconsumed chain thunks")
        elif kind is ReturnChain:
            if not chain:
                raise CompileError("chain return without chain thunks")
            if ins.first != chain[0] or ins.final != chain[-1]:
                raise CompileError("chain return endpoints mismatch")
            if pending.get(ins.final):
                raise CompileError("final chain thunk already consumed")
            for r in chain[:-1]:
                if not pending[r]:
                    raise CompileError(f"chain thunk r{r} never consumed")
        else:
            raise CompileError(f"{kind.__name__} not allowed in build code")
    if type(program.build_code[-1]) not in (ReturnValue, ReturnChain):
        raise CompileError("build code must end in a return")
    if program.register_count < (max(written, default=-1) + 1):
        raise CompileError("register count below highest register used")


# ---------------------------------------------------------------------------
# whole-program compilation

def compile_program(table: dict, builtins: dict) -> Program:
    """Compile a lifted declaration table into a Program.

    `builtins` maps qualified names to ready-made host Combinators; the
    table must already contain matching entries (from resolution).
    """
    combinators: dict[str, Combinator] = {}
    for name, decl in table.items():
        if decl.kind == "builtin":
            combinators[name] = builtins[name]
        elif decl.kind == "data":
            combinators[name] = builtins.get(name) or Combinator(name, "data")
        else:
            combinators[name] = Combinator(name, "defined")

    for name, decl in table.items():
        if decl.kind != "def":
            continue
        comb = combinators[name]
        body = decl.body
        if isinstance(body, f.Lam):
            clauses = compile_clauses(body.clauses, combinators)
        else:
            ctx = _Ctx(combinators)
            _compile_body(body, ctx)
            program = ClauseProgram(0, (), tuple(ctx.code), ctx.registers)
            verify_clause(program)
            clauses = [program]
        comb.clauses = tuple(clauses)
        comb.min_arity = min(c.arity for c in comb.clauses)

    return Program(combinators)


# ---------------------------------------------------------------------------
# disassembly

def _const_text(value) -> str:
    if isinstance(value, bool):
        raise TypeError(value)
    if isinstance(value, int):
        return f"int {value}"
    if isinstance(value, str):
        quoted = value.replace("\\", "\\\\").replace('"', '\\"')
        quoted = quoted.replace("\n", "\\n").replace("\t", "\\t")
        return f'text "{quoted}"'
    return f"comb {value.name}"


def _reg_list(regs) -> str:
    return "[" + ", ".join(f"r{r}" for r in regs) + "]"


def disassemble(comb: Combinator) -> str:
    """Render one combinator as a stable, diff-friendly listing."""
    lines = [f"combinator {comb.name}"]
    if comb.kind == "data":
        lines.append("  data-tag, 0 clauses")
    elif comb.kind == "builtin":
        lines.append("  builtin")
    else:
        for i, clause in enumerate(comb.clauses):
            lines.append(
                f"  clause {i}: arity {clause.arity}, registers {clause.register_count}"
            )
            lines.append("    match:")
            for ins in clause.match_code:
                lines.append("      " + _ins_text(ins))
            lines.append("    build:")
            for ins in clause.build_code:
                lines.append("      " + _ins_text(ins))
    return "\n".join(lines) + "\n"


def _ins_text(ins) -> str:
    kind = type(ins)
    if kind is BindArg:
        return f"bind_arg      {ins.arg} -> r{ins.dst}"
    if kind is TestLiteral:
        return f"test_literal  r{ins.reg}, {_const_text(ins.value)}"
    if kind is TestTag:
        return f"test_tag      r{ins.reg}, {ins.tag.name}, {ins.sub_arity}"
    if kind is Project:
        return f"project       r{ins.reg}.{ins.field} -> r{ins.dst}"
    if kind is LoadConst:
        return f"load_const    {_const_text(ins.value)} -> r{ins.dst}"
    if kind is MakeCompound:
        return f"make_compound r{ins.head} {_reg_list(ins.args)} -> r{ins.dst}"
    if kind is MakeThunk:
        h = f" handler r{ins.handler}" if ins.handler is not None else ""
        return f"make_thunk    r{ins.head} {_reg_list(ins.args)} -> r{ins.dst}{h}"
    if kind is MakeHandler:
        e = f" enclosing r{ins.enclosing}" if ins.enclosing is not None else ""
        return f"make_handler  r{ins.catch}{e} -> r{ins.dst}"
    if kind is TieHandler:
        return f"tie_handler   r{ins.handler}, r{ins.value}"
    if kind is ReturnValue:
        return f"return_value  r{ins.reg}"
    if kind is ReturnChain:
        return f"return_chain  r{ins.first} .. r{ins.final}"
    raise TypeError(ins)


def disassemble_program(program: Program) -> str:
    return "\n".join(disassemble(c) for c in program.combinators.values())


# ---------------------------------------------------------------------------
# reassembly (round-trip check for listings)

def assemble(listing: str, combinators: dict) -> list[Combinator]:
    """Parse disassembly text back into combinators.

    Constant and tag operands are resolved against `combinators`;
    defined combinators come back with structurally equal clauses.
    """
    out: list[Combinator] = []
    lines = [ln for ln in listing.splitlines() if ln.strip()]
    i = 0

    def parse_reg(text: str) -> int:
        if not text.startswith("r"):
            raise ValueError(f"bad register {text!r}")
        return int(text[1:])

    def parse_const(text: str):
        if text.startswith("int "):
            return int(text[4:])
        if text.startswith("text "):
            body = text[6:-1]
            return (
                body.replace("\\n", "\n")
                .replace("\\t", "\t")
                .replace('\\"', '"')
                .replace("\\\\", "\\")
            )
        if text.startswith("comb "):
            return combinators[text[5:]]
        raise ValueError(f"bad constant {text!r}")

    def parse_regs(text: str) -> tuple:
        inner = text.strip()[1:-1].strip()
        if not inner:
            return ()
        return tuple(parse_reg(t.strip()) for t in inner.split(","))

    def parse_ins(text: str):
        op, _, rest = text.partition(" ")
        rest = rest.strip()
        if op == "bind_arg":
            a, _, d = rest.partition("->")
            return BindArg(int(a.strip()), parse_reg(d.strip()))
        if op == "test_literal":
            r, _, c = rest.partition(",")
            return TestLiteral(parse_reg(r.strip()), parse_const(c.strip()))
        if op == "test_tag":
            r, tag, n = (t.strip() for t in rest.split(","))
            return TestTag(parse_reg(r), combinators[tag], int(n))
        if op == "project":
            src, _, d = rest.partition("->")
            r, _, fld = src.strip().partition(".")
            return Project(parse_reg(r), int(fld), parse_reg(d.strip()))
        if op == "load_const":
            c, _, d = rest.rpartition("->")
            return LoadConst(parse_const(c.strip()), parse_reg(d.strip()))
        if op == "make_compound":
            head, _, rest2 = rest.partition(" ")
            regs, _, d = rest2.partition("->")
            return MakeCompound(parse_reg(head), parse_regs(regs), parse_reg(d.strip()))
        if op == "make_thunk":
            head, _, rest2 = rest.partition(" ")
            regs, _, d = rest2.partition("->")
            d = d.strip()
            handler = None
            if " handler " in d:
                d, _, h = d.partition(" handler ")
                handler = parse_reg(h.strip())
                d = d.strip()
            return MakeThunk(parse_reg(head), parse_regs(regs), parse_reg(d), handler)
        if op == "make_handler":
            src, _, d = rest.partition("->")
            src = src.strip()
            enclosing = None
            if " enclosing " in src:
                src, _, e = src.partition(" enclosing ")
                enclosing = parse_reg(e.strip())
            return MakeHandler(parse_reg(src.strip()), enclosing, parse_reg(d.strip()))
        if op == "tie_handler":
            h, _, v = rest.partition(",")
            return TieHandler(parse_reg(h.strip()), parse_reg(v.strip()))
        if op == "return_value":
            return ReturnValue(parse_reg(rest))
        if op == "return_chain":
            a, _, b = rest.partition("..")
            return ReturnChain(parse_reg(a.strip()), parse_reg(b.strip()))
        raise ValueError(f"bad instruction {text!r}")

    while i < len(lines):
        header = lines[i].strip()
        if not header.startswith("combinator "):
            raise ValueError(f"expected combinator header, got {header!r}")
        name = header[len("combinator "):]
        i += 1
        if i < len(lines) and lines[i].strip() == "data-tag, 0 clauses":
            out.append(Combinator(name, "data"))
            i += 1
            continue
        if i < len(lines) and lines[i].strip() == "builtin":
            existing = combinators.get(name)
            out.append(existing or Combinator(name, "builtin"))
            i += 1
            continue
        clauses = []
        while i < len(lines) and lines[i].strip().startswith("clause "):
            head = lines[i].strip()
            arity = int(head.split("arity ")[1].split(",")[0])
            registers = int(head.split("registers ")[1])
            i += 1
            assert lines[i].strip() == "match:"
            i += 1
            match_code = []
            while lines[i].strip() != "build:":
                match_code.append(parse_ins(lines[i].strip()))
                i += 1
            i += 1
            build_code = []
            while i < len(lines) and lines[i].startswith("      "):
                build_code.append(parse_ins(lines[i].strip()))
                i += 1
            clauses.append(
                ClauseProgram(arity, tuple(match_code), tuple(build_code), registers)
            )
        out.append(Combinator(name, "defined", clauses))
    return out
