"""The trampoline: rewrite the root redex until the chain is exhausted.

One step rewrites the thunk at the root link in one of three ways:

  (a) its head combinator matches a clause whose body is a plain value:
      the value is written to the thunk's result link and the root
      advances along the next link;
  (b) the matched clause body is a thunk chain: the chain is spliced in
      (its final thunk inherits this thunk's links) and the root moves
      to the chain's first redex;
  (c) nothing rewrites (data tag or literal head, no matching clause,
      or too few arguments): the cells become an inert compound, which
      is a value, and the root advances.

The loop never recurses into the host stack; a raise rewires the root
to the nearest handler thunk, and parallel branches are separate
rewrite states joined by a barrier.
"""

import sys
import threading
from typing import NamedTuple

from .compiler import (
    BindArg,
    Combinator,
    LoadConst,
    MakeCompound,
    MakeHandler,
    MakeThunk,
    Project,
    ReturnChain,
    ReturnValue,
    TestLiteral,
    TestTag,
    TieHandler,
)
from .graph import (
    HOLE,
    SINK,
    Compound,
    InternalFault,
    RewriteState,
    Thunk,
    fold_tally,
    render,
    write_result,
)


class Raise:
    """Host-builtin result meaning: raise this value at the current thunk."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


class MatchOutcome(NamedTuple):
    kind: str  # "matched" | "no-clause" | "too-few-args"
    clause_index: int | None = None
    registers: list | None = None


class Outcome(NamedTuple):
    kind: str  # "value" | "exception" | "step-limit"
    payload: object = None


# ---------------------------------------------------------------------------
# builtins (the System namespace)

def _int_op(name, fn):
    def host(state, thunk, args):
        a, b = args
        if type(a) is int and type(b) is int:
            return fn(a, b)
        return Raise(f"{name}: expects integers")

    return host


def _guarded_div(name, fn):
    def host(state, thunk, args):
        a, b = args
        if type(a) is int and type(b) is int:
            if b == 0:
                return Raise(f"{name}: division by zero")
            return fn(a, b)
        return Raise(f"{name}: expects integers")

    return host


def _compare(name, fn):
    def host(state, thunk, args):
        a, b = args
        if type(a) is int and type(b) is int:
            return TRUE if fn(a, b) else FALSE
        return Raise(f"{name}: expects integers")

    return host


def _inc(state, thunk, args):
    (a,) = args
    if type(a) is int:
        return a + 1
    return Raise("System::inc: expects an integer")


def _print(state, thunk, args):
    short = state.program.short_names if state.program is not None else None
    sys.stdout.write(render(args[0], short) + "\n")
    state.printed = True
    return NOP


def _throw(state, thunk, args):
    return Raise(args[0])


def _par(state, thunk, args):
    return spawn_parallel(state, args)


NOP = Combinator("System::nop", "data")
TUPLE = Combinator("System::tuple", "data")
TRUE = Combinator("System::true", "data")
FALSE = Combinator("System::false", "data")

BUILTINS: dict[str, Combinator] = {}
for _c in (NOP, TUPLE, TRUE, FALSE):
    BUILTINS[_c.name] = _c
for _name, _arity, _host in [
    ("System::+", 2, _int_op("System::+", lambda a, b: a + b)),
    ("System::-", 2, _int_op("System::-", lambda a, b: a - b)),
    ("System::*", 2, _int_op("System::*", lambda a, b: a * b)),
    ("System::mul", 2, _int_op("System::mul", lambda a, b: a * b)),
    ("System::div", 2, _guarded_div("System::div", lambda a, b: a // b)),
    ("System::mod", 2, _guarded_div("System::mod", lambda a, b: a % b)),
    ("System::inc", 1, _inc),
    ("System::<", 2, _compare("System::<", lambda a, b: a < b)),
    ("System::<=", 2, _compare("System::<=", lambda a, b: a <= b)),
    ("System::==", 2, _compare("System::==", lambda a, b: a == b)),
    ("System::print", 1, _print),
    ("System::throw", 1, _throw),
    ("System::par", 2, _par),
]:
    BUILTINS[_name] = Combinator(_name, "builtin", host=_host, arity=_arity)

# kinds fed to the resolver so System names resolve like declared ones
BUILTIN_KINDS = {name: comb.kind for name, comb in BUILTINS.items()}


# ---------------------------------------------------------------------------
# clause matching

def match_clauses(comb: Combinator, args: list) -> MatchOutcome:
    """Try the combinator's clauses in source order against reduced
    arguments.

    A clause of arity k is tried only when len(args) >= k; the first
    whose tests all pass wins. With no clause even tried the
    application is a partial one (too few args); with clauses tried
    but none passing it simply does not rewrite.
    """
    n = len(args)
    for index, clause in enumerate(comb.clauses):
        if n < clause.arity:
            continue
        regs = [None] * clause.register_count
        ok = True
        for ins in clause.match_code:
            t = type(ins)
            if t is BindArg:
                regs[ins.dst] = args[ins.arg]
            elif t is TestLiteral:
                v = regs[ins.reg]
                if type(v) is not type(ins.value) or v != ins.value:
                    ok = False
                    break
            elif t is TestTag:
                v = regs[ins.reg]
                if ins.sub_arity == 0:
                    if v is not ins.tag:
                        ok = False
                        break
                elif (
                    type(v) is not Compound
                    or v.head is not ins.tag
                    or len(v.args) != ins.sub_arity
                ):
                    ok = False
                    break
            else:  # Project
                regs[ins.dst] = regs[ins.reg].args[ins.field]
        if ok:
            return MatchOutcome("matched", index, regs)
    if n < comb.min_arity:
        return MatchOutcome("too-few-args")
    return MatchOutcome("no-clause")


# ---------------------------------------------------------------------------
# build-code execution (the splice of a clause body)

def execute_build(state, build_code, regs, target, target_slot, next_, handler, surplus):
    """Run a clause's build code, splicing its thunk chain into the graph.

    The final thunk (or returned value) inherits `target`/`next_`; when
    `surplus` arguments remain the result is applied to them through a
    fresh thunk. Sets state.root to whatever must rewrite next.
    """
    pending: dict[int, Thunk] = {}
    ties: list = []
    prev = None
    first = None
    for ins in build_code:
        t = type(ins)
        if t is LoadConst:
            regs[ins.dst] = ins.value
        elif t is MakeThunk:
            srcs = (ins.head,) + ins.args
            cells = [HOLE] * len(srcs)
            nt = Thunk(
                cells,
                next=SINK,
                target=None,
                target_slot=0,
                handler=regs[ins.handler] if ins.handler is not None else handler,
            )
            for idx, r in enumerate(srcs):
                child = pending.pop(r, None)
                if child is None:
                    cells[idx] = regs[r]
                else:
                    child.target = nt
                    child.target_slot = idx
            if prev is None:
                first = nt
            else:
                prev.next = nt
            prev = nt
            regs[ins.dst] = nt
            pending[ins.dst] = nt
        elif t is MakeCompound:
            regs[ins.dst] = Compound(
                regs[ins.head], tuple(regs[r] for r in ins.args)
            )
        elif t is MakeHandler:
            ht = Thunk(
                [HOLE, HOLE],
                next=SINK,
                target=None,
                target_slot=0,
                handler=regs[ins.enclosing] if ins.enclosing is not None else handler,
            )
            child = pending.pop(ins.catch, None)
            if child is None:
                ht.cells[0] = regs[ins.catch]
            else:
                child.target = ht
                child.target_slot = 0
            regs[ins.dst] = ht
        elif t is TieHandler:
            ties.append((regs[ins.handler], regs[ins.value]))
        elif t is ReturnValue:
            value = regs[ins.reg]
            if surplus:
                state.root = Thunk(
                    [value] + surplus,
                    next=next_,
                    target=target,
                    target_slot=target_slot,
                    handler=handler,
                )
            else:
                write_result(target, target_slot, value)
                state.root = next_
            return
        else:  # ReturnChain
            final = regs[ins.final]
            if surplus:
                app = Thunk(
                    [HOLE] + surplus,
                    next=next_,
                    target=target,
                    target_slot=target_slot,
                    handler=handler,
                )
                final.next = app
                final.target = app
                final.target_slot = 0
            else:
                final.next = next_
                final.target = target
                final.target_slot = target_slot
            for ht, p in ties:
                ht.next = p.next
                ht.target = p.target
                ht.target_slot = p.target_slot
            state.root = first
            return
    raise InternalFault("build code fell off the end")


# ---------------------------------------------------------------------------
# the rewrite step

def step(state: RewriteState) -> None:
    """Rewrite the root thunk once."""
    thunk = state.root
    cells = thunk.cells
    if HOLE in cells:
        raise InternalFault(f"thunk #{thunk.serial} became root with unfilled cells")
    head = cells[0]
    args = list(cells[1:])
    while type(head) is Compound:
        # a stuck application regaining arguments: flatten the spine
        args = list(head.args) + args
        head = head.head
    state.steps += 1

    if type(head) is Combinator:
        kind = head.kind
        if kind == "defined":
            outcome = match_clauses(head, args)
            if outcome.kind == "matched":
                clause = head.clauses[outcome.clause_index]
                execute_build(
                    state,
                    clause.build_code,
                    outcome.registers,
                    thunk.target,
                    thunk.target_slot,
                    thunk.next,
                    thunk.handler,
                    args[clause.arity :],
                )
                return
        elif kind == "builtin":
            if len(args) >= head.arity:
                used = args[: head.arity]
                surplus = args[head.arity :]
                result = head.host(state, thunk, used)
                if type(result) is Raise:
                    raise_exception(state, result.value)
                elif surplus:
                    state.root = Thunk(
                        [result] + surplus,
                        next=thunk.next,
                        target=thunk.target,
                        target_slot=thunk.target_slot,
                        handler=thunk.handler,
                    )
                else:
                    write_result(thunk.target, thunk.target_slot, result)
                    state.root = thunk.next
                return

    # case (c): the application is inert data
    value = Compound(head, tuple(args)) if args else head
    write_result(thunk.target, thunk.target_slot, value)
    state.root = thunk.next


def raise_exception(state: RewriteState, value) -> None:
    """Raise a value at the current root thunk.

    The chain from the root to the handler's continuation is dropped
    (reference counting reclaims it); the root moves to the handler
    thunk, now holding the raised value. With no handler installed the
    run ends as an uncaught exception.
    """
    ht = state.root.handler
    if ht is None:
        state.exception = value
        state.root = SINK
        return
    write_result(ht, 1, value)
    state.root = ht


# ---------------------------------------------------------------------------
# the trampoline loop

def run(state: RewriteState, step_limit: int | None = None, on_boundary=None) -> Outcome:
    """Iterate step() until the chain reaches the runtime sink.

    Host call depth stays constant over any number of steps. The
    optional `on_boundary` callback observes the state before the first
    step and after every step; checked states verify graph invariants
    at the same boundaries.
    """
    checked = state.checked
    if checked:
        _assert_invariants(state)
    if on_boundary is not None:
        on_boundary(state)
    while state.root is not SINK:
        if step_limit is not None and state.steps >= step_limit:
            return Outcome("step-limit", state.steps)
        step(state)
        if checked:
            _assert_invariants(state)
        if on_boundary is not None:
            on_boundary(state)
    if state.exception is not HOLE:
        return Outcome("exception", state.exception)
    return Outcome("value", state.result)


def _assert_invariants(state):
    from .inspect import check

    report = check(state)
    if report.violations:
        raise InternalFault(
            "graph invariant violated: "
            + "; ".join(f"{node}: {rule}: {what}" for node, rule, what in report.violations)
        )


def initial_state(program, checked: bool = False, entry: str = "main") -> RewriteState:
    """Wire a state from a nullary entry combinator (normally `main`).

    Wiring means splicing the entry clause's body directly, so the
    first snapshot already shows the term's thunk chain.
    """
    comb = program.combinators[entry]
    state = RewriteState(program, checked)
    clause = comb.clauses[0]
    regs = [None] * clause.register_count
    execute_build(state, clause.build_code, regs, state, 0, SINK, None, [])
    return state


# ---------------------------------------------------------------------------
# parallel branches

def spawn_parallel(state: RewriteState, branches):
    """Run two branch values in parallel and join on both results.

    Each branch value is applied to `nop` in its own rewrite state on
    its own thread. The parent blocks at the join barrier; the result
    is the inert compound `(tuple left right)`. An exception escaping a
    branch is re-raised at the parent's current thunk, the left branch
    winning when both raise.
    """
    states = []
    for fn_value in branches:
        st = RewriteState(program=state.program, checked=state.checked)
        st.root = Thunk(
            [fn_value, NOP], next=SINK, target=st, target_slot=0, handler=None
        )
        states.append(st)

    errors: list = []

    def runner(st):
        try:
            run(st)
        except BaseException as exc:  # host bug: surface it in the parent
            errors.append(exc)
        finally:
            fold_tally()

    threads = [threading.Thread(target=runner, args=(st,)) for st in states]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    for st in states:
        state.printed = state.printed or st.printed
    for st in states:
        if st.exception is not HOLE:
            return Raise(st.exception)
    return Compound(TUPLE, (states[0].result, states[1].result))
