"""Runtime value model: reduced nodes, thunks with control links, wiring.

Reduced values are represented directly: Python ints and strs for
literals, Combinator objects (from the compiler) for combinator and
data-tag references, and Compound for inert applications. A Thunk is a
cell array (cell 0 the head, cells 1..n the arguments) extended at the
front with three control links:

  * next     -- the thunk to rewrite after this one (ends at SINK)
  * target   -- (receiver, slot) where this thunk's reduced value lands
  * handler  -- the handler thunk to enter if this thunk raises

The chain of `next` links makes evaluation order explicit: arguments
run before their application, rightmost first. There is no evaluation
stack, and because every link points "downward" (the whole structure
stays acyclic) plain reference counting reclaims storage; nothing here
ever needs a mark/collect pass.
"""

import itertools
import threading


class InternalFault(Exception):
    """A runtime-invariant violation; always a bug, never user error."""


class _Hole:
    __slots__ = ()

    def __repr__(self):
        return "HOLE"


class _RuntimeSink:
    """Terminator of every redex chain: control returns to the host."""

    __slots__ = ()

    def __repr__(self):
        return "SINK"


HOLE = _Hole()
SINK = _RuntimeSink()

_serial = itertools.count()


# ---------------------------------------------------------------------------
# allocation accounting
#
# Thunks and Compounds are the graph's storage; live_nodes() tracks them so
# tests can assert that completed reductions return the heap to its
# baseline through reference counting alone. The hot path must stay
# lock-free: each thread tallies its own births/deaths, and a thread that
# finishes (a parallel branch) folds its tally into a shared total.

class _Tally(threading.local):
    def __init__(self):
        self.born = 0
        self.died = 0


_tally = _Tally()
_folded = [0]
_fold_lock = threading.Lock()


def live_nodes() -> int:
    """Number of currently allocated Thunks and Compounds.

    Meaningful at quiescent points (no other thread mid-rewrite).
    """
    return _folded[0] + _tally.born - _tally.died


def fold_tally():
    """Fold the calling thread's allocation tally into the shared total.

    Must be called by a finished branch thread before it is joined.
    """
    with _fold_lock:
        _folded[0] += _tally.born - _tally.died
    _tally.born = 0
    _tally.died = 0


# ---------------------------------------------------------------------------
# nodes

class Compound:
    """An inert application: a reduced head applied to reduced arguments.

    Heads are never Compounds themselves (spines stay flat) and the
    argument tuple is non-empty; a zero-argument application is just
    the head node.
    """

    __slots__ = ("head", "args", "serial")

    def __init__(self, head, args: tuple):
        self.head = head
        self.args = args
        self.serial = next(_serial)
        _tally.born += 1

    def __del__(self, _tally=_tally):
        try:
            _tally.died += 1
        except Exception:
            pass  # interpreter shutdown

    def __repr__(self):
        return f"Compound({self.head!r}, {self.args!r})"


class Thunk:
    """A pending application plus its control links."""

    __slots__ = ("next", "target", "target_slot", "handler", "cells", "serial")

    def __init__(self, cells, next=SINK, target=None, target_slot=0, handler=None):
        self.next = next
        self.target = target
        self.target_slot = target_slot
        self.handler = handler
        self.cells = cells
        self.serial = next_serial()
        _tally.born += 1

    def __del__(self, _tally=_tally):
        try:
            _tally.died += 1
        except Exception:
            pass

    def __repr__(self):
        return f"Thunk#{self.serial}({self.cells!r})"


def next_serial() -> int:
    return next(_serial)


class RewriteState:
    """One reduction in progress: the root link plus bookkeeping."""

    __slots__ = (
        "root",
        "result",
        "exception",
        "steps",
        "program",
        "checked",
        "printed",
        "origin",
    )

    def __init__(self, program=None, checked: bool = False):
        self.root = SINK
        self.result = HOLE  # HOLE until the final value is written
        self.exception = HOLE  # HOLE unless an uncaught raise ended the run
        self.steps = 0
        self.program = program
        self.checked = checked
        self.printed = False
        self.origin = next(_serial)  # rebases node labels for snapshots

    @property
    def done(self) -> bool:
        return self.root is SINK

    def __repr__(self):
        return f"RewriteState(steps={self.steps}, root={self.root!r})"


def write_result(receiver, slot: int, value) -> None:
    """Store a reduced value into a waiting cell.

    The receiver is a Thunk (store into cells[slot]) or a RewriteState
    (store as the final result). Each cell is written exactly once;
    writing a filled cell is an internal fault.
    """
    if type(receiver) is RewriteState:
        if receiver.result is not HOLE:
            raise InternalFault("final result written twice")
        receiver.result = value
        return
    cells = receiver.cells
    if cells[slot] is not HOLE:
        raise InternalFault(
            f"cell {slot} of thunk #{receiver.serial} written twice"
        )
    cells[slot] = value


# ---------------------------------------------------------------------------
# wiring expressions into thunk chains

def _is_forced_ref(node) -> bool:
    # References to defined combinators are redexes wherever they appear:
    # a bare `loop` must evaluate (possibly to itself as a partial
    # application). Data tags and builtins are values.
    return getattr(node, "kind", None) == "defined"


def wire_term(expr, table, target, target_slot, continuation, handler):
    """Wire a closed, abstraction-free expression into a thunk chain.

    `table` maps qualified names to Combinator objects. Returns the
    first redex to rewrite; if the expression is already reduced its
    value is written to the target immediately and `continuation` is
    returned unchanged. Arguments evaluate before their application,
    rightmost first; every created thunk carries `handler`.
    """
    from . import frontend as f

    if isinstance(expr, f.IntLit):
        write_result(target, target_slot, expr.value)
        return continuation
    if isinstance(expr, f.TextLit):
        write_result(target, target_slot, expr.value)
        return continuation
    if isinstance(expr, f.Ref):
        comb = table[expr.resolved]
        if _is_forced_ref(comb):
            return Thunk(
                [comb], next=continuation, target=target,
                target_slot=target_slot, handler=handler,
            )
        write_result(target, target_slot, comb)
        return continuation
    if isinstance(expr, f.TryCatch):
        # the handler thunk shares the protected expression's destination
        # and continuation; it runs only if entered by a raise
        ht = Thunk(
            [HOLE, HOLE], next=continuation, target=target,
            target_slot=target_slot, handler=handler,
        )
        first = wire_term(expr.body, table, target, target_slot, continuation, ht)
        return wire_term(expr.handler, table, ht, 0, first, handler)
    if isinstance(expr, f.App):
        head, args = _flatten_spine(expr)
        cells = [HOLE] * (1 + len(args))
        thunk = Thunk(cells, next=continuation, target=target,
                      target_slot=target_slot, handler=handler)
        first = thunk
        for i, sub in enumerate([head] + args):
            first = wire_term(sub, table, thunk, i, first, handler)
        return first
    raise InternalFault(f"cannot wire {type(expr).__name__}")


def _flatten_spine(expr):
    from . import frontend as f

    args = []
    while isinstance(expr, f.App):
        args.append(expr.arg)
        expr = expr.fn
    args.reverse()
    return expr, args


# ---------------------------------------------------------------------------
# rendering reduced values

class _Text:
    """Literal fragment on the render stack (never a runtime value)."""

    __slots__ = ("text",)

    def __init__(self, text):
        self.text = text


def render(value, short_names: dict | None = None) -> str:
    """Render a reduced node as source-like text.

    Compounds print as parenthesized juxtaposition; combinator and tag
    names print unqualified when `short_names` marks them unambiguous.
    Iterative, so arbitrarily deep results render without host recursion.
    """
    out: list[str] = []
    stack = [value]
    while stack:
        item = stack.pop()
        if type(item) is _Text:
            out.append(item.text)
        elif type(item) is Compound:
            stack.append(_Text(")"))
            for arg in reversed(item.args):
                stack.append(arg)
                stack.append(_Text(" "))
            stack.append(item.head)
            stack.append(_Text("("))
        elif type(item) is int:
            out.append(str(item))
        elif type(item) is str:
            out.append(_quote_text(item))
        elif item is HOLE:
            out.append("_")
        else:
            # combinator or data tag
            name = getattr(item, "name", None)
            if name is None:
                out.append(repr(item))
            else:
                short = name.rsplit("::", 1)[-1]
                if short_names is not None and short_names.get(short) == name:
                    out.append(short)
                else:
                    out.append(name)
    return "".join(out)


def _quote_text(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'
