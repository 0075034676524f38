"""Graph inspection: runtime invariant checks and DOT snapshots.

check() verifies, at a step boundary, that the live graph is a
directed acyclic graph, that the redex chain from the root is a simple
path ending at the runtime sink, and that nothing reachable through a
filled cell is still a thunk. These hold inductively over rewriting;
checked mode re-verifies them after every step.

emit_dot() renders the state in one of three styles: `standard` (the
application tree with explicit @ nodes), `thunked` (cell arrays with
plain value links), and `twisted` (cell arrays plus control links:
next edges bold, result-destination edges dashed, handler edges
dotted, and the root marked `*`).
"""

from dataclasses import dataclass, field

from .graph import HOLE, SINK, Compound, RewriteState, Thunk, render


@dataclass
class GraphReport:
    acyclic: bool = True
    chain_linear: bool = True
    reduced_pure: bool = True
    tree: bool = True  # informational: acyclic plus single incoming link
    violations: list = field(default_factory=list)
    node_count: int = 0
    edge_count: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class DotSnapshot:
    style: str
    text: str
    step_index: int


def _is_node(obj) -> bool:
    return obj is not None and obj is not SINK and obj is not HOLE and not isinstance(
        obj, RewriteState
    )


def _edges(node) -> list:
    """Typed outgoing links of a node, in canonical order."""
    out = []
    if type(node) is Thunk:
        for i, cell in enumerate(node.cells):
            if cell is not HOLE:
                out.append(("cell", i, cell))
        if type(node.next) is Thunk:
            out.append(("next", -1, node.next))
        if type(node.target) is Thunk:
            out.append(("target", node.target_slot, node.target))
        if node.handler is not None:
            out.append(("handler", -1, node.handler))
    elif type(node) is Compound:
        out.append(("head", -1, node.head))
        for i, arg in enumerate(node.args):
            out.append(("arg", i, arg))
    return out


def _label(node, origin: int) -> str:
    if type(node) is Thunk:
        k = node.serial - origin
        return f"t{k}" if k >= 0 else f"tp{-k}"
    if type(node) is Compound:
        k = node.serial - origin
        return f"c{k}" if k >= 0 else f"cp{-k}"
    return repr(node)


def _roots(state: RewriteState) -> list:
    roots = []
    if _is_node(state.root):
        roots.append(state.root)
    if state.result is not HOLE and _is_node(state.result):
        roots.append(state.result)
    if state.exception is not HOLE and _is_node(state.exception):
        roots.append(state.exception)
    return roots


def check(state: RewriteState) -> GraphReport:
    """Verify the graph invariants of a paused state. Read-only."""
    report = GraphReport()
    origin = state.origin

    # acyclicity: iterative depth-first search, grey = on current path
    GREY, BLACK = 1, 2
    color: dict[int, int] = {}
    pin: dict[int, object] = {}  # keeps ids stable during traversal
    incoming: dict[int, int] = {}
    nodes = 0
    edges = 0
    for root in _roots(state):
        if id(root) in color:
            continue
        stack = [(root, _edges(root), 0)]
        color[id(root)] = GREY
        pin[id(root)] = root
        nodes += 1
        while stack:
            node, node_edges, i = stack.pop()
            if i < len(node_edges):
                stack.append((node, node_edges, i + 1))
                _, _, child = node_edges[i]
                edges += 1
                incoming[id(child)] = incoming.get(id(child), 0) + 1
                state_of = color.get(id(child))
                if state_of == GREY:
                    report.acyclic = False
                    report.violations.append(
                        (
                            _label(child, origin),
                            "acyclic",
                            f"link from {_label(node, origin)} closes a cycle",
                        )
                    )
                elif state_of is None:
                    color[id(child)] = GREY
                    pin[id(child)] = child
                    nodes += 1
                    stack.append((child, _edges(child), 0))
            else:
                color[id(node)] = BLACK
    report.node_count = nodes
    report.edge_count = edges
    if any(v > 1 for v in incoming.values()):
        report.tree = False
    if not report.acyclic:
        report.tree = False

    # chain linearity: the next links from the root form a simple path to
    # the sink
    seen: set[int] = set()
    cursor = state.root
    while cursor is not SINK:
        if type(cursor) is not Thunk:
            report.chain_linear = False
            report.violations.append(
                (_label(cursor, origin), "chain-linear", "non-thunk on the redex chain")
            )
            break
        if id(cursor) in seen:
            report.chain_linear = False
            report.violations.append(
                (_label(cursor, origin), "chain-linear", "redex chain revisits a thunk")
            )
            break
        seen.add(id(cursor))
        cursor = cursor.next

    # reduced purity: values reachable through filled cells contain no
    # thunks and no holes
    pure_seen: set[int] = set()

    def scan_value(value, owner):
        stack = [value]
        while stack:
            v = stack.pop()
            if type(v) is Thunk:
                report.reduced_pure = False
                report.violations.append(
                    (
                        _label(v, origin),
                        "reduced-pure",
                        f"thunk reachable through a filled cell of {owner}",
                    )
                )
                continue
            if v is HOLE:
                report.reduced_pure = False
                report.violations.append(
                    (owner, "reduced-pure", "hole inside a reduced value")
                )
                continue
            if type(v) is Compound and id(v) not in pure_seen:
                pure_seen.add(id(v))
                stack.append(v.head)
                stack.extend(v.args)

    for obj in pin.values():
        if type(obj) is Thunk:
            for cell in obj.cells:
                if cell is not HOLE:
                    scan_value(cell, _label(obj, origin))
    if state.result is not HOLE:
        scan_value(state.result, "result")
    return report


# ---------------------------------------------------------------------------
# DOT emission

def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("{", "\\{")
        .replace("}", "\\}")
        .replace("|", "\\|")
        .replace("<", "\\<")
        .replace(">", "\\>")
    )


def _atom_text(value, state) -> str:
    program = state.program
    short = program.short_names if program is not None else None
    return render(value, short)


def _collect(state: RewriteState):
    """Reachable nodes in deterministic discovery order.

    The redex chain is walked first, then everything else depth first
    along canonical edge order.
    """
    order: list = []
    seen: set[int] = set()

    def visit(node):
        stack = [node]
        while stack:
            n = stack.pop()
            if not _is_node(n) or id(n) in seen:
                continue
            seen.add(id(n))
            order.append(n)
            children = [child for _, _, child in _edges(n)]
            stack.extend(reversed(children))

    cursor = state.root
    while type(cursor) is Thunk:
        visit(cursor)
        cursor = cursor.next
    for root in _roots(state):
        visit(root)
    return order


def emit_dot(state: RewriteState, style: str = "twisted") -> DotSnapshot:
    """Render the state as a DOT document; identical states give
    byte-identical text."""
    if style == "standard":
        text = _dot_standard(state)
    elif style == "thunked":
        text = _dot_cells(state, twisted=False)
    elif style == "twisted":
        text = _dot_cells(state, twisted=True)
    else:
        raise ValueError(f"unknown snapshot style {style!r}")
    return DotSnapshot(style, text, state.steps)


def _dot_cells(state: RewriteState, twisted: bool) -> str:
    origin = state.origin
    nodes = _collect(state)
    names: dict[int, str] = {}
    leaf_lines: list[str] = []
    thunk_lines: list[str] = []
    edge_lines: list[str] = []
    leaf_count = 0

    def leaf_name(value) -> str:
        nonlocal leaf_count
        if id(value) in names:
            return names[id(value)]
        name = f"v{leaf_count}"
        leaf_count += 1
        names[id(value)] = name
        leaf_lines.append(
            f'  {name} [shape=oval, label="{_escape(_atom_text(value, state))}"];'
        )
        return name

    structured = [n for n in nodes if type(n) in (Thunk, Compound)]
    for node in structured:
        names[id(node)] = _label(node, origin)

    for node in structured:
        me = names[id(node)]
        if type(node) is Thunk:
            cells = node.cells
            shape_bits = []
            for i, cell in enumerate(cells):
                if cell is HOLE:
                    shape_bits.append(f"<f{i}> _")
                elif type(cell) in (Thunk, Compound):
                    shape_bits.append(f"<f{i}> *")
                else:
                    shape_bits.append(f"<f{i}> {_escape(_atom_text(cell, state))}")
            thunk_lines.append(
                f'  {me} [shape=record, label="{"|".join(shape_bits)}"];'
            )
            for i, cell in enumerate(cells):
                if type(cell) in (Thunk, Compound):
                    edge_lines.append(f"  {me}:f{i} -> {names[id(cell)]};")
            if twisted:
                if type(node.next) is Thunk:
                    edge_lines.append(
                        f"  {me} -> {names[id(node.next)]} [style=bold];"
                    )
                elif node.next is SINK:
                    edge_lines.append(f"  {me} -> sink [style=bold];")
                tgt = node.target
                if type(tgt) is Thunk:
                    edge_lines.append(
                        f"  {me} -> {names[id(tgt)]}:f{node.target_slot} [style=dashed];"
                    )
                elif isinstance(tgt, RewriteState):
                    edge_lines.append(f"  {me} -> sink [style=dashed];")
                if node.handler is not None:
                    edge_lines.append(
                        f"  {me} -> {names[id(node.handler)]} [style=dotted];"
                    )
        else:  # Compound
            cells = [node.head, *node.args]
            shape_bits = []
            for i, cell in enumerate(cells):
                if type(cell) in (Thunk, Compound):
                    shape_bits.append(f"<f{i}> *")
                else:
                    shape_bits.append(f"<f{i}> {_escape(_atom_text(cell, state))}")
            thunk_lines.append(
                f'  {me} [shape=record, style=rounded, label="{"|".join(shape_bits)}"];'
            )
            for i, cell in enumerate(cells):
                if type(cell) in (Thunk, Compound):
                    edge_lines.append(f"  {me}:f{i} -> {names[id(cell)]};")

    if twisted:
        if type(state.root) is Thunk:
            edge_lines.append(f"  star -> {names[id(state.root)]};")
        elif state.root is SINK and state.result is not HOLE:
            # final state: the root marker points at the reduced result
            name = names.get(id(state.result)) or leaf_name(state.result)
            edge_lines.append(f"  star -> {name};")

    lines = ["digraph {", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    if twisted:
        lines.append('  star [shape=plaintext, label="*"];')
        lines.append('  sink [shape=box, label="runtime"];')
    lines.extend(thunk_lines)
    lines.extend(leaf_lines)
    lines.extend(edge_lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_standard(state: RewriteState) -> str:
    """The application-tree view: binary @ nodes over leaves."""
    producers: dict[tuple, Thunk] = {}
    chain: set[int] = set()
    cursor = state.root
    while type(cursor) is Thunk:
        chain.add(id(cursor))
        cursor = cursor.next
    for node in _collect(state):
        if type(node) is Thunk and id(node) in chain:
            key = (id(node.target), node.target_slot)
            producers.setdefault(key, node)

    lines = ["digraph {", '  node [fontname="Helvetica"];']
    counter = [0]

    def fresh(label: str, shape: str) -> str:
        name = f"n{counter[0]}"
        counter[0] += 1
        lines.append(f'  {name} [shape={shape}, label="{_escape(label)}"];')
        return name

    def term(receiver, slot, value) -> str:
        if value is HOLE:
            producer = producers.get((id(receiver), slot))
            if producer is None:
                return fresh("_", "oval")
            return spine([*producer.cells], producer)
        if type(value) is Compound:
            return spine([value.head, *value.args], value)
        return fresh(_atom_text(value, state), "oval")

    def spine(cells: list, owner) -> str:
        node = term(owner, 0, cells[0])
        for i, arg in enumerate(cells[1:], start=1):
            app = fresh("@", "circle")
            argn = term(owner, i, arg)
            lines.append(f"  {app} -> {node};")
            lines.append(f"  {app} -> {argn};")
            node = app
        return node

    if state.result is not HOLE:
        term(state, 0, state.result)
    else:
        term(state, 0, HOLE)
    lines.append("}")
    return "\n".join(lines) + "\n"
