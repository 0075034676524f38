"""Naive substitution-based reference evaluator, used as a test oracle.

Evaluates the resolved surface tree directly (no lifting, no bytecode,
no thunk graph): abstractions are values closed by substitution,
application evaluates arguments right to left, and exceptions are host
exceptions. Mirrors the engine's matching rules (clause order, surplus
arguments, partial and stuck applications) so results are comparable,
while sharing none of its machinery.
"""

from twistvm import frontend as f

BUILTIN_ARITY = {
    "System::+": 2,
    "System::-": 2,
    "System::*": 2,
    "System::mul": 2,
    "System::div": 2,
    "System::mod": 2,
    "System::inc": 1,
    "System::<": 2,
    "System::<=": 2,
    "System::==": 2,
    "System::print": 1,
    "System::throw": 1,
    "System::par": 2,
}


class Thrown(Exception):
    def __init__(self, value):
        super().__init__(value)
        self.value = value


class Tag:
    """A data constructor (or other named constant) as a value."""

    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


class BuiltinFn:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


class DefRef:
    """An unapplied reference to a defined combinator."""

    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


class Closure:
    """An abstraction value; bodies already closed by substitution."""

    __slots__ = ("clauses",)

    def __init__(self, clauses):
        self.clauses = clauses


class Stuck:
    """An inert application (partial or non-rewriting)."""

    __slots__ = ("head", "args")

    def __init__(self, head, args):
        self.head = head
        self.args = tuple(args)


class _ValueExpr(f.Expr):
    """A pre-computed value inserted into a tree by substitution."""

    def __init__(self, value):
        self.value = value


class Oracle:
    def __init__(self, table):
        self.table = table
        self.printed = []

    # -- program entry

    def evaluate(self, entry="main"):
        try:
            return ("value", self.force_def(entry))
        except Thrown as t:
            return ("exception", t.value)

    def force_def(self, name):
        value = DefRef(name)
        clauses = self.clauses_of(name)
        for clause in clauses:
            if not clause.patterns:
                return self.eval_expr(clause.body, {})
        return value

    def clauses_of(self, name):
        decl = self.table[name]
        body = decl.body
        if isinstance(body, f.Lam):
            return body.clauses
        return [f.Clause([], body)]

    # -- expression evaluation

    def eval_expr(self, e, env):
        if isinstance(e, _ValueExpr):
            return e.value
        if isinstance(e, f.IntLit):
            return e.value
        if isinstance(e, f.TextLit):
            return e.value
        if isinstance(e, f.Var):
            return env[e.name]
        if isinstance(e, f.Ref):
            return self.eval_ref(e.resolved)
        if isinstance(e, f.Lam):
            return Closure([self.close_clause(c, env) for c in e.clauses])
        if isinstance(e, f.TryCatch):
            if self.is_static(e.body):
                return self.eval_expr(e.body, env)
            handler = self.eval_expr(e.handler, env)
            try:
                return self.eval_expr(e.body, env)
            except Thrown as t:
                return self.apply(handler, [t.value])
        if isinstance(e, f.App):
            head, arg_exprs = self.flatten(e)
            args = [None] * len(arg_exprs)
            for i in range(len(arg_exprs) - 1, -1, -1):
                args[i] = self.eval_expr(arg_exprs[i], env)
            fn = self.eval_head(head, env)
            return self.apply(fn, args)
        raise TypeError(e)

    def eval_ref(self, name):
        kind = self.table[name].kind
        if kind == "data":
            return Tag(name)
        if kind == "builtin":
            if name in BUILTIN_ARITY:
                return BuiltinFn(name)
            return Tag(name)
        return self.force_def(name)

    def eval_head(self, e, env):
        # head position: a defined-combinator name is not forced (the
        # application itself is the redex)
        if isinstance(e, f.Ref) and self.table[e.resolved].kind == "def":
            return DefRef(e.resolved)
        return self.eval_expr(e, env)

    def flatten(self, e):
        args = []
        while isinstance(e, f.App):
            args.append(e.arg)
            e = e.fn
        args.reverse()
        return e, args

    def is_static(self, e):
        if isinstance(e, (f.IntLit, f.TextLit, f.Var, _ValueExpr)):
            return True
        if isinstance(e, f.Ref):
            return self.table[e.resolved].kind != "def"
        if isinstance(e, f.TryCatch):
            return self.is_static(e.body)
        if isinstance(e, f.App):
            head, args = self.flatten(e)
            if not all(self.is_static(a) for a in args):
                return False
            if isinstance(head, (f.IntLit, f.TextLit)):
                return True
            return isinstance(head, f.Ref) and self.table[head.resolved].kind == "data"
        return False

    # -- substitution (closing abstraction bodies over the environment)

    def close_clause(self, clause, env):
        binders = set()
        for p in clause.patterns:
            binders |= set(self.pattern_vars(p))
        inner = {k: v for k, v in env.items() if k not in binders}
        return f.Clause(clause.patterns, self.subst(clause.body, inner))

    def pattern_vars(self, p):
        if isinstance(p, f.PVar):
            return [p.name]
        if isinstance(p, f.PComp):
            out = []
            for s in p.subs:
                out.extend(self.pattern_vars(s))
            return out
        return []

    def subst(self, e, env):
        if not env:
            return e
        if isinstance(e, f.Var):
            if e.name in env:
                return _ValueExpr(env[e.name])
            return e
        if isinstance(e, (f.Ref, f.IntLit, f.TextLit, _ValueExpr)):
            return e
        if isinstance(e, f.App):
            return f.App(self.subst(e.fn, env), self.subst(e.arg, env))
        if isinstance(e, f.TryCatch):
            return f.TryCatch(self.subst(e.body, env), self.subst(e.handler, env))
        if isinstance(e, f.Lam):
            return f.Lam([self.close_clause(c, env) for c in e.clauses])
        raise TypeError(e)

    # -- application

    def apply(self, fn, args):
        while True:
            if isinstance(fn, Stuck):
                args = list(fn.args) + list(args)
                fn = fn.head
                continue
            break
        if not args:
            return fn
        if isinstance(fn, (int, str, Tag)):
            return Stuck(fn, args)
        if isinstance(fn, BuiltinFn):
            arity = BUILTIN_ARITY[fn.name]
            if len(args) < arity:
                return Stuck(fn, args)
            result = self.host(fn.name, args[:arity])
            rest = args[arity:]
            return self.apply(result, rest) if rest else result
        if isinstance(fn, DefRef):
            clauses = self.clauses_of(fn.name)
        else:
            clauses = fn.clauses
        n = len(args)
        tried = False
        for clause in clauses:
            k = len(clause.patterns)
            if n < k:
                continue
            tried = True
            env = {}
            if all(
                self.match(p, v, env) for p, v in zip(clause.patterns, args[:k])
            ):
                result = self.eval_expr(clause.body, env)
                rest = args[k:]
                return self.apply(result, rest) if rest else result
        del tried
        return Stuck(fn, args)

    def match(self, p, v, env):
        if isinstance(p, f.PVar):
            env[p.name] = v
            return True
        if isinstance(p, f.PInt):
            return type(v) is int and v == p.value
        if isinstance(p, f.PText):
            return type(v) is str and v == p.value
        if isinstance(p, f.PTag):
            return (
                isinstance(v, (Tag, BuiltinFn, DefRef)) and v.name == p.resolved
            )
        if isinstance(p, f.PComp):
            if (
                isinstance(v, Stuck)
                and isinstance(v.head, (Tag, BuiltinFn))
                and v.head.name == p.tag.resolved
                and len(v.args) == len(p.subs)
            ):
                return all(
                    self.match(s, a, env) for s, a in zip(p.subs, v.args)
                )
            return False
        raise TypeError(p)

    # -- builtin operations (independent host implementations)

    def host(self, name, args):
        op = name.rsplit("::", 1)[-1]
        if op in ("+", "-", "*", "mul", "div", "mod", "<", "<=", "=="):
            a, b = args
            if type(a) is not int or type(b) is not int:
                raise Thrown(f"{name}: expects integers")
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op in ("*", "mul"):
                return a * b
            if op == "div":
                if b == 0:
                    raise Thrown(f"{name}: division by zero")
                return a // b
            if op == "mod":
                if b == 0:
                    raise Thrown(f"{name}: division by zero")
                return a % b
            if op == "<":
                return Tag("System::true") if a < b else Tag("System::false")
            if op == "<=":
                return Tag("System::true") if a <= b else Tag("System::false")
            return Tag("System::true") if a == b else Tag("System::false")
        if op == "inc":
            (a,) = args
            if type(a) is not int:
                raise Thrown(f"{name}: expects an integer")
            return a + 1
        if op == "print":
            self.printed.append(args[0])
            return Tag("System::nop")
        if op == "throw":
            raise Thrown(args[0])
        if op == "par":
            left = self.apply(args[0], [Tag("System::nop")])
            right = self.apply(args[1], [Tag("System::nop")])
            return Stuck(Tag("System::tuple"), [left, right])
        raise AssertionError(f"unknown builtin {name}")


def render_value(v) -> str:
    """Render an oracle value the way the engine renders reduced nodes
    (fully qualified names)."""
    if type(v) is int:
        return str(v)
    if type(v) is str:
        quoted = v.replace("\\", "\\\\").replace('"', '\\"')
        quoted = quoted.replace("\n", "\\n").replace("\t", "\\t")
        return f'"{quoted}"'
    if isinstance(v, (Tag, BuiltinFn, DefRef)):
        return v.name
    if isinstance(v, Stuck):
        parts = [render_value(v.head)] + [render_value(a) for a in v.args]
        return "(" + " ".join(parts) + ")"
    if isinstance(v, Closure):
        return "<abstraction>"
    raise TypeError(v)


# ---------------------------------------------------------------------------
# random closed first-order programs over integers and lists

def gen_program(rng) -> str:
    """One random terminating program; calls only flow to earlier
    definitions, so the call graph is acyclic."""
    defs: list[str] = []
    names: list[tuple[str, int]] = []  # (name, arity)
    for i in range(rng.randint(1, 4)):
        name = f"d{i}"
        arity = rng.randint(0, 2)
        clauses = [
            _gen_clause(rng, arity, names) for _ in range(rng.randint(1, 3))
        ]
        defs.append(f"def {name} = [ " + " | ".join(clauses) + " ]")
        names.append((name, arity))
    top, top_arity = names[-1]
    call = " ".join([top] + [_gen_ground(rng) for _ in range(top_arity)])
    defs.append(f"def main = {call}")
    return "using List\n" + "\n".join(defs) + "\n"


def _gen_clause(rng, arity, names) -> str:
    # slot-indexed variable names keep pattern variables distinct
    patterns = [_gen_pattern(rng, slot) for slot in range(arity)]
    bound = [v for p in patterns for v in _pattern_binders(p)]
    body = _gen_expr(rng, 3, bound, names)
    return " ".join(patterns + ["->", body])


def _gen_pattern(rng, slot) -> str:
    roll = rng.random()
    if roll < 0.35:
        return str(rng.randint(0, 3))
    if roll < 0.75:
        return f"V{slot}"
    if roll < 0.85:
        return "nil"
    return f"(cons H{slot} T{slot})"


def _pattern_binders(p: str) -> list:
    return [w for w in p.replace("(", " ").replace(")", " ").split() if w[0].isupper()]


def _gen_ground(rng) -> str:
    if rng.random() < 0.6:
        return f"({rng.randint(-3, 9)})"
    items = [rng.randint(0, 5) for _ in range(rng.randint(0, 3))]
    out = "nil"
    for x in reversed(items):
        out = f"(cons {x} {out})"
    return out


def _gen_expr(rng, depth, bound, names) -> str:
    if depth == 0 or rng.random() < 0.3:
        choices = [str(rng.randint(-2, 9))]
        if bound:
            choices.append(rng.choice(bound))
        choices.append("nil")
        return rng.choice(choices)
    roll = rng.random()
    sub = lambda: _gen_expr(rng, depth - 1, bound, names)
    if roll < 0.35:
        op = rng.choice(["+", "-", "*", "+", "-"])
        return f"({sub()} {op} {sub()})"
    if roll < 0.45:
        return f"(cons {sub()} {sub()})"
    if roll < 0.55:
        return f"({sub()} ++ {sub()})"
    if roll < 0.63:
        op = rng.choice(["div", "mod"])
        return f"({op} {sub()} {sub()})"
    if roll < 0.70:
        op = rng.choice(["<", "<=", "=="])
        return f"({sub()} {op} {sub()})"
    if roll < 0.78 and names:
        name, arity = rng.choice(names)
        return "(" + " ".join([name] + [sub() for _ in range(arity)]) + ")"
    if roll < 0.85:
        return f"(try {sub()} catch [E{rng.randint(0,2)} -> {sub()}])"
    if roll < 0.90:
        return f"(throw {sub()})"
    return f"(inc {sub()})"
