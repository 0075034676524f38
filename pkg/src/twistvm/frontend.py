"""Front end: lexer, parser, pretty printer, and name resolution.

Surface syntax, by example:

    import "prelude.eg"

    namespace Fibonacci (
        using System

        def fib =
            [ 0 -> 1
            | 1 -> 1
            | N -> fib (N - 2) + fib (N - 1) ]
    )

    using Fibonacci

    def main = fib 5

Lexical discipline: identifiers starting with an uppercase letter are
pattern variables (`N`, `X`, `XX`); lowercase identifiers name
combinators and data tags (`fib`, `nil`, `cons`); `_` is a wildcard
variable. Application is juxtaposition, binds tightest, and associates
left. All infix operator symbols share a single precedence level below
application and associate left; anything richer needs parentheses.
Comments run from `#` to end of line.
"""

from dataclasses import dataclass, field

# ---------------------------------------------------------------------------
# errors

class SourceError(Exception):
    """A diagnostic tied to a source position."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(msg)
        self.msg = msg
        self.line = line
        self.col = col

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.msg}"
        return self.msg


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class ResolveError(SourceError):
    pass


# ---------------------------------------------------------------------------
# tokens

KEYWORD = "keyword"
UPPER_ID = "upper-id"
LOWER_ID = "lower-id"
OPERATOR = "operator"
INT_LIT = "int"
TEXT_LIT = "text"
PUNCT = "punct"

KEYWORDS = frozenset(["import", "namespace", "using", "data", "def", "try", "catch"])

_OPERATOR_CHARS = frozenset("+-*/%<>=!&|^~?")
_PUNCT_CHARS = frozenset("()[],")


@dataclass
class Token:
    kind: str
    lexeme: str
    line: int
    col: int
    value: object = None  # decoded payload for int/text literals

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.lexeme!r}, {self.line}:{self.col})"


def _classify_ident(lexeme: str) -> str:
    # qualified names (List::nil) classify by their last segment; a leading
    # underscore marks a wildcard, which lives in the variable class
    last = lexeme.rsplit("::", 1)[-1]
    if last in KEYWORDS:
        return KEYWORD
    if last[0].isupper() or last[0] == "_":
        return UPPER_ID
    return LOWER_ID


def tokenize(source: str) -> list[Token]:
    """Split source text into tokens.

    Lexemes are exact slices of the input: concatenating them together
    with the skipped whitespace and comments reconstructs the source.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)
    prev_kind = None
    prev_lexeme = ""

    def advance(text: str):
        nonlocal line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    while i < n:
        ch = source[i]
        # whitespace
        if ch.isspace():
            advance(ch)
            i += 1
            continue
        # comment to end of line
        if ch == "#":
            j = source.find("\n", i)
            if j < 0:
                j = n
            advance(source[i:j])
            i = j
            continue

        start_line, start_col = line, col

        # identifier, possibly qualified with ::
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            while (
                j + 2 < n
                and source[j : j + 2] == "::"
                and (source[j + 2].isalpha() or source[j + 2] == "_")
            ):
                j += 2
                while j < n and (source[j].isalnum() or source[j] == "_"):
                    j += 1
            lexeme = source[i:j]
            kind = _classify_ident(lexeme)
            tokens.append(Token(kind, lexeme, start_line, start_col))
        # integer literal; a leading '-' is part of the literal unless the
        # previous token could end an operand (then it is the infix operator)
        elif ch.isdigit() or (
            ch == "-"
            and i + 1 < n
            and source[i + 1].isdigit()
            and prev_kind not in (INT_LIT, TEXT_LIT, UPPER_ID, LOWER_ID)
            and not (prev_kind == PUNCT and prev_lexeme in (")", "]"))
        ):
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            lexeme = source[i:j]
            tokens.append(Token(INT_LIT, lexeme, start_line, start_col, int(lexeme)))
        # text literal
        elif ch == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise LexError("unterminated text literal", start_line, start_col)
                c = source[j]
                if c == '"':
                    j += 1
                    break
                if c == "\\":
                    if j + 1 >= n:
                        raise LexError("unterminated text literal", start_line, start_col)
                    esc = source[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                else:
                    buf.append(c)
                    j += 1
            lexeme = source[i:j]
            tokens.append(Token(TEXT_LIT, lexeme, start_line, start_col, "".join(buf)))
        # operator symbols; '=', '->' and '|' are punctuation once isolated
        elif ch in _OPERATOR_CHARS:
            j = i
            while j < n and source[j] in _OPERATOR_CHARS:
                j += 1
            lexeme = source[i:j]
            if lexeme in ("=", "->", "|"):
                tokens.append(Token(PUNCT, lexeme, start_line, start_col))
            else:
                tokens.append(Token(OPERATOR, lexeme, start_line, start_col))
        elif ch in _PUNCT_CHARS:
            lexeme = ch
            tokens.append(Token(PUNCT, lexeme, start_line, start_col))
        else:
            raise LexError(f"illegal character {ch!r}", start_line, start_col)

        advance(lexeme)
        i += len(lexeme)
        prev_kind = tokens[-1].kind
        prev_lexeme = tokens[-1].lexeme

    return tokens


# ---------------------------------------------------------------------------
# abstract syntax

@dataclass
class Expr:
    pass


@dataclass
class Var(Expr):
    """Pattern variable occurrence (uppercase identifier)."""

    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Ref(Expr):
    """Reference to a combinator or data tag; `resolved` is filled by resolve()."""

    name: str
    resolved: str | None = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class TextLit(Expr):
    value: str


@dataclass
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass
class Binary(Expr):
    """Infix application `left op right`; resolves to App(App(Ref(op), l), r)."""

    op: Ref
    left: Expr
    right: Expr


@dataclass
class Lam(Expr):
    """Multi-clause abstraction `[ p.. -> body | ... ]`."""

    clauses: list["Clause"]


@dataclass
class TryCatch(Expr):
    body: Expr
    handler: Expr


@dataclass
class Pattern:
    pass


@dataclass
class PVar(Pattern):
    name: str


@dataclass
class PInt(Pattern):
    value: int


@dataclass
class PText(Pattern):
    value: str


@dataclass
class PTag(Pattern):
    name: str
    resolved: str | None = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class PComp(Pattern):
    """Compound pattern `(tag p1 .. pn)`; the head is always a data tag."""

    tag: PTag
    subs: list[Pattern]


@dataclass
class Clause:
    patterns: list[Pattern]
    body: Expr


@dataclass
class Decl:
    pass


@dataclass
class Import(Decl):
    path: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Using(Decl):
    namespace: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class DataDecl(Decl):
    names: list[str]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Def(Decl):
    name: str
    body: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Namespace(Decl):
    name: str
    decls: list[Decl]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class SurfaceModule:
    name: str  # source identifier (file path or "<repl>")
    decls: list[Decl]

    @property
    def imports(self) -> list[str]:
        return [d.path for d in self.decls if isinstance(d, Import)]


# ---------------------------------------------------------------------------
# parser

_EXPR_STOPPERS = frozenset([")", "]", "|", "->", "=", ","])


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- cursor helpers

    def peek(self) -> Token | None:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def at(self, kind: str, lexeme: str | None = None) -> bool:
        tok = self.peek()
        return (
            tok is not None
            and tok.kind == kind
            and (lexeme is None or tok.lexeme == lexeme)
        )

    def accept(self, kind: str, lexeme: str | None = None) -> Token | None:
        if self.at(kind, lexeme):
            return self.next()
        return None

    def expect(self, kind: str, lexeme: str | None = None) -> Token:
        tok = self.peek()
        if tok is None:
            want = lexeme or kind
            raise ParseError(f"expected {want!r}, found end of input")
        if tok.kind != kind or (lexeme is not None and tok.lexeme != lexeme):
            want = lexeme or kind
            raise ParseError(
                f"expected {want!r}, found {tok.lexeme!r}", tok.line, tok.col
            )
        return self.next()

    # -- declarations

    def module(self, name: str) -> SurfaceModule:
        decls = self.decl_list(top=True)
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok.lexeme!r}", tok.line, tok.col)
        return SurfaceModule(name, decls)

    def decl_list(self, top: bool) -> list[Decl]:
        decls: list[Decl] = []
        while True:
            tok = self.peek()
            if tok is None or (not top and tok.kind == PUNCT and tok.lexeme == ")"):
                return decls
            decls.append(self.decl(top))

    def decl(self, top: bool) -> Decl:
        tok = self.peek()
        if tok is None:
            raise ParseError("expected declaration, found end of input")
        if tok.kind == KEYWORD and tok.lexeme == "import":
            self.next()
            if not top:
                raise ParseError("import is only allowed at top level", tok.line, tok.col)
            path = self.expect(TEXT_LIT)
            return Import(path.value, line=tok.line, col=tok.col)
        if tok.kind == KEYWORD and tok.lexeme == "using":
            self.next()
            ns = self.next()
            if ns.kind not in (UPPER_ID, LOWER_ID):
                raise ParseError(
                    f"expected namespace name, found {ns.lexeme!r}", ns.line, ns.col
                )
            return Using(ns.lexeme, line=tok.line, col=tok.col)
        if tok.kind == KEYWORD and tok.lexeme == "namespace":
            self.next()
            name = self.next()
            if name.kind not in (UPPER_ID, LOWER_ID):
                raise ParseError(
                    f"expected namespace name, found {name.lexeme!r}",
                    name.line,
                    name.col,
                )
            self.expect(PUNCT, "(")
            decls = self.decl_list(top=False)
            self.expect(PUNCT, ")")
            return Namespace(name.lexeme, decls, line=tok.line, col=tok.col)
        if tok.kind == KEYWORD and tok.lexeme == "data":
            self.next()
            names = [self.expect(LOWER_ID).lexeme]
            while self.accept(PUNCT, ","):
                names.append(self.expect(LOWER_ID).lexeme)
            return DataDecl(names, line=tok.line, col=tok.col)
        if tok.kind == KEYWORD and tok.lexeme == "def":
            self.next()
            name = self.next()
            if name.kind not in (LOWER_ID, OPERATOR):
                raise ParseError(
                    f"expected definition name, found {name.lexeme!r}",
                    name.line,
                    name.col,
                )
            if "::" in name.lexeme:
                raise ParseError(
                    "definition names may not be qualified", name.line, name.col
                )
            self.expect(PUNCT, "=")
            body = self.expr()
            return Def(name.lexeme, body, line=tok.line, col=tok.col)
        raise ParseError(f"expected declaration, found {tok.lexeme!r}", tok.line, tok.col)

    # -- expressions

    def expr(self) -> Expr:
        if self.at(KEYWORD, "try"):
            self.next()
            body = self.expr()
            self.expect(KEYWORD, "catch")
            handler = self.expr()
            return TryCatch(body, handler)
        return self.infix()

    def infix(self) -> Expr:
        left = self.application()
        while self.at(OPERATOR):
            op = self.next()
            right = self.application()
            left = Binary(Ref(op.lexeme, line=op.line, col=op.col), left, right)
        return left

    def application(self) -> Expr:
        expr = self.atom()
        while self.starts_atom():
            expr = App(expr, self.atom())
        return expr

    def starts_atom(self) -> bool:
        tok = self.peek()
        if tok is None:
            return False
        if tok.kind in (INT_LIT, TEXT_LIT, UPPER_ID, LOWER_ID):
            return True
        if tok.kind == PUNCT and tok.lexeme in ("(", "["):
            return True
        return False

    def atom(self) -> Expr:
        tok = self.next()
        if tok.kind == INT_LIT:
            return IntLit(tok.value)
        if tok.kind == TEXT_LIT:
            return TextLit(tok.value)
        if tok.kind == UPPER_ID:
            return Var(tok.lexeme, line=tok.line, col=tok.col)
        if tok.kind == LOWER_ID:
            return Ref(tok.lexeme, line=tok.line, col=tok.col)
        if tok.kind == PUNCT and tok.lexeme == "(":
            expr = self.expr()
            self.expect(PUNCT, ")")
            return expr
        if tok.kind == PUNCT and tok.lexeme == "[":
            clauses = [self.clause()]
            while self.accept(PUNCT, "|"):
                clauses.append(self.clause())
            self.expect(PUNCT, "]")
            return Lam(clauses)
        raise ParseError(f"expected expression, found {tok.lexeme!r}", tok.line, tok.col)

    def clause(self) -> Clause:
        patterns: list[Pattern] = []
        while not self.at(PUNCT, "->"):
            patterns.append(self.pattern_atom())
        self.expect(PUNCT, "->")
        return Clause(patterns, self.expr())

    def pattern_atom(self) -> Pattern:
        tok = self.next()
        if tok.kind == INT_LIT:
            return PInt(tok.value)
        if tok.kind == TEXT_LIT:
            return PText(tok.value)
        if tok.kind == UPPER_ID:
            return PVar(tok.lexeme)
        if tok.kind == LOWER_ID:
            return PTag(tok.lexeme, line=tok.line, col=tok.col)
        if tok.kind == PUNCT and tok.lexeme == "(":
            inner = self.compound_pattern()
            self.expect(PUNCT, ")")
            return inner
        raise ParseError(f"expected pattern, found {tok.lexeme!r}", tok.line, tok.col)

    def compound_pattern(self) -> Pattern:
        head = self.pattern_atom()
        subs: list[Pattern] = []
        while not self.at(PUNCT, ")"):
            subs.append(self.pattern_atom())
        if not subs:
            return head
        if not isinstance(head, PTag):
            raise ParseError("compound pattern head must be a data tag")
        return PComp(head, subs)


def parse_module(tokens: list[Token], name: str = "<input>") -> SurfaceModule:
    """Parse a token list into a surface module."""
    return _Parser(tokens).module(name)


def parse_source(source: str, name: str = "<input>") -> SurfaceModule:
    return parse_module(tokenize(source), name)


# ---------------------------------------------------------------------------
# pretty printer (round-trips through parse_module)

def _pp_pattern(p: Pattern) -> str:
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PInt):
        return str(p.value)
    if isinstance(p, PText):
        return _quote(p.value)
    if isinstance(p, PTag):
        return p.name
    if isinstance(p, PComp):
        return "(" + " ".join([p.tag.name] + [_pp_pattern(s) for s in p.subs]) + ")"
    raise TypeError(p)


def _quote(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def _pp_expr(e: Expr, atom: bool = False) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, IntLit):
        if e.value < 0 and atom:
            return f"({e.value})"
        return str(e.value)
    if isinstance(e, TextLit):
        return _quote(e.value)
    if isinstance(e, App):
        text = f"{_pp_expr(e.fn)} {_pp_expr(e.arg, atom=True)}"
        # the function side may be another App (left associative); anything
        # looser needs parentheses
        if isinstance(e.fn, (Binary, TryCatch)):
            text = f"({_pp_expr(e.fn)}) {_pp_expr(e.arg, atom=True)}"
        return f"({text})" if atom else text
    if isinstance(e, Binary):
        left = _pp_expr(e.left)
        if isinstance(e.left, TryCatch):
            left = f"({left})"
        right = _pp_expr(e.right)
        if isinstance(e.right, (Binary, TryCatch)):
            right = f"({right})"
        text = f"{left} {e.op.name} {right}"
        return f"({text})" if atom else text
    if isinstance(e, Lam):
        clauses = " | ".join(
            " ".join([_pp_pattern(p) for p in c.patterns] + ["->", _pp_expr(c.body)])
            for c in e.clauses
        )
        return f"[ {clauses} ]"
    if isinstance(e, TryCatch):
        handler = _pp_expr(e.handler)
        if isinstance(e.handler, TryCatch):
            handler = f"({handler})"
        text = f"try {_pp_expr(e.body)} catch {handler}"
        return f"({text})" if atom else text
    raise TypeError(e)


def _pp_decl(d: Decl, indent: str) -> list[str]:
    if isinstance(d, Import):
        return [f"{indent}import {_quote(d.path)}"]
    if isinstance(d, Using):
        return [f"{indent}using {d.namespace}"]
    if isinstance(d, DataDecl):
        return [f"{indent}data {', '.join(d.names)}"]
    if isinstance(d, Def):
        return [f"{indent}def {d.name} = {_pp_expr(d.body)}"]
    if isinstance(d, Namespace):
        lines = [f"{indent}namespace {d.name} ("]
        for sub in d.decls:
            lines.extend(_pp_decl(sub, indent + "    "))
        lines.append(f"{indent})")
        return lines
    raise TypeError(d)


def pretty_print(module: SurfaceModule) -> str:
    lines: list[str] = []
    for d in module.decls:
        lines.extend(_pp_decl(d, ""))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# resolution

@dataclass
class Declared:
    """One entry of the resolved declaration table."""

    qualified: str
    kind: str  # "def" | "data" | "builtin"
    body: Expr | None = None  # resolved body for defs


def _namespace_of(qualified: str) -> str:
    return qualified.rsplit("::", 1)[0] if "::" in qualified else ""


def _join(path: tuple[str, ...], name: str) -> str:
    return "::".join(path + (name,)) if path else name


class _Scope:
    """Lexical resolution context: enclosing namespace path plus usings."""

    def __init__(self, table: dict, global_usings: list[str]):
        self.table = table
        self.global_usings = global_usings
        self.path: tuple[str, ...] = ()
        self.local_usings: list[list[str]] = []

    def lookup(self, name: str, line: int, col: int) -> str:
        if "::" in name:
            # qualified: absolute first, then relative to enclosing namespaces
            if name in self.table:
                return name
            for i in range(len(self.path), 0, -1):
                candidate = "::".join(self.path[:i]) + "::" + name
                if candidate in self.table:
                    return candidate
            raise ResolveError(f"unresolved identifier {name!r}", line, col)
        # own namespaces, innermost first, then the bare top-level name
        for i in range(len(self.path), -1, -1):
            candidate = _join(self.path[:i], name)
            if candidate in self.table:
                return candidate
        # usings, innermost block first; same-level collisions are ambiguous
        for usings in reversed(self.local_usings + [self.global_usings]):
            hits = sorted(
                {f"{u}::{name}" for u in usings if f"{u}::{name}" in self.table}
            )
            if len(hits) > 1:
                raise ResolveError(
                    f"ambiguous identifier {name!r}: " + " vs ".join(hits), line, col
                )
            if hits:
                return hits[0]
        # host-provided names are visible everywhere at weakest precedence
        fallback = f"System::{name}"
        if fallback in self.table:
            return fallback
        raise ResolveError(f"unresolved identifier {name!r}", line, col)


def resolve(
    modules: list[SurfaceModule], builtins: dict[str, str] | None = None
) -> dict[str, Declared]:
    """Resolve every reference in `modules` to a fully qualified name.

    `builtins` maps preexisting qualified names to their kind (for the
    host-provided System namespace). Returns the global declaration
    table; insertion order is builtins, then declarations in module
    order. Raises ResolveError for unresolved or ambiguous names,
    duplicate definitions, and a non-nullary `main`.
    """
    table: dict[str, Declared] = {}
    if builtins:
        for qualified, kind in builtins.items():
            table[qualified] = Declared(qualified, kind)

    # pass 1: collect declared names (defs may be mutually recursive)
    def collect(decls: list[Decl], path: tuple[str, ...]):
        for d in decls:
            if isinstance(d, Def):
                qualified = _join(path, d.name)
                if qualified in table:
                    raise ResolveError(
                        f"duplicate definition of {qualified!r}", d.line, d.col
                    )
                table[qualified] = Declared(qualified, "def")
            elif isinstance(d, DataDecl):
                for name in d.names:
                    qualified = _join(path, name)
                    if qualified in table:
                        raise ResolveError(
                            f"duplicate definition of {qualified!r}", d.line, d.col
                        )
                    table[qualified] = Declared(qualified, "data")
            elif isinstance(d, Namespace):
                collect(d.decls, path + (d.name,))

    for module in modules:
        collect(module.decls, ())

    # pass 2: resolve bodies in declaration order; top-level usings are
    # global (they accumulate across modules in load order), usings inside
    # a namespace block scope to that block
    global_usings: list[str] = []
    scope = _Scope(table, global_usings)

    def walk(decls: list[Decl]):
        for d in decls:
            if isinstance(d, Using):
                if scope.local_usings:
                    scope.local_usings[-1].append(d.namespace)
                else:
                    global_usings.append(d.namespace)
            elif isinstance(d, Def):
                qualified = _join(scope.path, d.name)
                table[qualified].body = _resolve_expr(d.body, scope, frozenset())
            elif isinstance(d, Namespace):
                scope.path = scope.path + (d.name,)
                scope.local_usings.append([])
                walk(d.decls)
                scope.local_usings.pop()
                scope.path = scope.path[:-1]

    for module in modules:
        walk(module.decls)

    if "main" in table:
        main = table["main"]
        if main.kind != "def":
            raise ResolveError("main must be a definition")
        if isinstance(main.body, Lam):
            raise ResolveError("main must take no arguments")
    return table


def _resolve_expr(e: Expr, scope: _Scope, bound: frozenset) -> Expr:
    if isinstance(e, Var):
        if e.name.startswith("_"):
            raise ResolveError("wildcard cannot be used as an expression", e.line, e.col)
        if e.name not in bound:
            raise ResolveError(f"unbound variable {e.name!r}", e.line, e.col)
        return Var(e.name)
    if isinstance(e, Ref):
        return Ref(e.name, scope.lookup(e.name, e.line, e.col))
    if isinstance(e, (IntLit, TextLit)):
        return e
    if isinstance(e, App):
        return App(_resolve_expr(e.fn, scope, bound), _resolve_expr(e.arg, scope, bound))
    if isinstance(e, Binary):
        op = Ref(e.op.name, scope.lookup(e.op.name, e.op.line, e.op.col))
        return App(
            App(op, _resolve_expr(e.left, scope, bound)),
            _resolve_expr(e.right, scope, bound),
        )
    if isinstance(e, TryCatch):
        return TryCatch(
            _resolve_expr(e.body, scope, bound),
            _resolve_expr(e.handler, scope, bound),
        )
    if isinstance(e, Lam):
        clauses = []
        for clause in e.clauses:
            names: list[str] = []
            patterns = [_resolve_pattern(p, scope, names) for p in clause.patterns]
            inner = bound | {n for n in names if not n.startswith("_")}
            clauses.append(Clause(patterns, _resolve_expr(clause.body, scope, inner)))
        return Lam(clauses)
    raise TypeError(e)


def _resolve_pattern(p: Pattern, scope: _Scope, names: list[str]) -> Pattern:
    if isinstance(p, PVar):
        if p.name.startswith("_"):
            # each wildcard becomes a fresh, never-referenced variable;
            # numbering by clause position keeps resolution deterministic
            fresh = f"_w{len(names)}"
            names.append(fresh)
            return PVar(fresh)
        names.append(p.name)
        return PVar(p.name)
    if isinstance(p, (PInt, PText)):
        return p
    if isinstance(p, PTag):
        return PTag(p.name, scope.lookup(p.name, p.line, p.col))
    if isinstance(p, PComp):
        tag = PTag(p.tag.name, scope.lookup(p.tag.name, p.tag.line, p.tag.col))
        if scope.table[tag.resolved].kind not in ("data", "builtin"):
            raise ResolveError(
                f"compound pattern head {p.tag.name!r} is not a data tag",
                p.tag.line,
                p.tag.col,
            )
        return PComp(tag, [_resolve_pattern(s, scope, names) for s in p.subs])
    raise TypeError(p)
