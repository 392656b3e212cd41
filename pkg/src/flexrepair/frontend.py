"""MiniLang frontend: source text to a small, validated syntax tree.

MiniLang is a Python-flavoured teaching subset.  We let the stdlib ``ast``
module do the tokenising and indentation handling, then translate its tree
into our own node types while rejecting everything outside the subset.
"""
from __future__ import annotations

import ast as pyast
from dataclasses import dataclass, field
from typing import Optional, Union

IMPLICIT_MAIN = "main"


class MiniLangSyntaxError(Exception):
    def __init__(self, line: int, message: str, column: int = 0):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.column = column
        self.message = message


class UnsupportedConstruct(Exception):
    def __init__(self, line: int, construct: str):
        super().__init__(f"line {line}: unsupported construct '{construct}'")
        self.line = line
        self.construct = construct


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<string>"


# Expressions ---------------------------------------------------------------

@dataclass(frozen=True)
class Name:
    id: str
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class NumberLit:
    lexeme: str
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class StringLit:
    value: str
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class ConstLit:
    """True, False or None."""
    value: Optional[bool]
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class ListLit:
    elts: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class TupleLit:
    elts: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expression"
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Compare:
    left: "Expression"
    ops: tuple
    comparators: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class BoolOp:
    op: str
    values: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Attribute:
    value: "Expression"
    attr: str
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Call:
    callee: Union[Name, Attribute]
    args: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Slice:
    lower: Optional["Expression"]
    upper: Optional["Expression"]
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Subscript:
    value: "Expression"
    index: Union["Expression", Slice]
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Ternary:
    cond: "Expression"
    then: "Expression"
    orelse: "Expression"
    line: int = field(default=1, compare=False)


Expression = Union[Name, NumberLit, StringLit, ConstLit, ListLit, TupleLit, BinOp,
                   UnaryOp, Compare, BoolOp, Attribute, Call, Subscript, Ternary]


# Statements ----------------------------------------------------------------

@dataclass(frozen=True)
class TupleTarget:
    names: tuple
    line: int = field(default=1, compare=False)


Target = Union[Name, TupleTarget]


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple
    body: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Assign:
    targets: tuple
    value: Expression
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class AugAssign:
    target: Name
    op: str
    value: Expression
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expression
    then: tuple
    elifs: tuple = ()
    else_: tuple = ()
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expression
    body: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class For:
    target: Target
    iterable: Expression
    body: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class ExprStmt:
    call: Expression
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Return:
    value: Optional[Expression]
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class ImportBinding:
    alias: str
    member: Optional[str]
    module: str


@dataclass(frozen=True)
class Import:
    bindings: tuple
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Break:
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Continue:
    line: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Pass:
    line: int = field(default=1, compare=False)


Statement = Union[FunctionDef, Assign, AugAssign, If, While, For, ExprStmt, Return,
                  Import, Break, Continue, Pass]


@dataclass(frozen=True)
class Ast:
    items: tuple
    origin: str = field(default="<string>", compare=False)

    def functions(self) -> list[FunctionDef]:
        return [s for s in self.items if isinstance(s, FunctionDef)]


# Translation from the stdlib tree ----------------------------------------

BINOPS = {
    pyast.Add: "+", pyast.Sub: "-", pyast.Mult: "*", pyast.Div: "/",
    pyast.FloorDiv: "//", pyast.Mod: "%", pyast.Pow: "**",
}
UNARYOPS = {pyast.USub: "-", pyast.UAdd: "+", pyast.Not: "not"}
CMPOPS = {
    pyast.Lt: "<", pyast.Gt: ">", pyast.LtE: "<=", pyast.GtE: ">=",
    pyast.Eq: "==", pyast.NotEq: "!=", pyast.In: "in", pyast.NotIn: "not in",
}

_UNSUPPORTED_NAMES = {
    pyast.Lambda: "lambda", pyast.ClassDef: "class", pyast.Try: "try",
    pyast.With: "with", pyast.ListComp: "comprehension", pyast.SetComp: "comprehension",
    pyast.DictComp: "comprehension", pyast.GeneratorExp: "comprehension",
    pyast.Dict: "dict", pyast.Set: "set", pyast.Global: "global",
    pyast.Nonlocal: "nonlocal", pyast.Delete: "del", pyast.Raise: "raise",
    pyast.Assert: "assert", pyast.Yield: "yield", pyast.Starred: "starred",
    pyast.JoinedStr: "f-string", pyast.AsyncFunctionDef: "async",
    pyast.Await: "await", pyast.NamedExpr: "walrus",
}
if hasattr(pyast, "TryStar"):
    _UNSUPPORTED_NAMES[pyast.TryStar] = "try"
if hasattr(pyast, "Match"):
    _UNSUPPORTED_NAMES[pyast.Match] = "match"


def _unsupported(node) -> UnsupportedConstruct:
    name = _UNSUPPORTED_NAMES.get(type(node), type(node).__name__.lower())
    return UnsupportedConstruct(getattr(node, "lineno", 1), name)


class _Translator:
    def __init__(self):
        self.depth = 0

    def block(self, stmts) -> tuple:
        return tuple(s for s in (self.stmt(n) for n in stmts) if s is not None)

    def stmt(self, n) -> Optional[Statement]:
        line = n.lineno
        if isinstance(n, pyast.FunctionDef):
            if self.depth > 0:
                raise UnsupportedConstruct(line, "nested function")
            a = n.args
            if n.decorator_list:
                raise UnsupportedConstruct(line, "decorator")
            if a.vararg or a.kwarg or a.kwonlyargs or a.defaults or a.posonlyargs:
                raise UnsupportedConstruct(line, "parameter form")
            self.depth += 1
            body = self.block(n.body)
            self.depth -= 1
            return FunctionDef(n.name, tuple(p.arg for p in a.args), body, line)
        if isinstance(n, pyast.Assign):
            targets = tuple(self.target(t) for t in n.targets)
            return Assign(targets, self.expr(n.value), line)
        if isinstance(n, pyast.AugAssign):
            if not isinstance(n.target, pyast.Name) or type(n.op) not in BINOPS:
                raise UnsupportedConstruct(line, "augmented assignment target")
            return AugAssign(Name(n.target.id, line), BINOPS[type(n.op)], self.expr(n.value), line)
        if isinstance(n, pyast.AnnAssign):
            raise UnsupportedConstruct(line, "annotation")
        if isinstance(n, pyast.If):
            cond = self.expr(n.test)
            then = self.block(n.body)
            elifs = []
            orelse = n.orelse
            while len(orelse) == 1 and isinstance(orelse[0], pyast.If):
                e = orelse[0]
                elifs.append((self.expr(e.test), self.block(e.body)))
                orelse = e.orelse
            return If(cond, then, tuple(elifs), self.block(orelse), line)
        if isinstance(n, pyast.While):
            if n.orelse:
                raise UnsupportedConstruct(line, "while-else")
            return While(self.expr(n.test), self.block(n.body), line)
        if isinstance(n, pyast.For):
            if n.orelse:
                raise UnsupportedConstruct(line, "for-else")
            return For(self.target(n.target), self.expr(n.iter), self.block(n.body), line)
        if isinstance(n, pyast.Expr):
            if isinstance(n.value, pyast.Constant) and isinstance(n.value.value, str):
                return None  # docstring or bare string
            if not isinstance(n.value, pyast.Call):
                raise UnsupportedConstruct(line, "expression statement")
            return ExprStmt(self.expr(n.value), line)
        if isinstance(n, pyast.Return):
            return Return(None if n.value is None else self.expr(n.value), line)
        if isinstance(n, pyast.Import):
            return Import(tuple(
                ImportBinding(a.asname or a.name, None, a.name) for a in n.names), line)
        if isinstance(n, pyast.ImportFrom):
            if not n.module or n.level:
                raise UnsupportedConstruct(line, "relative import")
            return Import(tuple(
                ImportBinding(a.asname or a.name, a.name, n.module) for a in n.names), line)
        if isinstance(n, pyast.Break):
            return Break(line)
        if isinstance(n, pyast.Continue):
            return Continue(line)
        if isinstance(n, pyast.Pass):
            return Pass(line)
        raise _unsupported(n)

    def target(self, t) -> Target:
        if isinstance(t, pyast.Name):
            return Name(t.id, t.lineno)
        if isinstance(t, (pyast.Tuple, pyast.List)) and all(isinstance(e, pyast.Name) for e in t.elts):
            return TupleTarget(tuple(Name(e.id, e.lineno) for e in t.elts), t.lineno)
        raise UnsupportedConstruct(t.lineno, "assignment target")

    def expr(self, n) -> Expression:
        line = n.lineno
        if isinstance(n, pyast.Name):
            return Name(n.id, line)
        if isinstance(n, pyast.Constant):
            v = n.value
            if v is None or isinstance(v, bool):
                return ConstLit(v, line)
            if isinstance(v, (int, float)):
                return NumberLit(repr(v), line)
            if isinstance(v, str):
                return StringLit(v, line)
            raise UnsupportedConstruct(line, type(v).__name__ + " literal")
        if isinstance(n, pyast.List):
            return ListLit(tuple(self.expr(e) for e in n.elts), line)
        if isinstance(n, pyast.Tuple):
            return TupleLit(tuple(self.expr(e) for e in n.elts), line)
        if isinstance(n, pyast.BinOp):
            if type(n.op) not in BINOPS:
                raise UnsupportedConstruct(line, "operator")
            return BinOp(BINOPS[type(n.op)], self.expr(n.left), self.expr(n.right), line)
        if isinstance(n, pyast.UnaryOp):
            if type(n.op) not in UNARYOPS:
                raise UnsupportedConstruct(line, "operator")
            return UnaryOp(UNARYOPS[type(n.op)], self.expr(n.operand), line)
        if isinstance(n, pyast.Compare):
            ops = []
            for o in n.ops:
                if type(o) not in CMPOPS:
                    raise UnsupportedConstruct(line, "comparison")
                ops.append(CMPOPS[type(o)])
            return Compare(self.expr(n.left), tuple(ops),
                           tuple(self.expr(c) for c in n.comparators), line)
        if isinstance(n, pyast.BoolOp):
            op = "and" if isinstance(n.op, pyast.And) else "or"
            return BoolOp(op, tuple(self.expr(v) for v in n.values), line)
        if isinstance(n, pyast.Call):
            if n.keywords:
                raise UnsupportedConstruct(line, "keyword argument")
            if isinstance(n.func, pyast.Name):
                callee = Name(n.func.id, line)
            elif isinstance(n.func, pyast.Attribute):
                callee = Attribute(self.expr(n.func.value), n.func.attr, line)
            else:
                raise UnsupportedConstruct(line, "call target")
            return Call(callee, tuple(self.expr(a) for a in n.args), line)
        if isinstance(n, pyast.Attribute):
            raise UnsupportedConstruct(line, "attribute access")
        if isinstance(n, pyast.Subscript):
            s = n.slice
            if isinstance(s, pyast.Slice):
                if s.step is not None:
                    raise UnsupportedConstruct(line, "slice step")
                idx = Slice(None if s.lower is None else self.expr(s.lower),
                            None if s.upper is None else self.expr(s.upper), line)
            else:
                idx = self.expr(s)
            return Subscript(self.expr(n.value), idx, line)
        if isinstance(n, pyast.IfExp):
            return Ternary(self.expr(n.test), self.expr(n.body), self.expr(n.orelse), line)
        raise _unsupported(n)


def parse(src: Union[SourceProgram, str]) -> Ast:
    """Parse MiniLang text.  Top-level code is kept in order; the model
    builder wraps the non-definition statements into an implicit ``main``."""
    if isinstance(src, str):
        src = SourceProgram(src)
    if not src.text.strip():
        raise MiniLangSyntaxError(1, "empty program")
    try:
        tree = pyast.parse(src.text)
    except SyntaxError as e:
        raise MiniLangSyntaxError(e.lineno or 1, e.msg or "invalid syntax", e.offset or 0) from None
    except ValueError as e:  # e.g. null bytes
        raise MiniLangSyntaxError(1, str(e)) from None
    items = _Translator().block(tree.body)
    return Ast(items, src.origin)


# Imports -----------------------------------------------------------------

@dataclass(frozen=True)
class ImportTable:
    """alias -> (member, module); member is None for whole-module imports."""
    bindings: tuple = ()
    wildcards: tuple = ()

    def lookup(self, alias: str) -> Optional[ImportBinding]:
        for b in self.bindings:
            if b.alias == alias:
                return b
        return None

    def modules(self) -> dict[str, str]:
        return {b.alias: b.module for b in self.bindings if b.member is None}

    def as_dict(self) -> dict:
        out = {}
        for b in self.bindings:
            out[b.alias] = (b.module,) if b.member is None else (b.member, b.module)
        for m in self.wildcards:
            out.setdefault("*", ("*", m))
        return out


def _walk_statements(stmts):
    for s in stmts:
        yield s
        if isinstance(s, FunctionDef):
            yield from _walk_statements(s.body)
        elif isinstance(s, If):
            yield from _walk_statements(s.then)
            for _, b in s.elifs:
                yield from _walk_statements(b)
            yield from _walk_statements(s.else_)
        elif isinstance(s, (While, For)):
            yield from _walk_statements(s.body)


def collect_imports(tree: Ast) -> ImportTable:
    bindings: dict[str, ImportBinding] = {}
    wild: list[str] = []
    for s in _walk_statements(tree.items):
        if not isinstance(s, Import):
            continue
        for b in s.bindings:
            if b.member == "*":
                if b.module not in wild:
                    wild.append(b.module)
                continue
            bindings[b.alias] = b  # later imports shadow earlier ones
    return ImportTable(tuple(bindings.values()), tuple(wild))


# Pretty printing -----------------------------------------------------------

def unparse_expr(e: Expression) -> str:
    # fully parenthesised: simple, and unambiguous on re-parse
    if isinstance(e, Name):
        return e.id
    if isinstance(e, NumberLit):
        return e.lexeme
    if isinstance(e, StringLit):
        return repr(e.value)
    if isinstance(e, ConstLit):
        return repr(e.value)
    if isinstance(e, ListLit):
        return "[" + ", ".join(unparse_expr(x) for x in e.elts) + "]"
    if isinstance(e, TupleLit):
        if len(e.elts) == 1:
            return "(" + unparse_expr(e.elts[0]) + ",)"
        return "(" + ", ".join(unparse_expr(x) for x in e.elts) + ")"
    if isinstance(e, BinOp):
        return f"({unparse_expr(e.left)} {e.op} {unparse_expr(e.right)})"
    if isinstance(e, UnaryOp):
        sep = " " if e.op == "not" else ""
        return f"({e.op}{sep}{unparse_expr(e.operand)})"
    if isinstance(e, Compare):
        parts = [unparse_expr(e.left)]
        for op, c in zip(e.ops, e.comparators):
            parts += [op, unparse_expr(c)]
        return "(" + " ".join(parts) + ")"
    if isinstance(e, BoolOp):
        return "(" + f" {e.op} ".join(unparse_expr(v) for v in e.values) + ")"
    if isinstance(e, Attribute):
        return f"{unparse_expr(e.value)}.{e.attr}"
    if isinstance(e, Call):
        return f"{unparse_expr(e.callee)}(" + ", ".join(unparse_expr(a) for a in e.args) + ")"
    if isinstance(e, Subscript):
        if isinstance(e.index, Slice):
            lo = "" if e.index.lower is None else unparse_expr(e.index.lower)
            hi = "" if e.index.upper is None else unparse_expr(e.index.upper)
            return f"{unparse_expr(e.value)}[{lo}:{hi}]"
        return f"{unparse_expr(e.value)}[{unparse_expr(e.index)}]"
    if isinstance(e, Ternary):
        return f"({unparse_expr(e.then)} if {unparse_expr(e.cond)} else {unparse_expr(e.orelse)})"
    raise TypeError(f"not an expression: {e!r}")


def _target_text(t: Target) -> str:
    if isinstance(t, TupleTarget):
        return ", ".join(n.id for n in t.names) + ("," if len(t.names) == 1 else "")
    return t.id


def unparse(tree: Ast, indent: str = "    ") -> str:
    lines: list[str] = []

    def block(stmts, depth):
        if not stmts:
            lines.append(indent * depth + "pass")
        for s in stmts:
            stmt(s, depth)

    def stmt(s, depth):
        pad = indent * depth
        if isinstance(s, FunctionDef):
            lines.append(f"{pad}def {s.name}({', '.join(s.params)}):")
            block(s.body, depth + 1)
        elif isinstance(s, Assign):
            lhs = " = ".join(_target_text(t) for t in s.targets)
            lines.append(f"{pad}{lhs} = {unparse_expr(s.value)}")
        elif isinstance(s, AugAssign):
            lines.append(f"{pad}{s.target.id} {s.op}= {unparse_expr(s.value)}")
        elif isinstance(s, If):
            lines.append(f"{pad}if {unparse_expr(s.cond)}:")
            block(s.then, depth + 1)
            for c, b in s.elifs:
                lines.append(f"{pad}elif {unparse_expr(c)}:")
                block(b, depth + 1)
            if s.else_:
                lines.append(f"{pad}else:")
                block(s.else_, depth + 1)
        elif isinstance(s, While):
            lines.append(f"{pad}while {unparse_expr(s.cond)}:")
            block(s.body, depth + 1)
        elif isinstance(s, For):
            lines.append(f"{pad}for {_target_text(s.target)} in {unparse_expr(s.iterable)}:")
            block(s.body, depth + 1)
        elif isinstance(s, ExprStmt):
            lines.append(pad + unparse_expr(s.call))
        elif isinstance(s, Return):
            lines.append(pad + "return" + ("" if s.value is None else " " + unparse_expr(s.value)))
        elif isinstance(s, Import):
            for b in s.bindings:
                if b.member is None:
                    alias = "" if b.alias == b.module else f" as {b.alias}"
                    lines.append(f"{pad}import {b.module}{alias}")
                else:
                    alias = "" if b.alias == b.member else f" as {b.alias}"
                    lines.append(f"{pad}from {b.module} import {b.member}{alias}")
        elif isinstance(s, Break):
            lines.append(pad + "break")
        elif isinstance(s, Continue):
            lines.append(pad + "continue")
        elif isinstance(s, Pass):
            lines.append(pad + "pass")
        else:
            raise TypeError(f"not a statement: {s!r}")

    for s in tree.items:
        stmt(s, 0)
    return "\n".join(lines) + "\n"


def dump(tree: Ast) -> str:
    """Readable one-node-per-line dump used by the CLI."""
    out: list[str] = []

    def rec(node, depth):
        pad = "  " * depth
        if isinstance(node, tuple):
            for x in node:
                rec(x, depth)
            return
        if not hasattr(node, "__dataclass_fields__"):
            out.append(pad + repr(node))
            return
        simple = {}
        nested = {}
        for k in node.__dataclass_fields__:
            if k == "line":
                continue
            v = getattr(node, k)
            if isinstance(v, tuple) and v and hasattr(v[0], "__dataclass_fields__") or \
               hasattr(v, "__dataclass_fields__") or (isinstance(v, tuple) and v and isinstance(v[0], tuple)):
                nested[k] = v
            else:
                simple[k] = v
        attrs = " ".join(f"{k}={v!r}" for k, v in simple.items())
        line = getattr(node, "line", None)
        out.append(f"{pad}{type(node).__name__}" + (f" {attrs}" if attrs else "")
                   + (f"  @{line}" if line is not None else ""))
        for k, v in nested.items():
            out.append(f"{pad}  .{k}")
            rec(v, depth + 2)

    rec(tree.items, 0)
    return "\n".join(out) + "\n"
