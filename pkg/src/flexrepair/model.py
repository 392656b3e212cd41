"""Program model: functions made of locations, each holding ordered
variable bindings and True/False transitions.

Inside a location a primed use ``x'`` reads the value bound to ``x`` earlier
in the same location; an unprimed ``x`` reads the value on entry.
"""
from __future__ import annotations

import ast as pyast
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Union

from . import frontend as fe
from .frontend import ImportTable, collect_imports

SPECIAL_VARS = ("$cond", "$out", "$ret")
COND, OUT, RET = SPECIAL_VARS

BUILTIN_NAMES = frozenset({
    "print", "input", "len", "range", "map", "int", "float", "str", "list",
    "sum", "max", "min", "abs", "sorted", "split", "join", "format",
})

RULE = "-" * 35


class LoweringError(Exception):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# Expressions ---------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    primed: bool = False

    def __str__(self):
        return self.name + ("'" if self.primed else "")


@dataclass(frozen=True)
class Const:
    """A literal.  ``kind`` is one of num, str, bool, none, func."""
    lexeme: str
    kind: str = "num"

    @property
    def value(self):
        if self.kind == "num":
            return pyast.literal_eval(self.lexeme)
        if self.kind == "bool":
            return self.lexeme == "True"
        if self.kind == "none":
            return None
        return self.lexeme

    def __str__(self):
        if self.kind == "str":
            return repr(self.lexeme)
        if self.kind == "func":
            return "@" + self.lexeme
        return self.lexeme


@dataclass(frozen=True)
class Op:
    name: str
    args: tuple = ()
    site: Optional[int] = field(default=None, compare=False, hash=False)

    def __str__(self):
        return f"{self.name}(" + ", ".join(str(a) for a in self.args) + ")"


Expr = Union[Var, Const, Op]


def num(v) -> Const:
    return Const(repr(v), "num")


def is_generated(name: str) -> bool:
    return name.startswith("$") or "#" in name


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Op):
        for a in e.args:
            yield from walk(a)


def expr_vars(e: Expr) -> set[str]:
    return {x.name for x in walk(e) if isinstance(x, Var)}


def primed_vars(e: Expr) -> set[str]:
    return {x.name for x in walk(e) if isinstance(x, Var) and x.primed}


def unprimed_vars(e: Expr) -> set[str]:
    return {x.name for x in walk(e) if isinstance(x, Var) and not x.primed}


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace Var nodes (matched by equality, so primes matter)."""
    if isinstance(e, Var):
        return mapping.get(e, e)
    if isinstance(e, Op):
        args = tuple(substitute(a, mapping) for a in e.args)
        if args == e.args:
            return e
        return Op(e.name, args, e.site)
    return e


def rename_vars(e: Expr, ren: dict[str, str]) -> Expr:
    """Rename variables regardless of prime."""
    if isinstance(e, Var):
        return Var(ren.get(e.name, e.name), e.primed)
    if isinstance(e, Op):
        return Op(e.name, tuple(rename_vars(a, ren) for a in e.args), e.site)
    return e


def set_primes(e: Expr, fn) -> Expr:
    if isinstance(e, Var):
        p = fn(e)
        return e if p == e.primed else Var(e.name, p)
    if isinstance(e, Op):
        return Op(e.name, tuple(set_primes(a, fn) for a in e.args), e.site)
    return e


def expr_size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


# Locations and functions ---------------------------------------------------

@dataclass(frozen=True)
class Location:
    id: int
    description: str
    bindings: tuple = ()          # ((var, Expr), ...) in evaluation order
    true_next: Optional[int] = None
    false_next: Optional[int] = None
    line: int = field(default=0, compare=False)

    def get(self, var: str) -> Optional[Expr]:
        for v, e in self.bindings:
            if v == var:
                return e
        return None

    def bound(self) -> list[str]:
        return [v for v, _ in self.bindings]

    @property
    def conditional(self) -> bool:
        return self.get(COND) is not None


@dataclass(frozen=True)
class ModelFunction:
    name: str
    params: tuple
    entry: int
    locations: dict            # id -> Location, ascending ids
    line: int = field(default=0, compare=False)

    def loc(self, i: int) -> Location:
        return self.locations[i]

    def variables(self) -> list[str]:
        seen = dict.fromkeys(self.params)
        for l in self.locations.values():
            for v, e in l.bindings:
                seen.setdefault(v)
        return list(seen)

    def all_names(self) -> set[str]:
        names = set(self.params)
        for l in self.locations.values():
            for v, e in l.bindings:
                names.add(v)
                names |= expr_vars(e)
        return names

    def num_bindings(self) -> int:
        return sum(len(l.bindings) for l in self.locations.values())


@dataclass(frozen=True)
class Model:
    functions: dict            # name -> ModelFunction
    imports: ImportTable = field(default_factory=ImportTable)
    entry: str = "main"

    def num_bindings(self) -> int:
        return sum(f.num_bindings() for f in self.functions.values())

    def with_function(self, f: ModelFunction) -> "Model":
        fs = dict(self.functions)
        fs[f.name] = f
        return replace(self, functions=fs)


@dataclass(frozen=True)
class ModelOptions:
    ternary_optimization: bool = False
    side_effecting: frozenset = frozenset({"input"})


# Lowering ------------------------------------------------------------------

_BINOP_NAMES = {"+": "Add", "-": "Sub", "*": "Mul", "/": "Div", "//": "FloorDiv",
                "%": "Mod", "**": "Pow"}
_AUG_NAMES = {k: "Ass" + v for k, v in _BINOP_NAMES.items()}
_UNARY_NAMES = {"-": "USub", "+": "UAdd", "not": "Not"}
_CMP_NAMES = {"<": "Lt", ">": "Gt", "<=": "Le", ">=": "Ge", "==": "Eq", "!=": "NotEq",
              "in": "In", "not in": "NotIn"}


class _Draft:
    def __init__(self, id: int, description: str, line: int):
        self.id = id
        self.description = description
        self.line = line
        self.bindings: dict[str, Expr] = {}
        self.true_next: Optional[int] = None
        self.false_next: Optional[int] = None

    def freeze(self) -> Location:
        return Location(self.id, self.description, tuple(self.bindings.items()),
                        self.true_next, self.false_next, self.line)


def _assigned_names(stmts) -> set[str]:
    out = set()
    for s in stmts:
        if isinstance(s, fe.Assign):
            for t in s.targets:
                out |= {n.id for n in (t.names if isinstance(t, fe.TupleTarget) else [t])}
        elif isinstance(s, fe.AugAssign):
            out.add(s.target.id)
        elif isinstance(s, fe.For):
            t = s.target
            out |= {n.id for n in (t.names if isinstance(t, fe.TupleTarget) else [t])}
            out |= _assigned_names(s.body)
        elif isinstance(s, fe.While):
            out |= _assigned_names(s.body)
        elif isinstance(s, fe.If):
            out |= _assigned_names(s.then)
            for _, b in s.elifs:
                out |= _assigned_names(b)
            out |= _assigned_names(s.else_)
    return out


def _walk_exprs(node) -> Iterator:
    if isinstance(node, tuple):
        for x in node:
            yield from _walk_exprs(x)
        return
    if not hasattr(node, "__dataclass_fields__"):
        return
    yield node
    for k in node.__dataclass_fields__:
        yield from _walk_exprs(getattr(node, k))


class _FunctionLowering:
    def __init__(self, name: str, params: tuple, line: int, env: "_ProgramEnv",
                 body: tuple):
        self.name = name
        self.params = params
        self.env = env
        self.locs: dict[int, _Draft] = {}
        self.loops: list[tuple[int, int]] = []
        self.counters: dict[str, int] = defaultdict(int)
        self.locals = set(params) | _assigned_names(body)
        self.overlay: Optional[dict[str, Expr]] = None
        self.current: Optional[_Draft] = self.new_loc(
            f"around the beginning of function {name}", line)
        self.entry = self.current.id
        self.site = 0

    # helpers
    def new_loc(self, description: str, line: int) -> _Draft:
        d = _Draft(len(self.locs) + 1, description, line)
        self.locs[d.id] = d
        return d

    def fresh(self, kind: str) -> str:
        k = self.counters[kind]
        self.counters[kind] += 1
        return f"{kind}#{k}"

    def use(self, name: str) -> Expr:
        if self.overlay is not None and name in self.overlay:
            return self.overlay[name]
        return Var(name, self.current is not None and name in self.current.bindings)

    def bind_many(self, pairs: list[tuple[str, Expr]]) -> None:
        cur = self.current.bindings
        targets = {v for v, _ in pairs}
        if len(targets) > 1:
            # simultaneous assignment: expand away every target read so later binds cannot shift it
            old = {Var(v, True): cur[v] for v in targets if v in cur}
            expanded = []
            for v, e in pairs:
                while primed_vars(e) & set(x.name for x in old):
                    e = substitute(e, old)
                expanded.append((v, e))
            pairs = expanded
        for v, e in pairs:
            self.bind(v, e)

    def bind(self, var: str, e: Expr) -> None:
        cur = self.current.bindings
        if var in cur:
            prev = {Var(var, True): cur[var]}
            e = substitute(e, prev)
            del cur[var]
            for u in list(cur):
                cur[u] = substitute(cur[u], prev)
        cur[var] = e

    # expressions
    def expr(self, n) -> Expr:
        if isinstance(n, fe.Name):
            if n.id not in self.locals and (
                    n.id in BUILTIN_NAMES or n.id in self.env.functions
                    or self.env.imports.lookup(n.id) is not None):
                return Const(n.id, "func")
            return self.use(n.id)
        if isinstance(n, fe.NumberLit):
            return Const(n.lexeme, "num")
        if isinstance(n, fe.StringLit):
            return Const(n.value, "str")
        if isinstance(n, fe.ConstLit):
            return Const(repr(n.value), "none" if n.value is None else "bool")
        if isinstance(n, fe.ListLit):
            return Op("ListInit", tuple(self.expr(x) for x in n.elts))
        if isinstance(n, fe.TupleLit):
            return Op("TupleInit", tuple(self.expr(x) for x in n.elts))
        if isinstance(n, fe.BinOp):
            return Op(_BINOP_NAMES[n.op], (self.expr(n.left), self.expr(n.right)))
        if isinstance(n, fe.UnaryOp):
            return Op(_UNARY_NAMES[n.op], (self.expr(n.operand),))
        if isinstance(n, fe.Compare):
            items = [self.expr(n.left)] + [self.expr(c) for c in n.comparators]
            parts = [Op(_CMP_NAMES[op], (items[i], items[i + 1])) for i, op in enumerate(n.ops)]
            return parts[0] if len(parts) == 1 else Op("And", tuple(parts))
        if isinstance(n, fe.BoolOp):
            return Op("And" if n.op == "and" else "Or", tuple(self.expr(v) for v in n.values))
        if isinstance(n, fe.Subscript):
            base = self.expr(n.value)
            if isinstance(n.index, fe.Slice):
                lo = Const("None", "none") if n.index.lower is None else self.expr(n.index.lower)
                hi = Const("None", "none") if n.index.upper is None else self.expr(n.index.upper)
                return Op("GetSlice", (base, lo, hi))
            return Op("GetElement", (base, self.expr(n.index)))
        if isinstance(n, fe.Ternary):
            return Op("ite", (self.expr(n.cond), self.expr(n.then), self.expr(n.orelse)))
        if isinstance(n, fe.Call):
            return self.call(n)
        raise LoweringError(getattr(n, "line", 0), f"cannot lower {type(n).__name__}")

    def call_name(self, n: fe.Call) -> tuple[str, list]:
        c = n.callee
        if isinstance(c, fe.Name):
            return c.id, []
        if isinstance(c.value, fe.Name) and c.value.id not in self.locals and \
                c.value.id in self.env.imports.modules():
            return f"{c.value.id}.{c.attr}", []
        return c.attr, [c.value]       # method call: receiver becomes first arg

    def call(self, n: fe.Call) -> Expr:
        name, recv = self.call_name(n)
        args = tuple(self.expr(a) for a in list(recv) + list(n.args))
        self.site += 1
        op = Op(name, args, self.site)
        if self.hoists(name):
            if self.overlay is not None:
                raise LoweringError(n.line, "side-effecting call in folded branch")
            var = self.fresh(name.replace(".", "_") + "_val")
            self.bind(var, op)
            return Var(var, True)
        return op

    def hoists(self, name: str) -> bool:
        base = name.rsplit(".", 1)[-1]
        return (name in self.env.side_effecting or base in self.env.side_effecting
                or name in self.env.functions)

    # statements
    def block(self, stmts) -> None:
        for s in stmts:
            if self.current is None:
                return        # unreachable code after return/break/continue
            self.stmt(s)

    def target_pairs(self, t, value_node, value_expr) -> list[tuple[str, Expr]]:
        if isinstance(t, fe.Name):
            return [(t.id, value_expr())]
        names = [x.id for x in t.names]
        if isinstance(value_node, (fe.ListLit, fe.TupleLit)) and len(value_node.elts) == len(names):
            return [(nm, self.expr(v)) for nm, v in zip(names, value_node.elts)]
        whole = value_expr()
        return [(nm, Op("GetElement", (whole, num(i)))) for i, nm in enumerate(names)]

    def stmt(self, s) -> None:
        if isinstance(s, fe.Assign):
            cache = []

            def value():
                if not cache:
                    cache.append(self.expr(s.value))
                return cache[0]
            pairs = []
            for t in s.targets:
                pairs += self.target_pairs(t, s.value, value)
            self.bind_many(pairs)
        elif isinstance(s, fe.AugAssign):
            e = Op(_AUG_NAMES[s.op], (self.use(s.target.id), self.expr(s.value)))
            self.bind_many([(s.target.id, e)])
        elif isinstance(s, fe.ExprStmt):
            self.expr_stmt(s)
        elif isinstance(s, fe.Return):
            e = Const("None", "none") if s.value is None else self.expr(s.value)
            self.bind_many([(RET, e)])
            self.current.true_next = None
            self.current = None
        elif isinstance(s, (fe.Break, fe.Continue)):
            if not self.loops:
                raise LoweringError(s.line, f"'{type(s).__name__.lower()}' outside loop")
            guard, exit_ = self.loops[-1]
            self.current.true_next = exit_ if isinstance(s, fe.Break) else guard
            self.current = None
        elif isinstance(s, fe.If):
            if self.env.opts.ternary_optimization and self.foldable(s):
                self.fold_if(s)
            else:
                self.lower_if(s)
        elif isinstance(s, fe.While):
            self.lower_while(s)
        elif isinstance(s, fe.For):
            self.lower_for(s)
        elif isinstance(s, (fe.Pass, fe.Import)):
            pass
        elif isinstance(s, fe.FunctionDef):
            raise LoweringError(s.line, "nested function")
        else:
            raise LoweringError(getattr(s, "line", 0), f"cannot lower {type(s).__name__}")

    def expr_stmt(self, s: fe.ExprStmt) -> None:
        n = s.call
        if isinstance(n, fe.Call) and isinstance(n.callee, fe.Name) and \
                n.callee.id == "print" and "print" not in self.locals:
            args = tuple(self.expr(a) for a in n.args)
            self.bind_many([(OUT, Op("print", (self.use(OUT),) + args))])
            return
        e = self.expr(n)
        if isinstance(e, Var):
            return       # hoisted call already bound
        self.bind_many([(self.fresh("call"), e)])

    def link(self, frm: Optional[_Draft], to: _Draft) -> None:
        if frm is not None:
            frm.true_next = to.id

    def lower_if(self, s: fe.If) -> None:
        pre = self.current
        cond = self.new_loc(f"the condition of the 'if' statement at line {s.line}", s.line)
        self.link(pre, cond)
        self.current = cond
        self.bind_many([(COND, self.expr(s.cond))])
        first = s.then[0].line if s.then else s.line
        then = self.new_loc(f"inside the 'if' branch starting at line {first}", first)
        cond.true_next = then.id
        self.current = then
        self.block(s.then)
        ends = [self.current]
        rest = s.else_
        if s.elifs:
            (c, b), more = s.elifs[0], s.elifs[1:]
            rest = (fe.If(c, b, more, s.else_, c.line),)
        if rest:
            first = rest[0].line
            other = self.new_loc(f"inside the 'else' branch starting at line {first}", first)
            cond.false_next = other.id
            self.current = other
            self.block(rest)
            ends.append(self.current)
        else:
            ends.append(cond)
        live = [e for e in ends if e is not None]
        if not live:
            self.current = None
            return
        after = self.new_loc(f"*after* the 'if' statement beginning at line {s.line}", s.line)
        for e in ends:
            if e is cond:
                cond.false_next = after.id
            elif e is not None:
                e.true_next = after.id
        self.current = after

    def loop_locs(self, kind: str, s) -> tuple[_Draft, _Draft, _Draft]:
        guard = self.new_loc(f"the condition of the '{kind}' loop at line {s.line}", s.line)
        exit_ = self.new_loc(f"*after* the '{kind}' loop starting at line {s.line}", s.line)
        first = s.body[0].line if s.body else s.line
        body = self.new_loc(f"inside the body of the '{kind}' loop beginning at line {first}", first)
        guard.true_next, guard.false_next = body.id, exit_.id
        return guard, exit_, body

    def lower_loop_body(self, s, guard: _Draft, exit_: _Draft, body: _Draft, prologue) -> None:
        self.current = body
        prologue()
        self.loops.append((guard.id, exit_.id))
        self.block(s.body)
        self.loops.pop()
        if self.current is not None:
            self.current.true_next = guard.id
        self.current = exit_

    def lower_while(self, s: fe.While) -> None:
        pre = self.current
        guard, exit_, body = self.loop_locs("while", s)
        self.link(pre, guard)
        self.current = guard
        self.bind_many([(COND, self.expr(s.cond))])
        self.lower_loop_body(s, guard, exit_, body, lambda: None)

    def lower_for(self, s: fe.For) -> None:
        k = self.counters["loop"]
        self.counters["loop"] += 1
        it, ind = f"iter#{k}", f"ind#{k}"
        self.bind_many([(it, self.expr(s.iterable))])
        self.bind_many([(ind, num(0))])
        pre = self.current
        guard, exit_, body = self.loop_locs("for", s)
        self.link(pre, guard)
        self.current = guard
        self.bind(COND, Op("Lt", (Var(ind), Op("len", (Var(it),)))))

        def prologue():
            elem = Op("GetElement", (Var(it), Var(ind)))
            t = s.target
            if isinstance(t, fe.Name):
                self.bind(t.id, elem)
            else:
                self.bind_many([(x.id, Op("GetElement", (elem, num(i))))
                                for i, x in enumerate(t.names)])
            self.bind(ind, Op("Add", (Var(ind), num(1))))
        self.lower_loop_body(s, guard, exit_, body, prologue)

    # ternary folding
    def foldable(self, s) -> bool:
        if isinstance(s, (fe.Assign, fe.AugAssign, fe.Pass)):
            return not self.has_effects(s)
        if isinstance(s, fe.ExprStmt):
            c = s.call
            ok = isinstance(c, fe.Call) and isinstance(c.callee, fe.Name) and c.callee.id == "print"
            return ok and not self.has_effects(s)
        if isinstance(s, fe.If):
            blocks = [s.then, s.else_] + [b for _, b in s.elifs]
            conds = [s.cond] + [c for c, _ in s.elifs]
            return (not any(self.has_effects(c) for c in conds)
                    and all(self.foldable(x) for b in blocks for x in b))
        return False

    def has_effects(self, node) -> bool:
        for n in _walk_exprs(node):
            if isinstance(n, fe.Call):
                name, _ = self.call_name(n)
                if self.hoists(name):
                    return True
        return False

    def fold_block(self, stmts) -> dict[str, Expr]:
        for s in stmts:
            if isinstance(s, fe.Assign):
                cache = []

                def value(s=s):
                    if not cache:
                        cache.append(self.expr(s.value))
                    return cache[0]
                pairs = []
                for t in s.targets:
                    pairs += self.target_pairs(t, s.value, value)
                self.overlay.update(pairs)
            elif isinstance(s, fe.AugAssign):
                self.overlay[s.target.id] = Op(_AUG_NAMES[s.op],
                                               (self.use(s.target.id), self.expr(s.value)))
            elif isinstance(s, fe.ExprStmt):
                args = tuple(self.expr(a) for a in s.call.args)
                self.overlay[OUT] = Op("print", (self.use(OUT),) + args)
            elif isinstance(s, fe.If):
                self.overlay.update(self.fold_if_values(s))
        return self.overlay

    def fold_if_values(self, s: fe.If) -> dict[str, Expr]:
        cond = self.expr(s.cond)
        base = dict(self.overlay)
        self.overlay = dict(base)
        then = self.fold_block(s.then)
        rest = s.else_
        if s.elifs:
            (c, b), more = s.elifs[0], s.elifs[1:]
            rest = (fe.If(c, b, more, s.else_, c.line),)
        self.overlay = dict(base)
        other = self.fold_block(rest)
        self.overlay = base
        out = {}
        for v in dict.fromkeys(list(then) + list(other)):
            t, o = then.get(v), other.get(v)
            if t is base.get(v) and o is base.get(v):
                continue
            cur = self.use(v)
            out[v] = Op("ite", (cond, t if t is not None else cur, o if o is not None else cur))
        return out

    def fold_if(self, s: fe.If) -> None:
        self.overlay = {}
        values = self.fold_if_values(s)
        self.overlay = None
        if values:
            self.bind_many(list(values.items()))

    def finish(self) -> ModelFunction:
        locs = {i: d.freeze() for i, d in sorted(self.locs.items())}
        return ModelFunction(self.name, tuple(self.params), self.entry, locs,
                             self.locs[self.entry].line)


@dataclass
class _ProgramEnv:
    functions: set
    imports: ImportTable
    opts: ModelOptions
    side_effecting: frozenset


def build_model(tree: fe.Ast, opts: ModelOptions = ModelOptions()) -> Model:
    imports = collect_imports(tree)
    defs = tree.functions()
    names = [d.name for d in defs]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        d = next(x for x in defs if x.name == dup)
        raise LoweringError(d.line, f"function '{dup}' defined twice")
    top = tuple(s for s in tree.items if not isinstance(s, (fe.FunctionDef, fe.Import)))
    main_name = fe.IMPLICIT_MAIN if fe.IMPLICIT_MAIN not in names else "$main"
    env = _ProgramEnv(set(names), imports, opts,
                      frozenset(opts.side_effecting) | {"input"})
    functions: dict[str, ModelFunction] = {}
    if top:
        env.functions.add(main_name)
        low = _FunctionLowering(main_name, (), top[0].line, env, top)
        low.block(top)
        functions[main_name] = low.finish()
        entry = main_name
    else:
        entry = fe.IMPLICIT_MAIN if fe.IMPLICIT_MAIN in names else (names[0] if names else main_name)
        if not names:
            functions[main_name] = _FunctionLowering(main_name, (), 1, env, ()).finish()
    for d in defs:
        low = _FunctionLowering(d.name, d.params, d.line, env, d.body)
        low.block(d.body)
        functions[d.name] = low.finish()
    return Model(functions, imports, entry)


def model_from_source(text: str, opts: ModelOptions = ModelOptions()) -> Model:
    return build_model(fe.parse(fe.SourceProgram(text)), opts)


# Standalone hoisting pass --------------------------------------------------

_HOISTED = re.compile(r".+_val#\d+$")


def hoist_side_effecting_calls(model: Model, side_effecting: Iterable[str]) -> Model:
    """Evaluate each side-effecting call site once into a fresh ``<f>_val#k``
    variable.  Copies of one call site made by binding nesting share the
    site id and therefore share the variable."""
    names = set(side_effecting) | {"input"}

    def wanted(op: Op) -> bool:
        return op.name in names or op.name.rsplit(".", 1)[-1] in names

    fs = {}
    for fname, f in model.functions.items():
        taken = f.all_names()
        counters: dict[str, int] = defaultdict(int)

        def fresh(base):
            while f"{base}#{counters[base]}" in taken:
                counters[base] += 1
            name = f"{base}#{counters[base]}"
            taken.add(name)
            return name

        locs = {}
        for i, loc in f.locations.items():
            out: list[tuple[str, Expr]] = []
            seen: dict = {}

            def hoist(e: Expr) -> Expr:
                if not isinstance(e, Op):
                    return e
                e2 = Op(e.name, tuple(hoist(a) for a in e.args), e.site)
                if not wanted(e2):
                    return e2
                key = e2.site if e2.site is not None else object()
                if key in seen:
                    return Var(seen[key], True)
                var = fresh(e2.name.replace(".", "_") + "_val")
                seen[key] = var
                out.append((var, e2))
                return Var(var, True)

            for v, e in loc.bindings:
                if _HOISTED.match(v) and isinstance(e, Op) and wanted(e):
                    out.append((v, Op(e.name, tuple(hoist(a) for a in e.args), e.site)))
                    if e.site is not None:
                        seen[e.site] = v
                    continue
                out.append((v, hoist(e)))
            locs[i] = replace(loc, bindings=tuple(out))
        fs[fname] = replace(f, locations=locs)
    return replace(model, functions=fs)


# Pretty printing and reading ------------------------------------------------

def _format_location(loc: Location) -> list[str]:
    lines = [f"Loc {loc.id} ({loc.description})", RULE]
    lines += [f"  {v} := {e}" for v, e in loc.bindings]
    lines += [RULE, f"  True -> {loc.true_next}, False -> {loc.false_next}"]
    return lines


def _plain(model: Model) -> bool:
    if len(model.functions) != 1:
        return False
    f = next(iter(model.functions.values()))
    return f.name == "main" and not f.params and f.entry == min(f.locations) and model.entry == "main"


def pretty_function(f: ModelFunction, header: bool = True) -> str:
    blocks = []
    if header:
        blocks.append([f"Function {f.name}({', '.join(f.params)}), entry {f.entry}"])
    blocks += [_format_location(l) for l in f.locations.values()]
    return "\n\n".join("\n".join(b) for b in blocks) + "\n"


def pretty_print(model: Model) -> str:
    header = not _plain(model)
    parts = [pretty_function(f, header) for f in model.functions.values()]
    return "\n".join(parts)


_TOKEN = re.compile(r"""\s*(?:
    (?P<str>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
  | (?P<num>-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|-?\.\d+(?:[eE][-+]?\d+)?|-?inf|nan)
  | (?P<func>@[A-Za-z_][\w.]*)
  | (?P<name>[A-Za-z_$][\w#$.]*'?)
  | (?P<punct>[(),])
)""", re.VERBOSE)


def parse_expr(text: str) -> Expr:
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad expression text at {pos}: {text!r}")
        kind = m.lastgroup
        toks.append((kind, m.group(kind)))
        pos = m.end()
    i = 0

    def parse() -> Expr:
        nonlocal i
        kind, tok = toks[i]
        i += 1
        if kind == "str":
            return Const(pyast.literal_eval(tok), "str")
        if kind == "num":
            return Const(tok, "num")
        if kind == "func":
            return Const(tok[1:], "func")
        if kind == "name":
            if i < len(toks) and toks[i] == ("punct", "("):
                i += 1
                args = []
                if toks[i] != ("punct", ")"):
                    while True:
                        args.append(parse())
                        if toks[i] == ("punct", ","):
                            i += 1
                            continue
                        break
                if toks[i] != ("punct", ")"):
                    raise ValueError(f"expected ')' in {text!r}")
                i += 1
                return Op(tok, tuple(args))
            if tok in ("True", "False"):
                return Const(tok, "bool")
            if tok == "None":
                return Const(tok, "none")
            if tok.endswith("'"):
                return Var(tok[:-1], True)
            return Var(tok)
        raise ValueError(f"unexpected token {tok!r} in {text!r}")

    e = parse()
    if i != len(toks):
        raise ValueError(f"trailing tokens in {text!r}")
    return e


_LOC_HEAD = re.compile(r"^Loc (\d+) \((.*)\)$")
_FN_HEAD = re.compile(r"^Function (\S+)\((.*)\), entry (\d+)$")
_TRANS = re.compile(r"^\s*True -> (\w+), False -> (\w+)$")
_LINE_NO = re.compile(r"line (\d+)")


def read_model(text: str, imports: ImportTable = ImportTable()) -> Model:
    """Inverse of :func:`pretty_print`."""
    functions: dict[str, ModelFunction] = {}
    lines = text.splitlines()
    name, params, entry = "main", (), None
    locs: dict[int, Location] = {}

    def flush():
        if locs:
            ent = entry if entry is not None else min(locs)
            functions[name] = ModelFunction(name, params, ent, dict(sorted(locs.items())),
                                            locs[ent].line)

    i = 0
    while i < len(lines):
        ln = lines[i]
        if not ln.strip():
            i += 1
            continue
        m = _FN_HEAD.match(ln)
        if m:
            flush()
            locs = {}
            name = m.group(1)
            params = tuple(p.strip() for p in m.group(2).split(",") if p.strip())
            entry = int(m.group(3))
            i += 1
            continue
        m = _LOC_HEAD.match(ln)
        if not m:
            raise ValueError(f"line {i + 1}: expected location header, got {ln!r}")
        lid, desc = int(m.group(1)), m.group(2)
        if lines[i + 1] != RULE:
            raise ValueError(f"line {i + 2}: expected rule")
        i += 2
        binds = []
        while lines[i] != RULE:
            v, _, e = lines[i].strip().partition(" := ")
            binds.append((v, parse_expr(e)))
            i += 1
        t = _TRANS.match(lines[i + 1])
        if not t:
            raise ValueError(f"line {i + 2}: expected transitions")
        tn = None if t.group(1) == "None" else int(t.group(1))
        fn_ = None if t.group(2) == "None" else int(t.group(2))
        lm = _LINE_NO.search(desc)
        locs[lid] = Location(lid, desc, tuple(binds), tn, fn_, int(lm.group(1)) if lm else 0)
        i += 2
    flush()
    entry_fn = "main" if "main" in functions else next(iter(functions), "main")
    return Model(functions, imports, entry_fn)
