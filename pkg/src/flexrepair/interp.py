"""Model interpreter with an input queue, captured stdout and per-location traces."""
from __future__ import annotations

import builtins as _py
import json
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .frontend import ImportTable
from .model import COND, OUT, RET, Const, Expr, Model, Op, Var

PASS, FAIL = "Pass", "Fail"
OK, RUNTIME_ERROR, STEP_LIMIT = "Ok", "RuntimeError", "StepLimit"

MAX_SEQUENCE = 1_000_000


class _Undefined:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNDEF"

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return (_Undefined, ())


UNDEF = _Undefined()


class ExecutionError(Exception):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownFunction(Exception):
    def __init__(self, name: str):
        super().__init__(f"unknown function '{name}'")
        self.name = name


class ArgumentError(Exception):
    pass


class StepLimitExceeded(Exception):
    pass


@dataclass(frozen=True)
class FuncRef:
    name: str


@dataclass(frozen=True)
class StepLimits:
    max_steps: int = 100_000
    max_depth: int = 150


@dataclass(frozen=True)
class TestCase:
    id: str
    stdin: tuple = ()
    stdout: tuple = ()

    @classmethod
    def from_json(cls, data: dict, default_id: str = "") -> "TestCase":
        def lines(v):
            if isinstance(v, str):
                return tuple(v.splitlines())
            return tuple(str(x) for x in v)
        return cls(str(data.get("id", default_id)), lines(data.get("stdin", ())),
                   lines(data.get("stdout", ())))


def load_tests(directory) -> list[TestCase]:
    d = Path(directory)
    tests = []
    for p in sorted(d.glob("*.json")):
        data = json.loads(p.read_text(encoding="utf-8"))
        items = data if isinstance(data, list) else [data]
        tests += [TestCase.from_json(x, p.stem) for x in items]
    return tests


@dataclass
class Step:
    function: str
    location: int
    pre: dict
    post: dict
    frame: int = 0


@dataclass
class Trace:
    steps: list = field(default_factory=list)
    stdout: list = field(default_factory=list)
    status: str = OK
    message: str = ""
    inputs_consumed: int = 0
    result: object = None

    def for_function(self, name: str) -> list[Step]:
        return [s for s in self.steps if s.function == name]


def normalize_output(lines) -> list[str]:
    text = "\n".join(lines)
    out = [l.rstrip() for l in text.split("\n")] if lines else []
    while out and not out[-1]:
        out.pop()
    return out


def verdict(trace: Trace, test: TestCase) -> str:
    if trace.status != OK:
        return FAIL
    return PASS if normalize_output(trace.stdout) == normalize_output(test.stdout) else FAIL


# Builtins --------------------------------------------------------------------

def _to_str(v) -> str:
    return "" if v is UNDEF else str(v)


def _range(*args):
    if not all(isinstance(a, int) for a in args):
        raise ArgumentError("range expects integers")
    r = range(*args)
    if len(r) > MAX_SEQUENCE:
        raise ArgumentError("range too large")
    return r


def _split(s, sep=None):
    return s.split(sep)


def _join(sep, xs):
    return sep.join(xs)


def _format(*args):
    if args and isinstance(args[0], str) and "{" in args[0]:
        return args[0].format(*args[1:])
    return _py.format(*args)


def _max(*args):
    return _py.max(*args)


def _min(*args):
    return _py.min(*args)


BUILTINS: dict[str, Callable] = {
    "len": len, "range": _range, "int": int, "float": float, "str": str,
    "list": list, "sum": sum, "max": _max, "min": _min, "abs": abs,
    "sorted": sorted, "split": _split, "join": _join, "format": _format,
    "math.sqrt": math.sqrt, "math.ceil": math.ceil, "math.floor": math.floor,
}
# `print`, `input` and `map` need the interpreter and are handled there.
SPECIAL_CALLS = {"print", "input", "map"}


def resolve_name(name: str, imports: ImportTable) -> str:
    """Map a call name as written to a canonical builtin-table key."""
    if "." in name:
        alias, member = name.split(".", 1)
        b = imports.lookup(alias)
        module = b.module if b is not None and b.member is None else alias
        return f"{module}.{member}"
    b = imports.lookup(name)
    if b is not None and b.member is not None:
        return f"{b.module}.{b.member}"
    if name in BUILTINS or name in SPECIAL_CALLS:
        return name
    for m in imports.wildcards:
        if f"{m}.{name}" in BUILTINS:
            return f"{m}.{name}"
    return name


def call_builtin(name: str, args: list, imports: ImportTable = ImportTable()):
    key = resolve_name(name, imports)
    fn = BUILTINS.get(key)
    if fn is None:
        raise UnknownFunction(name)
    try:
        return fn(*args)
    except TypeError as e:
        raise ArgumentError(f"{name}: {e}") from None


# Operators -------------------------------------------------------------------

def _guard_size(v):
    if isinstance(v, (str, list, tuple)) and len(v) > MAX_SEQUENCE:
        raise ArgumentError("sequence too large")
    return v


def _mul(a, b):
    for x, y in ((a, b), (b, a)):
        if isinstance(x, (str, list, tuple)) and isinstance(y, int) and len(x) * max(y, 0) > MAX_SEQUENCE:
            raise ArgumentError("sequence too large")
    return a * b


def _pow(a, b):
    if isinstance(a, int) and isinstance(b, int) and abs(b) > 10_000 and abs(a) > 1:
        raise ArgumentError("value too large")
    return a ** b


def _add(a, b):
    return _guard_size(a + b)


def _get_slice(x, lo, hi):
    return x[lo:hi]


OPERATORS: dict[str, Callable] = {
    "Add": _add, "Sub": operator.sub, "Mul": _mul, "Div": operator.truediv,
    "FloorDiv": operator.floordiv, "Mod": operator.mod, "Pow": _pow,
    "AssAdd": _add, "AssSub": operator.sub, "AssMul": _mul, "AssDiv": operator.truediv,
    "AssFloorDiv": operator.floordiv, "AssMod": operator.mod, "AssPow": _pow,
    "USub": operator.neg, "UAdd": operator.pos, "Not": operator.not_,
    "Lt": operator.lt, "Gt": operator.gt, "Le": operator.le, "Ge": operator.ge,
    "Eq": operator.eq, "NotEq": operator.ne,
    "In": lambda a, b: a in b, "NotIn": lambda a, b: a not in b,
    "ListInit": lambda *xs: list(xs), "TupleInit": lambda *xs: tuple(xs),
    "SetInit": lambda *xs: set(xs),
    "GetElement": operator.getitem, "GetSlice": _get_slice,
}


class Machine:
    """Executes one model.  ``stdin`` None means a sandbox (input is an
    error); ``capture`` False means print has no global effect."""

    def __init__(self, model: Model, stdin=None, limits: StepLimits = StepLimits(),
                 record: bool = True, capture: bool = True):
        self.model = model
        self.queue = list(stdin) if stdin is not None else None
        self.pos = 0
        self.limits = limits
        self.record = record
        self.capture = capture
        self.stdout: list[str] = []
        self.steps: list[Step] = []
        self.count = 0
        self.depth = 0
        self.frames = 0

    # expression evaluation
    def eval(self, e: Expr, lookup, line: int = 0):
        if isinstance(e, Var):
            return lookup(e.name, e.primed)
        if isinstance(e, Const):
            return FuncRef(e.lexeme) if e.kind == "func" else e.value
        name = e.name
        if name == "ite":
            c = self.eval(e.args[0], lookup, line)
            return self.eval(e.args[1] if c else e.args[2], lookup, line)
        if name in ("And", "Or"):
            v = True if name == "And" else False
            for a in e.args:
                v = self.eval(a, lookup, line)
                if (name == "And" and not v) or (name == "Or" and v):
                    return v
            return v
        args = [self.eval(a, lookup, line) for a in e.args]
        if any(a is UNDEF for a in args) and name != "print":
            raise ExecutionError(line, f"undefined value passed to {name}")
        return self.apply(name, args, line)

    def apply(self, name: str, args: list, line: int):
        fn = OPERATORS.get(name)
        if fn is not None:
            return self._guarded(fn, args, line, name)
        if name in self.model.functions:
            return self.call(name, args)
        key = resolve_name(name, self.model.imports)
        if key == "print":
            text = " ".join(_to_str(a) for a in args[1:])
            if self.capture:
                self.stdout.append(text)
            prev = args[0] if args and isinstance(args[0], str) else ""
            return _guard_size(prev + text + "\n")
        if key == "input":
            if self.queue is None:
                raise ExecutionError(line, "input() unavailable")
            if self.pos >= len(self.queue):
                raise ExecutionError(line, "input queue exhausted")
            self.pos += 1
            return self.queue[self.pos - 1]
        if key == "map":
            if len(args) < 2:
                raise ExecutionError(line, "map needs a function and an iterable")
            f = args[0]
            fname = f.name if isinstance(f, FuncRef) else None
            if fname is None:
                raise ExecutionError(line, "map needs a function")
            return [self.apply(fname, list(xs), line) for xs in zip(*args[1:])]
        fn = BUILTINS.get(key)
        if fn is None:
            raise ExecutionError(line, f"unknown function '{name}'")
        return self._guarded(fn, args, line, name)

    @staticmethod
    def _guarded(fn, args, line, name):
        try:
            return fn(*args)
        except (ArithmeticError, TypeError, ValueError, IndexError, KeyError,
                ArgumentError, AttributeError, RecursionError) as ex:
            raise ExecutionError(line, f"{name}: {type(ex).__name__}: {ex}") from None

    # function execution
    def call(self, fname: str, args: list):
        f = self.model.functions[fname]
        if len(args) != len(f.params):
            raise ExecutionError(f.line, f"{fname} expects {len(f.params)} arguments")
        self.depth += 1
        if self.depth > self.limits.max_depth:
            raise ExecutionError(f.line, "call depth exceeded")
        frame = self.frames
        self.frames += 1
        env = {OUT: ""}
        env.update(zip(f.params, args))
        loc_id = f.entry
        while loc_id is not None:
            self.count += 1
            if self.count > self.limits.max_steps:
                raise StepLimitExceeded()
            loc = f.locations[loc_id]
            pre = env
            post = dict(pre)

            def lookup(n, primed, pre=pre, post=post, line=loc.line):
                env_ = post if primed else pre
                if n in env_:
                    return env_[n]
                raise ExecutionError(line, f"undefined variable '{n}'")
            for var, e in loc.bindings:
                post[var] = self.eval(e, lookup, loc.line)
            if self.record:
                self.steps.append(Step(fname, loc_id, pre, post, frame))
            env = post
            if loc.conditional:
                loc_id = loc.true_next if post[COND] else loc.false_next
            else:
                loc_id = loc.true_next
        self.depth -= 1
        return env.get(RET)


def run(model: Model, test: TestCase, limits: StepLimits = StepLimits(),
        record: bool = True) -> Trace:
    m = Machine(model, test.stdin, limits, record=record)
    trace = Trace()
    try:
        if model.entry not in model.functions:
            raise ExecutionError(0, f"no entry function '{model.entry}'")
        trace.result = m.call(model.entry, [])
    except ExecutionError as e:
        trace.status, trace.message = RUNTIME_ERROR, str(e)
    except StepLimitExceeded:
        trace.status, trace.message = STEP_LIMIT, f"more than {limits.max_steps} location visits"
    except RecursionError:
        trace.status, trace.message = RUNTIME_ERROR, "recursion too deep"
    trace.steps = m.steps
    trace.stdout = m.stdout
    trace.inputs_consumed = m.pos
    return trace


def run_tests(model: Model, tests, limits: StepLimits = StepLimits()) -> list[str]:
    return [verdict(run(model, t, limits, record=False), t) for t in tests]


class Sandbox:
    """Side-effect free evaluation of single expressions, used by the
    repair cost model to check candidate expressions against trace values."""

    def __init__(self, model: Model, limits: StepLimits = StepLimits(max_steps=10_000)):
        self.model = model
        self.limits = limits

    def eval(self, e: Expr, lookup):
        m = Machine(self.model, None, self.limits, record=False, capture=False)
        return m.eval(e, lookup)
