"""Variable matching, repair generation and verification.

For every pair of aligned locations we price how well each incorrect
variable (or a fresh one) can play the role of each correct variable:

* 0 when the incorrect expression, evaluated on the correct trace through a
  variable correspondence, reproduces the correct values at every visit;
* otherwise the tree edit distance between the incorrect expression and the
  correct expression rewritten into incorrect names.

Entries carry the correspondence they depend on, and the matching picks a
one-to-one map whose consistent entries sum to the least cost.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import align as al
from .cfg import build_cfg
from .frontend import MiniLangSyntaxError, SourceProgram, UnsupportedConstruct, parse
from .interp import (FAIL, OK, PASS, UNDEF, ExecutionError, Machine, StepLimits,
                     StepLimitExceeded, TestCase, Trace, run, verdict)
from .model import (COND, OUT, RET, SPECIAL_VARS, Const, Expr, LoweringError, Model,
                    ModelFunction, ModelOptions, Op, Var, build_model, expr_vars,
                    primed_vars, rename_vars, set_primes, unprimed_vars, walk)
from .treedist import tree_distance

FRESH = "<fresh>"
ANY = "<any>"

ADD, DELETE, CHANGE = "AddBinding", "DeleteBinding", "ChangeBinding"
FULLY, PARTIALLY, NOT_REPAIRED, REJECTED, TIMEOUT = (
    "FullyRepaired", "PartiallyRepaired", "NotRepaired", "Rejected", "Timeout")

SIGMA_CAP = 5000
MATCHING_RETRIES = 25


class UnresolvableOrder(Exception):
    pass


class RepairTimeout(Exception):
    pass


# Cost tables -------------------------------------------------------------------

@dataclass(frozen=True)
class CostEntry:
    location: int                  # correct location id
    correct_var: str
    incorrect_var: str             # or FRESH
    deps: tuple = ()               # ((correct var, incorrect var), ...)
    cost: float = 0.0
    kind: str = "change"           # match | change | delete | create

    def consistent(self, pi: dict) -> bool:
        return all(pi.get(i, j) == j for i, j in self.deps)


@dataclass
class CostTable:
    function: str
    correct_vars: list
    incorrect_vars: list
    entries: list
    delete_cost: dict = field(default_factory=dict)
    forced: dict = field(default_factory=dict)
    loc_map: dict = field(default_factory=dict)

    def index(self) -> dict:
        idx: dict = {}
        for e in self.entries:
            idx.setdefault((e.correct_var, e.incorrect_var), {}).setdefault(e.location, []).append(e)
        for per_loc in idx.values():
            for lst in per_loc.values():
                lst.sort(key=lambda e: (e.cost, len(e.deps), _kind_rank(e.kind)))
        return idx

    def lookup(self, location: int, c: str, w: str) -> list:
        return [e for e in self.entries
                if e.location == location and e.correct_var == c and e.incorrect_var == w]


def _kind_rank(kind: str) -> int:
    return {"match": 0, "create": 1, "change": 2, "delete": 3}.get(kind, 4)


def values_equal(a, b) -> bool:
    if a is UNDEF or b is UNDEF:
        return a is b
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if isinstance(a, float) or isinstance(b, float):
            if math.isnan(a) or math.isnan(b):
                return math.isnan(a) and math.isnan(b)
            return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)
        return a == b
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return type(a) is type(b) and len(a) == len(b) and all(
            values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, range) or isinstance(b, range):
        return type(a) is type(b) and a == b
    return type(a) is type(b) and a == b


def fresh_name(c: str, taken: set) -> str:
    base = "new_" + c.lstrip("$").replace("#", "_")
    name, k = base, 1
    while name in taken:
        name = f"{base}_{k}"
        k += 1
    return name


def _var_order(names) -> list:
    specials = [v for v in SPECIAL_VARS if v in names]
    return specials + sorted(v for v in names if v not in SPECIAL_VARS)


class _CostBuilder:
    def __init__(self, fc: ModelFunction, fi: ModelFunction, loc_map: dict, steps: list,
                 mi: Model, side_effecting: frozenset):
        self.fc, self.fi, self.loc_map = fc, fi, loc_map
        self.side_effecting = side_effecting | set(mi.functions) | {"input"}
        self.machine = Machine(mi, None, StepLimits(max_steps=10_000), record=False, capture=False)
        self.visits: dict = {}
        for s in steps:
            self.visits.setdefault(s.location, []).append((s.pre, s.post))
        if len(fc.params) != len(fi.params):
            raise ValueError("parameter count differs")
        self.param_map = dict(zip(fc.params, fi.params))
        C = set(fc.variables())
        I = set(fi.variables()) | {v for v in C if v in SPECIAL_VARS}
        self.C = _var_order(C)
        self.I = _var_order(I)
        self.taken = fi.all_names() | fc.all_names()
        self.fresh = {}
        for c in self.C:
            self.fresh[c] = fresh_name(c, self.taken)
            self.taken.add(self.fresh[c])

    def forced(self) -> dict:
        f = {c: c for c in self.C if c in SPECIAL_VARS}
        f.update(self.param_map)
        return f

    def candidates(self, c: str) -> list:
        if c in SPECIAL_VARS:
            return [c]
        if c in self.param_map:
            return [self.param_map[c]]
        used = set(self.param_map.values())
        return [w for w in self.I if w not in SPECIAL_VARS and w not in used] + [FRESH]

    def effectful(self, e: Expr) -> bool:
        for x in walk(e):
            if isinstance(x, Op) and (x.name in self.side_effecting
                                      or x.name.rsplit(".", 1)[-1] in self.side_effecting
                                      or x.name == "input"):
                return True
        return False

    # -- value matching
    def _fixed_source(self, j: str, c: str, w: str):
        """Correct variable that must stand behind incorrect var j, or None if free."""
        if j == w or (w == FRESH and j == self.fresh[c]):
            return c
        if j in SPECIAL_VARS:
            return j if j in self.C else False
        inv = {v: k for k, v in self.param_map.items()}
        if j in inv:
            return inv[j]
        return None

    def value_entries(self, loc: int, c: str, w: str, e_i: Expr) -> list:
        visits = self.visits.get(loc)
        if not visits or self.effectful(e_i):
            return []
        js = sorted(expr_vars(e_i))
        fixed, free = {}, []
        for j in js:
            src = self._fixed_source(j, c, w)
            if src is False:
                return []
            if src is None:
                free.append(j)
            else:
                fixed[j] = src
        pool = [i for i in self.C if i not in SPECIAL_VARS and i not in self.param_map and i != c]
        out = []
        count = 0
        for combo in itertools.permutations(pool, len(free)):
            count += 1
            if count > SIGMA_CAP:
                break
            sigma = dict(fixed)
            sigma.update(zip(free, combo))
            if self._matches(e_i, sigma, visits, c):
                deps = tuple(sorted((i, j) for j, i in sigma.items() if j in free))
                out.append(CostEntry(loc, c, w, deps, 0.0, "match"))
        return out

    def _matches(self, e: Expr, sigma: dict, visits, c: str) -> bool:
        for pre, post in visits:
            def lookup(name, primed, pre=pre, post=post):
                src = sigma.get(name)
                env = post if primed else pre
                return env.get(src, UNDEF) if src is not None else UNDEF
            try:
                self.machine.count = 0
                got = self.machine.eval(e, lookup)
            except (ExecutionError, StepLimitExceeded, RecursionError):
                return False
            if not values_equal(got, post.get(c, UNDEF)):
                return False
        return True

    # -- syntactic change
    def change_entries(self, loc: int, c: str, w: str, e_c: Expr, e_i: Expr) -> list:
        target_name = self.fresh[c] if w == FRESH else w
        ks = sorted(expr_vars(e_c) - {c})
        inc_vars = sorted(v for v in expr_vars(e_i)
                          if v not in SPECIAL_VARS and v not in self.param_map.values()
                          and v != target_name)
        fixed, free = {c: target_name}, []
        for k in ks:
            if k in SPECIAL_VARS:
                fixed[k] = k
            elif k in self.param_map:
                fixed[k] = self.param_map[k]
            elif k in self.C:
                free.append(k)
            else:
                fixed[k] = k       # name never bound in the correct function
        out = []
        count = 0
        for combo in itertools.product(inc_vars + [ANY], repeat=len(free)):
            real = [x for x in combo if x != ANY]
            if len(real) != len(set(real)):
                continue
            count += 1
            if count > SIGMA_CAP:
                break
            ren = dict(fixed)
            deps = []
            for k, x in zip(free, combo):
                if x == ANY:
                    ren[k] = "?" + k
                else:
                    ren[k] = x
                    deps.append((k, x))
            cost = tree_distance(e_i, rename_vars(e_c, ren))
            out.append(CostEntry(loc, c, w, tuple(sorted(deps)), float(cost), "change"))
        return _prune(out)

    def build(self) -> CostTable:
        entries = []
        for loc_c, loc_i in self.loc_map.items():
            lc = self.fc.locations[loc_c]
            li = self.fi.locations[loc_i]
            bc = dict(lc.bindings)
            bi = dict(li.bindings)
            at_entry = loc_c == self.fc.entry
            for c in self.C:
                for w in self.candidates(c):
                    c_bound = c in bc
                    w_bound = w != FRESH and w in bi
                    bump = 1.0 if (w == FRESH and at_entry) else 0.0
                    if not c_bound and not w_bound:
                        if bump:
                            entries.append(CostEntry(loc_c, c, w, (), bump, "create"))
                        continue
                    target = self.fresh[c] if w == FRESH else w
                    e_i = bi[w] if w_bound else Var(target)
                    local = []
                    if not (c == COND and c_bound != w_bound):
                        local += self.value_entries(loc_c, c, w, e_i)
                    if c_bound:
                        local += self.change_entries(loc_c, c, w, bc[c], e_i)
                    else:
                        local.append(CostEntry(loc_c, c, w, (), 1.0, "delete"))
                    local = _prune(local)
                    entries += [replace(e, cost=e.cost + bump) for e in local]
        delete_cost = {}
        for w in self.I:
            delete_cost[w] = float(sum(1 for li in self.loc_map.values()
                                       if self.fi.locations[li].get(w) is not None))
        return CostTable(self.fc.name, list(self.C), list(self.I), entries, delete_cost,
                         self.forced(), dict(self.loc_map))


def _prune(entries: list) -> list:
    """Drop entries dominated by one with fewer dependencies and no higher cost."""
    entries = sorted(entries, key=lambda e: (e.cost, len(e.deps), _kind_rank(e.kind), e.deps))
    kept: list = []
    for e in entries:
        ds = set(e.deps)
        if any(k.cost <= e.cost and set(k.deps) <= ds for k in kept):
            continue
        kept.append(e)
    return kept


def compute_costs(fc: ModelFunction, fi: ModelFunction, loc_map: dict, steps: list,
                  mi: Optional[Model] = None, side_effecting=frozenset({"input"})) -> CostTable:
    """Cost table for one function pair.  ``loc_map`` maps correct location ids to
    incorrect ones (total after model recreation); ``steps`` are the correct
    function's trace steps."""
    if mi is None:
        mi = Model({fi.name: fi})
    return _CostBuilder(fc, fi, loc_map, steps, mi, frozenset(side_effecting)).build()


# Matching ------------------------------------------------------------------------------

@dataclass
class Matching:
    mapping: dict                  # correct var -> incorrect var or FRESH
    deleted: list                  # incorrect vars left unmatched
    cost: float
    optimal: bool = True


def _wkey(w: str):
    return (1, "") if w == FRESH else (0, w)


def matching_cost(table: CostTable, mapping: dict, idx=None) -> float:
    idx = idx if idx is not None else table.index()
    total = 0.0
    for c, w in mapping.items():
        for lst in idx.get((c, w), {}).values():
            total += next((e.cost for e in lst if e.consistent(mapping)), math.inf)
    used = set(mapping.values())
    total += sum(table.delete_cost.get(w, 0.0) for w in table.incorrect_vars if w not in used)
    return total


def solve_matching(table: CostTable, node_budget: int = 200_000, exclude=()) -> Matching:
    """Exact minimum cost matching; mappings listed in ``exclude`` are skipped."""
    idx = table.index()
    banned = {tuple(sorted(m.items())) for m in exclude}
    rows = _var_order(table.correct_vars)
    forced = table.forced
    cols = [w for w in table.incorrect_vars]
    col_pos = {w: k for k, w in enumerate(cols)}
    used_forced = set(forced.values())

    def cands(c):
        if c in forced:
            return [forced[c]]
        return [w for w in cols if w not in SPECIAL_VARS and w not in used_forced] + [FRESH]

    cand = {c: cands(c) for c in rows}

    def lb(c, w):
        return sum(lst[0].cost for lst in idx.get((c, w), {}).values())

    LB = {(c, w): lb(c, w) for c in rows for w in cand[c]}
    dele = {w: table.delete_cost.get(w, 0.0) for w in cols}
    BIG = 1e9

    def remaining_bound(rest_rows, free_cols):
        if not rest_rows:
            return sum(dele[w] for w in free_cols)
        nr, nc = len(rest_rows), len(free_cols)
        size = nr + nc
        M = np.full((size, size), BIG)
        for a, c in enumerate(rest_rows):
            for b, w in enumerate(free_cols):
                if (c, w) in LB:
                    M[a, b] = LB[(c, w)]
            if (c, FRESH) in LB:
                M[a, nc + a] = LB[(c, FRESH)]
        for b, w in enumerate(free_cols):
            M[nr + b, b] = dele[w]
            M[nr + b, nc:] = 0.0
        r, k = linear_sum_assignment(M)
        v = M[r, k].sum()
        return v if v < BIG / 2 else math.inf

    def partial_cost(c, pi):
        total = 0.0
        for lst in idx.get((c, pi[c]), {}).values():
            total += next((e.cost for e in lst
                           if all(pi.get(i, j) == j for i, j in e.deps)), math.inf)
        return total

    best = [math.inf, None]
    # incumbent from the relaxation
    init = _relaxed_assignment(rows, cols, cand, LB, dele)
    if init is not None and tuple(sorted(init.items())) not in banned:
        best = [matching_cost(table, init, idx), init]

    def key(pi):
        return tuple((c, _wkey(pi[c])) for c in rows)

    nodes = [0]
    exhausted = [False]

    def dfs(k, pi, used, acc):
        nodes[0] += 1
        if nodes[0] > node_budget:
            exhausted[0] = True
            return
        if k == len(rows):
            total = acc + sum(dele[w] for w in cols if w not in used)
            if banned and tuple(sorted(pi.items())) in banned:
                return
            # acc used partial costs with all deps now assigned, so it is exact
            if total < best[0] - 1e-9 or (abs(total - best[0]) <= 1e-9 and
                                           (best[1] is None or key(pi) < key(best[1]))):
                best[0], best[1] = total, dict(pi)
            return
        c = rows[k]
        for w in cand[c]:
            if w != FRESH and w in used:
                continue
            pi[c] = w
            if w != FRESH:
                used.add(w)
            # recompute exact partial cost for all assigned rows (deps may now resolve)
            acc2 = sum(partial_cost(r, pi) for r in rows[:k + 1])
            if acc2 < math.inf:
                bound = acc2 + remaining_bound(rows[k + 1:], [x for x in cols if x not in used])
                if bound <= best[0] + 1e-9:
                    dfs(k + 1, pi, used, acc2)
            if w != FRESH:
                used.discard(w)
            del pi[c]

    dfs(0, {}, set(), 0.0)
    mapping = best[1] or {}
    used = set(mapping.values())
    deleted = [w for w in cols if w not in used]
    return Matching(dict(mapping), deleted, best[0], not exhausted[0])


def _relaxed_assignment(rows, cols, cand, LB, dele):
    if not rows:
        return {}
    nr, nc = len(rows), len(cols)
    BIG = 1e9
    M = np.full((nr + nc, nc + nr), BIG)
    for a, c in enumerate(rows):
        for b, w in enumerate(cols):
            if (c, w) in LB:
                M[a, b] = LB[(c, w)]
        if (c, FRESH) in LB:
            M[a, nc + a] = LB[(c, FRESH)]
    for b, w in enumerate(cols):
        M[nr + b, b] = dele[w]
        M[nr + b, nc:] = 0.0
    r, k = linear_sum_assignment(M)
    if M[r, k].sum() >= BIG / 2:
        return None
    out = {}
    for a, b in zip(r, k):
        if a < nr:
            out[rows[a]] = cols[b] if b < nc else FRESH
    return out


# Repair plans -------------------------------------------------------------------------

@dataclass(frozen=True)
class RepairEdit:
    kind: str
    function: str
    location: int                  # incorrect location id
    variable: str
    new_expr: Optional[Expr] = None
    old_expr: Optional[Expr] = None
    cost: float = 0.0

    def describe(self) -> str:
        where = f"at location {self.location} of {self.function}"
        if self.kind == CHANGE:
            return (f"Replace {self.variable} := {self.old_expr} by "
                    f"{self.variable} := {self.new_expr} {where} (cost {self.cost:g})")
        if self.kind == ADD:
            return f"Add {self.variable} := {self.new_expr} {where} (cost {self.cost:g})"
        return f"Delete {self.variable} := {self.old_expr} {where} (cost {self.cost:g})"

    def to_json(self) -> dict:
        return {"kind": self.kind, "function": self.function, "location": self.location,
                "variable": self.variable,
                "newExpr": None if self.new_expr is None else str(self.new_expr),
                "oldExpr": None if self.old_expr is None else str(self.old_expr),
                "cost": self.cost}


@dataclass
class RepairPlan:
    edits: list
    total_cost: float
    mapping: dict                  # function -> {correct var: incorrect name}, "-" -> deletions

    @property
    def empty(self) -> bool:
        return not self.edits


def generate_repairs(matching: Matching, table: CostTable, fc: ModelFunction,
                     fi: ModelFunction) -> RepairPlan:
    idx = table.index()
    pi = matching.mapping
    taken = fi.all_names() | fc.all_names()
    names = {}
    for c in table.correct_vars:
        w = pi.get(c)
        if w == FRESH:
            names[c] = fresh_name(c, taken)
            taken.add(names[c])
        elif w is not None:
            names[c] = w
    edits = []
    for loc_c in sorted(table.loc_map):
        loc_i = table.loc_map[loc_c]
        lc, li = fc.locations[loc_c], fi.locations[loc_i]
        for c in _var_order(table.correct_vars):
            w = pi.get(c)
            if w is None:
                continue
            lst = idx.get((c, w), {}).get(loc_c, [])
            best = next((e for e in lst if e.consistent(pi)), None)
            if best is None or best.kind in ("match", "create"):
                continue
            target = names[c]
            if best.kind == "delete":
                old = li.get(target)
                if old is not None:
                    edits.append(RepairEdit(DELETE, fi.name, loc_i, target, None, old, best.cost))
                continue
            if best.cost - (1.0 if (w == FRESH and loc_c == fc.entry) else 0.0) <= 0:
                continue
            new = rename_vars(lc.get(c), names)
            old = li.get(target)
            if new == Var(target) or new == old:
                continue
            kind = CHANGE if old is not None else ADD
            edits.append(RepairEdit(kind, fi.name, loc_i, target, new, old, best.cost))
    for w in matching.deleted:
        for loc_i in sorted(set(table.loc_map.values())):
            old = fi.locations[loc_i].get(w)
            if old is not None:
                edits.append(RepairEdit(DELETE, fi.name, loc_i, w, None, old, 1.0))
    mapping = {c: names[c] for c in table.correct_vars if c in names}
    if matching.deleted:
        mapping["-"] = list(matching.deleted)
    return RepairPlan(edits, matching.cost, {fi.name: mapping})


def merge_plans(plans: list) -> RepairPlan:
    edits, cost, mapping = [], 0.0, {}
    for p in plans:
        edits += p.edits
        cost += p.total_cost
        mapping.update(p.mapping)
    return RepairPlan(edits, cost, mapping)


def apply_repairs(mi: Model, plan: RepairPlan) -> Model:
    out = mi
    for fname in dict.fromkeys(e.function for e in plan.edits):
        f = out.functions[fname]
        out = out.with_function(_apply_function(f, [e for e in plan.edits if e.function == fname]))
    return out


def _apply_function(f: ModelFunction, edits: list) -> ModelFunction:
    locs = {i: list(l.bindings) for i, l in f.locations.items()}

    def defined(v):
        return v in f.params or v == OUT or any(v == x for b in locs.values() for x, _ in b)

    def bound_at(loc, v):
        return any(x == v for x, _ in locs[loc])

    def ready(e: RepairEdit) -> bool:
        return (all(defined(v) for v in unprimed_vars(e.new_expr))
                and all(bound_at(e.location, v) for v in primed_vars(e.new_expr) if v != e.variable))

    pending = [e for e in edits if e.kind in (ADD, CHANGE)]
    while pending:
        progress = False
        for e in list(pending):
            if not ready(e):
                continue
            b = locs[e.location]
            for k, (x, _) in enumerate(b):
                if x == e.variable:
                    b[k] = (x, e.new_expr)
                    break
            else:
                b.append((e.variable, e.new_expr))
            pending.remove(e)
            progress = True
        if not progress:
            raise UnresolvableOrder(
                "cannot order edits: " + "; ".join(e.describe() for e in pending))
    for e in edits:
        if e.kind == DELETE:
            locs[e.location] = [(x, ex) for x, ex in locs[e.location] if x != e.variable]
    added = {(e.location, e.variable) for e in edits if e.kind == ADD}
    edited = {(e.location, e.variable) for e in edits if e.kind in (ADD, CHANGE)}
    new_locs = {}
    for i, b in locs.items():
        fresh = {x for x, _ in b if (i, x) in added}
        promoted = b
        if fresh:
            # untouched bindings that read a newly added variable now see its new value
            promoted = [(x, ex) if (i, x) in edited else
                        (x, set_primes(ex, lambda v: v.primed or (v.name in fresh and v.name != x)))
                        for x, ex in b]
        try:
            b = _topo_sort(promoted, i)
        except UnresolvableOrder:
            b = _topo_sort(b, i)
        bound = {x for x, _ in b}
        b = [(x, set_primes(ex, lambda v, bound=bound: v.primed and v.name in bound)) for x, ex in b]
        new_locs[i] = replace(f.locations[i], bindings=tuple(b))
    return replace(f, locations=new_locs)


def _topo_sort(bindings: list, loc: int) -> list:
    names = [x for x, _ in bindings]
    deps = {x: {v for v in primed_vars(e) if v in names and v != x} for x, e in bindings}
    done: list = []
    placed = set()
    remaining = list(bindings)
    while remaining:
        for k, (x, e) in enumerate(remaining):
            if deps[x] <= placed:
                done.append((x, e))
                placed.add(x)
                del remaining[k]
                break
        else:
            raise UnresolvableOrder(f"cyclic primed dependencies at location {loc}")
    return done


# Pipeline -----------------------------------------------------------------------------

@dataclass(frozen=True)
class RepairConfig:
    mode: al.AlignerMode = al.AlignerMode.FLEX_LABEL_EDGE
    align: al.AlignConfig = al.AlignConfig()
    side_effecting: frozenset = frozenset({"input"})
    limits: StepLimits = StepLimits()
    seed: Optional[int] = None


@dataclass
class RepairOutcome:
    status: str
    score: Optional[float] = None
    verdicts: dict = field(default_factory=dict)
    change_percentage: float = 0.0
    num_repairs: int = 0
    edits: list = field(default_factory=list)
    mapping: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    structural: list = field(default_factory=list)    # locations added or dropped by recreation
    message: str = ""
    elapsed: float = 0.0
    repaired: Optional[Model] = None

    def to_json(self) -> dict:
        return {"status": self.status, "score": self.score, "numRepairs": self.num_repairs,
                "changePercentage": self.change_percentage,
                "verdicts": self.verdicts, "edits": [e.to_json() for e in self.edits],
                "mapping": self.mapping, "warnings": self.warnings,
                "structuralChanges": self.structural,
                "message": self.message, "elapsed": round(self.elapsed, 3)}


@dataclass
class _Aligned:
    mc: Model
    mi: Model                       # recreated incorrect model
    loc_maps: dict                  # function -> correct loc -> incorrect loc
    score: float
    warnings: list
    structural: list = field(default_factory=list)


def _align_models(mc: Model, mi: Model, config: RepairConfig, deadline: float):
    if set(mc.functions) != set(mi.functions):
        return None, "function sets differ"
    loc_maps, warnings, scores, structural = {}, [], [], []
    rebuilt = mi
    for name, fc in mc.functions.items():
        fi = mi.functions[name]
        if len(fc.params) != len(fi.params):
            return None, f"{name}: parameter count differs"
        gc, gi = build_cfg(fc), build_cfg(fi)
        budget = max(0.0, min(config.align.per_align_timeout, deadline - time.monotonic()))
        result = al.align(gc, gi, config.mode, replace(config.align, per_align_timeout=budget))
        if isinstance(result, al.Mismatch):
            return None, f"{name}: control flow mismatch"
        if result.timed_out:
            raise RepairTimeout(f"{name}: alignment timed out")
        scores.append(result.normalized)
        if al.gate(result, config.align) == al.REJECT:
            return None, f"{name}: similarity {result.normalized:.3f} below threshold"
        f2, phi, warn = al.recreate_function(gc, gi, result, fc, fi)
        rebuilt = rebuilt.with_function(f2)
        loc_maps[name] = phi
        warnings += warn
        structural += [f"{name}: drop location {i}" for i in fi.locations if i not in f2.locations]
        structural += [f"{name}: add location {i}" for i in f2.locations if i not in fi.locations]
    return _Aligned(mc, rebuilt, loc_maps, min(scores) if scores else 1.0, warnings,
                    structural), ""


def repair_search(aligned: _Aligned, mi: Model, trace: Trace, config: RepairConfig):
    plans = []
    for name, fc in aligned.mc.functions.items():
        fi = mi.functions[name]
        table = compute_costs(fc, fi, aligned.loc_maps[name], trace.for_function(name), mi,
                              config.side_effecting)
        tried = []
        while True:
            matching = solve_matching(table, exclude=tried)
            if math.isinf(matching.cost):
                raise UnresolvableOrder(f"{name}: no variable matching yields an orderable repair")
            plan = generate_repairs(matching, table, fc, fi)
            try:
                _apply_function(fi, plan.edits)
                break
            except UnresolvableOrder:
                # cheapest matching cannot be ordered; fall back to the next best
                tried.append(matching.mapping)
                if len(tried) >= MATCHING_RETRIES:
                    raise
        plans.append(plan)
    return merge_plans(plans)


def _load(src, config: RepairConfig) -> Model:
    if isinstance(src, Model):
        return src
    if isinstance(src, str):
        src = SourceProgram(src)
    return build_model(parse(src), ModelOptions(False, frozenset(config.side_effecting)))


def repair_and_verify(pc, pi, tests: list, config: RepairConfig = RepairConfig()) -> RepairOutcome:
    start = time.monotonic()
    deadline = start + config.align.overall_timeout

    def done(o: RepairOutcome) -> RepairOutcome:
        o.elapsed = time.monotonic() - start
        return o

    if not tests:
        raise ValueError("at least one test case is required")
    try:
        mc, mi = _load(pc, config), _load(pi, config)
    except (MiniLangSyntaxError, UnsupportedConstruct, LoweringError) as ex:
        return done(RepairOutcome(REJECTED, message=f"frontend: {ex}"))
    try:
        aligned, why = _align_models(mc, mi, config, deadline)
    except RepairTimeout as ex:
        return done(RepairOutcome(TIMEOUT, message=str(ex)))
    if aligned is None:
        return done(RepairOutcome(REJECTED, message=why))
    outcome = RepairOutcome(NOT_REPAIRED, score=aligned.score, warnings=list(aligned.warnings),
                            structural=list(aligned.structural))
    original = [verdict(run(mi, t, config.limits, record=False), t) for t in tests]
    chosen = next((t for t, v in zip(tests, original) if v == FAIL), tests[0])
    ctrace = run(mc, chosen, config.limits)
    if ctrace.status != OK:
        outcome.message = f"correct program fails on test {chosen.id}: {ctrace.message}"
        return done(outcome)
    try:
        plan = repair_search(aligned, aligned.mi, ctrace, config)
        repaired = apply_repairs(aligned.mi, plan)
    except UnresolvableOrder as ex:
        outcome.message = str(ex)
        return done(outcome)
    if time.monotonic() > deadline:
        return done(RepairOutcome(TIMEOUT, score=aligned.score, message="overall time budget"))
    outcome.edits = plan.edits
    outcome.num_repairs = len(plan.edits)
    outcome.mapping = plan.mapping
    outcome.repaired = repaired
    changed = sum(1 for e in plan.edits if e.kind in (CHANGE, ADD))
    added = sum(1 for e in plan.edits if e.kind == ADD)
    denom = mi.num_bindings() + added
    outcome.change_percentage = 100.0 * changed / denom if denom else 0.0
    again = repair_search(aligned, repaired, ctrace, config)
    verdicts = {t.id: verdict(run(repaired, t, config.limits, record=False), t) for t in tests}
    outcome.verdicts = verdicts
    if not again.empty:
        outcome.status = NOT_REPAIRED
        outcome.message = f"repair did not converge: {len(again.edits)} further edits"
        return done(outcome)
    if verdicts[chosen.id] != PASS:
        outcome.status = NOT_REPAIRED
        outcome.message = f"repaired program still fails test {chosen.id}"
        return done(outcome)
    further = 0
    for t in tests:
        if t is chosen:
            continue
        if time.monotonic() > deadline:
            return done(replace(outcome, status=TIMEOUT, message="overall time budget"))
        tr = run(mc, t, config.limits)
        if tr.status != OK:
            further += 1
            continue
        if not repair_search(aligned, repaired, tr, config).empty:
            further += 1
    if all(v == PASS for v in verdicts.values()) and further == 0:
        outcome.status = FULLY
    else:
        outcome.status = PARTIALLY
        outcome.message = f"{sum(v != PASS for v in verdicts.values())} failing tests, " \
                          f"{further} tests with further suggestions"
    return done(outcome)
