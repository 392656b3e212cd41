"""Rigid and flexible alignment of control flow graphs, and rewriting of the
incorrect model so that its control flow mirrors the correct one."""
from __future__ import annotations

import heapq
import itertools
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cfg import SINK, Cfg
from .model import Location, Model, ModelFunction, expr_vars


class AlignerMode(str, Enum):
    RIGID = "rigid"
    FLEX_LABEL = "flex-label"
    FLEX_LABEL_EDGE = "flex-label-edge"
    SARFGEN = "sarfgen-sim"

    @property
    def uses_edges(self) -> bool:
        return self is not AlignerMode.FLEX_LABEL


PROCEED, REJECT = "Proceed", "Reject"


@dataclass(frozen=True)
class AlignConfig:
    max_permutations: Optional[int] = 1000
    per_align_timeout: float = 60.0
    overall_timeout: float = 300.0
    proceed_threshold: float = 0.6
    sarfgen_threshold: float = 0.95
    edge_weight: bool = True

    def __post_init__(self):
        for t in (self.proceed_threshold, self.sarfgen_threshold):
            if not 0.0 <= t <= 1.0:
                raise ValueError("thresholds must lie in [0, 1]")
        if self.max_permutations is not None and self.max_permutations < 1:
            raise ValueError("max_permutations must be positive")


@dataclass
class AlignmentResult:
    mapping: dict                  # correct node -> incorrect node, sink included
    pair_scores: dict = field(default_factory=dict)
    raw_score: float = 0.0
    normalized: float = 0.0
    mode: AlignerMode = AlignerMode.FLEX_LABEL_EDGE
    explored: int = 0
    timed_out: bool = False

    def unmapped_incorrect(self, gi: Cfg) -> list[int]:
        image = set(self.mapping.values())
        return [v for v in gi.inner if v not in image]

    def unmapped_correct(self, gc: Cfg) -> list[int]:
        return [u for u in gc.inner if u not in self.mapping]

    def to_json(self) -> dict:
        key = lambda x: "None" if x is SINK else str(x)
        return {
            "mode": self.mode.value, "score": self.raw_score, "normalized": self.normalized,
            "mapping": {key(u): key(v) for u, v in self.mapping.items()},
            "pairScores": {f"{key(u)}->{key(v)}": s for (u, v), s in self.pair_scores.items()},
            "explored": self.explored, "timedOut": self.timed_out,
        }


class Mismatch:
    """Returned by rigid alignment when the control flow differs."""

    def __repr__(self):
        return "Mismatch"

    def __eq__(self, other):
        return isinstance(other, Mismatch)

    def __hash__(self):
        return 0


MISMATCH = Mismatch()


def jaccard(a: Counter, b: Counter) -> float:
    keys = set(a) | set(b)
    if not keys:
        return 1.0
    lo = sum(min(a.get(k, 0), b.get(k, 0)) for k in keys)
    hi = sum(max(a.get(k, 0), b.get(k, 0)) for k in keys)
    return lo / hi


# Rigid -------------------------------------------------------------------------

_MISSING = object()


def rigid_align(gc: Cfg, gi: Cfg) -> Union[AlignmentResult, Mismatch]:
    phi: dict = {}
    inv: dict = {}

    def align(u, v) -> bool:
        if u in phi or v in inv:
            return phi.get(u, _MISSING) == v and inv.get(v, _MISSING) == u
        phi[u] = v
        inv[v] = u
        if u is SINK or v is SINK:
            return u is SINK and v is SINK
        return (align(gc.true_succ[u], gi.true_succ[v])
                and align(gc.false_succ[u], gi.false_succ[v]))

    if not align(gc.entry, gi.entry):
        return MISMATCH
    phi.setdefault(SINK, SINK)
    if len(phi) != len(gc.nodes) or len(set(phi.values())) != len(gi.nodes):
        return MISMATCH
    pairs = {(u, v): 1.0 for u, v in phi.items() if u is not SINK}
    n = len(pairs)
    return AlignmentResult(phi, pairs, float(n), 1.0, AlignerMode.RIGID, 1)


# Flexible -----------------------------------------------------------------------

def pair_score(gc: Cfg, gi: Cfg, phi: dict, u, v, edges: bool,
               jac: Optional[float] = None) -> float:
    s_label = jaccard(gc.nodes[u].labels, gi.nodes[v].labels) if jac is None else jac
    if not edges:
        return (s_label + 1.0) / 2
    mt = phi.get(gc.true_succ[u], _MISSING) == gi.true_succ[v]
    mf = phi.get(gc.false_succ[u], _MISSING) == gi.false_succ[v]
    s_edge = 1.0 if (mt and mf) else 0.5 if (mt or mf) else 0.0
    return (s_label + s_edge) / 2


def mapping_score(gc: Cfg, gi: Cfg, phi: dict, edges: bool, jac=None) -> tuple[float, dict]:
    pairs = {}
    for u, v in phi.items():
        if u is SINK:
            continue
        j = None if jac is None else jac[(u, v)]
        pairs[(u, v)] = pair_score(gc, gi, phi, u, v, edges, j)
    return sum(pairs.values()), pairs


_BIG = 1e6


def _lsa(cost: np.ndarray, forced: tuple, banned: tuple):
    c = cost.copy()
    for i, j in banned:
        c[i, j] = _BIG
    for i, j in forced:
        keep = c[i, j]
        c[i, :] = _BIG
        c[:, j] = _BIG
        c[i, j] = keep
    rows, cols = linear_sum_assignment(c)
    if (c[rows, cols] >= _BIG / 2).any():
        return None
    return float(c[rows, cols].sum()), tuple(int(x) for x in cols)


def k_best_assignments(cost: np.ndarray) -> Iterator[tuple[float, tuple]]:
    """Murty's ranking of assignments of every row to a distinct column
    (rows <= cols), in nondecreasing total cost."""
    n, m = cost.shape
    if n == 0:
        yield 0.0, ()
        return
    first = _lsa(cost, (), ())
    if first is None:
        return
    tick = itertools.count()
    heap = [(first[0], next(tick), first[1], (), ())]
    while heap:
        total, _, sol, forced, banned = heapq.heappop(heap)
        yield total, sol
        fixed_rows = {i for i, _ in forced}
        extra: list = []
        for i in range(n):
            if i in fixed_rows:
                continue
            sub = _lsa(cost, forced + tuple(extra), banned + ((i, sol[i]),))
            if sub is not None:
                heapq.heappush(heap, (sub[0], next(tick), sub[1],
                                      forced + tuple(extra), banned + ((i, sol[i]),)))
            extra.append((i, sol[i]))


def flex_align(gc: Cfg, gi: Cfg, cfg: AlignConfig = AlignConfig(),
               mode: AlignerMode = AlignerMode.FLEX_LABEL_EDGE) -> AlignmentResult:
    edges = cfg.edge_weight and mode.uses_edges
    U, V = gc.inner, gi.inner
    jac = {(u, v): jaccard(gc.nodes[u].labels, gi.nodes[v].labels) for u in U for v in V}
    swap = len(U) > len(V)
    rows, cols = (V, U) if swap else (U, V)
    cost = np.zeros((len(rows), len(cols)))
    for a, r in enumerate(rows):
        for b, c in enumerate(cols):
            j = jac[(c, r)] if swap else jac[(r, c)]
            # tiny positional tie-break so isomorphic graphs try identity first
            cost[a, b] = -j + 1e-9 * abs(a - b)
    deadline = time.monotonic() + cfg.per_align_timeout
    best = None
    explored = 0
    timed_out = False
    for _, sol in k_best_assignments(cost):
        if cfg.max_permutations is not None and explored >= cfg.max_permutations:
            break
        if time.monotonic() > deadline:
            timed_out = True
            break
        explored += 1
        if swap:
            phi = {cols[b]: rows[a] for a, b in enumerate(sol)}
        else:
            phi = {rows[a]: cols[b] for a, b in enumerate(sol)}
        phi[SINK] = SINK
        s, pairs = mapping_score(gc, gi, phi, edges, jac)
        if best is None or s > best[0] + 1e-12:
            best = (s, phi, pairs)
    if best is None:
        best = (0.0, {SINK: SINK}, {})
    s, phi, pairs = best
    denom = max(len(U), len(V))
    norm = s / denom if denom else 1.0
    ordered = {u: phi[u] for u in sorted((u for u in phi if u is not SINK))}
    ordered[SINK] = SINK
    return AlignmentResult(ordered, pairs, s, min(1.0, max(0.0, norm)), mode, explored, timed_out)


def align(gc: Cfg, gi: Cfg, mode: AlignerMode, cfg: AlignConfig = AlignConfig()):
    if mode is AlignerMode.RIGID:
        return rigid_align(gc, gi)
    return flex_align(gc, gi, cfg, mode)


def gate(result, cfg: AlignConfig = AlignConfig()) -> str:
    if isinstance(result, Mismatch):
        return REJECT
    t = cfg.sarfgen_threshold if result.mode is AlignerMode.SARFGEN else cfg.proceed_threshold
    if result.mode is AlignerMode.RIGID:
        return PROCEED
    return PROCEED if result.normalized >= t - 1e-12 else REJECT


# Model recreation -----------------------------------------------------------------

def recreate_function(gc: Cfg, gi: Cfg, result: AlignmentResult, fc: ModelFunction,
                      fi: ModelFunction) -> tuple[ModelFunction, dict, list[str]]:
    """Rebuild ``fi`` so its locations and transitions mirror ``fc``.

    Returns the new function, the full correct->incorrect location map and
    warnings about definitions lost with dropped locations."""
    phi = {u: v for u, v in result.mapping.items() if u is not SINK}
    next_id = max(fi.locations, default=0) + 1
    new_locs: dict[int, Location] = {}
    for u in gc.inner:
        if u not in phi:
            phi[u] = next_id
            new_locs[next_id] = Location(
                next_id, f"added to mirror correct location {u}", (), None, None,
                fc.locations[u].line)
            next_id += 1
    image = set(phi.values())
    dropped = [i for i in fi.locations if i not in image]

    def target(x):
        return None if x is SINK else phi[x]

    locs = {}
    for u in gc.inner:
        v = phi[u]
        base = fi.locations.get(v) or new_locs[v]
        locs[v] = replace(base, true_next=target(gc.true_succ[u]),
                          false_next=target(gc.false_succ[u]))
    locs = dict(sorted(locs.items()))
    warnings = []
    if dropped:
        kept_defs = set(fi.params)
        used = set()
        for l in locs.values():
            for var, e in l.bindings:
                kept_defs.add(var)
                used |= expr_vars(e)
        for i in dropped:
            for var, _ in fi.locations[i].bindings:
                if var not in kept_defs and var in used:
                    warnings.append(
                        f"{fi.name}: dropping location {i} removes the only definition of '{var}'")
    out = replace(fi, entry=phi[gc.entry], locations=locs)
    return out, phi, sorted(set(warnings))


def recreate_model(gc: Cfg, gi: Cfg, result: AlignmentResult, mc: Model, mi: Model) -> Model:
    f, _, _ = recreate_function(gc, gi, result, mc.functions[gc.function],
                                mi.functions[gi.function])
    return mi.with_function(f)
