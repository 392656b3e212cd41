"""Program dependence graphs, graphlet orbit signatures and similarity-based
alignment that yields replace/add/remove suggestions."""
from __future__ import annotations

import itertools
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .align import jaccard
from .cfg import extract_labels
from .model import COND, OUT, Model, ModelFunction, primed_vars, unprimed_vars

CTRL, DATA = "Ctrl", "Data"


@dataclass(frozen=True)
class PdgNode:
    id: int
    labels: Counter
    function: str = ""
    location: int = 0
    variable: str = ""
    text: str = ""


@dataclass
class Pdg:
    nodes: dict                                  # id -> PdgNode
    edges: set = field(default_factory=set)      # (src, dst, label)

    def simple_edges(self) -> set:
        """Unlabeled directed edges used for topology."""
        return {(u, v) for u, v, _ in self.edges}

    def neighbors(self, u) -> set:
        return ({b for a, b, _ in self.edges if a == u}
                | {a for a, b, _ in self.edges if b == u})

    @classmethod
    def from_spec(cls, labels: dict, edges) -> "Pdg":
        """Build from {id: [labels]} and (src, dst, label) triples, folding
        self-edges the same way build_pdg does."""
        nodes = {i: PdgNode(i, Counter(ls)) for i, ls in labels.items()}
        return _fold_self_edges(nodes, set(edges))


def _fold_self_edges(nodes: dict, edges: set) -> Pdg:
    out = set()
    for u, v, lab in edges:
        if u != v:
            out.add((u, v, lab))
        elif lab == CTRL and "Loop" not in nodes[u].labels:
            labs = Counter(nodes[u].labels)
            labs["Loop"] += 1
            n = nodes[u]
            nodes[u] = PdgNode(n.id, labs, n.function, n.location, n.variable, n.text)
    return Pdg(dict(nodes), out)


# Construction -------------------------------------------------------------------

def _postdominators(f: ModelFunction) -> dict:
    ids = list(f.locations)
    succ = {}
    for i, loc in f.locations.items():
        nxt = [loc.true_next] + ([loc.false_next] if loc.conditional else [])
        succ[i] = set(nxt)
    everything = set(ids) | {None}
    pdom = {i: set(everything) for i in ids}
    pdom[None] = {None}
    changed = True
    while changed:
        changed = False
        for i in ids:
            inter = set(everything)
            for s in succ[i]:
                inter &= pdom[s]
            new = {i} | inter
            if new != pdom[i]:
                pdom[i] = new
                changed = True
    return pdom


def control_dependences(f: ModelFunction) -> set:
    """Pairs (guard location, dependent location)."""
    pdom = _postdominators(f)
    deps = set()
    for x, loc in f.locations.items():
        if not loc.conditional:
            continue
        for s in (loc.true_next, loc.false_next):
            if s is None:
                continue
            # walk the post-dominator chain from s up to ipdom(x)
            for y in f.locations:
                if y in pdom[s] and not (y in pdom[x] and y != x):
                    deps.add((x, y))
    return deps


def _statement_labels(var: str, e) -> Counter:
    labs = extract_labels(e)
    if var == COND:
        labs["Ctrl"] += 1
    elif var == OUT or var.startswith("call#") or "_val#" in var:
        labs["Call"] += 1
    else:
        labs["Assign"] += 1
    return labs


def build_pdg(model: Model, trace=None) -> Pdg:
    """One node per binding; control edges from post-dominator control
    dependence, data edges from reaching definitions.  ``trace`` is accepted
    for interface symmetry and not used."""
    nodes: dict = {}
    edges: set = set()
    nid = itertools.count(1)
    for f in model.functions.values():
        where: dict = {}                                  # (loc, var) -> node id
        for li, loc in f.locations.items():
            for var, e in loc.bindings:
                k = next(nid)
                nodes[k] = PdgNode(k, _statement_labels(var, e), f.name, li, var,
                                   f"{var} := {e}")
                where[(li, var)] = k
        for x, y in control_dependences(f):
            src = where.get((x, COND))
            if src is None:
                continue
            for var, _ in f.locations[y].bindings:
                edges.add((src, where[(y, var)], CTRL))
        reach_in = _reaching(f, where)
        for li, loc in f.locations.items():
            for var, e in loc.bindings:
                dst = where[(li, var)]
                for v in primed_vars(e):
                    if (li, v) in where:
                        edges.add((where[(li, v)], dst, DATA))
                for v in unprimed_vars(e):
                    for src in reach_in[li].get(v, ()):
                        edges.add((src, dst, DATA))
    return _fold_self_edges(nodes, edges)


def _reaching(f: ModelFunction, where: dict) -> dict:
    preds: dict = {i: set() for i in f.locations}
    for i, loc in f.locations.items():
        nxt = [loc.true_next] + ([loc.false_next] if loc.conditional else [])
        for s in nxt:
            if s is not None:
                preds[s].add(i)
    gen = {i: {v: {where[(i, v)]} for v, _ in loc.bindings} for i, loc in f.locations.items()}
    rin = {i: {} for i in f.locations}
    rout = {i: dict(gen[i]) for i in f.locations}
    changed = True
    while changed:
        changed = False
        for i in f.locations:
            acc: dict = {}
            for p in preds[i]:
                for v, s in rout[p].items():
                    acc.setdefault(v, set()).update(s)
            rin[i] = acc
            out = {v: set(s) for v, s in acc.items()}
            out.update({v: set(s) for v, s in gen[i].items()})
            if out != rout[i]:
                rout[i] = out
                changed = True
    return rin


# Graphlets ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Graphlet:
    size: int
    edges: tuple                       # canonical edges over 0..size-1
    orbits: tuple                      # orbit id per position


def _weakly_connected(k: int, edges) -> bool:
    adj = {i: set() for i in range(k)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, todo = {0}, [0]
    while todo:
        x = todo.pop()
        for y in adj[x] - seen:
            seen.add(y)
            todo.append(y)
    return len(seen) == k


def _canon(k: int, edges: frozenset) -> tuple:
    return min(tuple(sorted((p[a], p[b]) for a, b in edges))
               for p in itertools.permutations(range(k)))


@lru_cache(maxsize=None)
def graphlet_catalog(max_nodes: int = 3) -> tuple:
    """All weakly connected directed graphs on 2..max_nodes nodes without
    self-loops, up to isomorphism, with automorphism orbits.  Graphlets are
    ordered by size, edge count, then canonical edges; orbits within a
    graphlet by (in-degree, out-degree) descending."""
    out = []
    next_orbit = 0
    for k in range(2, max_nodes + 1):
        pairs = [(a, b) for a in range(k) for b in range(k) if a != b]
        classes = set()
        for r in range(1, len(pairs) + 1):
            for es in itertools.combinations(pairs, r):
                if _weakly_connected(k, es):
                    classes.add(_canon(k, frozenset(es)))
        for edges in sorted(classes, key=lambda e: (len(e), e)):
            es = set(edges)
            autos = [p for p in itertools.permutations(range(k))
                     if {(p[a], p[b]) for a, b in es} == es]
            cls = {}
            for x in range(k):
                cls[x] = min(p[x] for p in autos)
            deg = {x: (sum(1 for a, b in es if b == x), sum(1 for a, b in es if a == x))
                   for x in range(k)}
            reps = sorted(set(cls.values()), key=lambda r: (-deg[r][0], -deg[r][1], r))
            ids = {r: next_orbit + n for n, r in enumerate(reps)}
            next_orbit += len(reps)
            out.append(Graphlet(k, edges, tuple(ids[cls[x]] for x in range(k))))
    return tuple(out)


def num_orbits(max_nodes: int = 3) -> int:
    return 1 + max(max(g.orbits) for g in graphlet_catalog(max_nodes))


@lru_cache(maxsize=None)
def _orbit_lookup(k: int, max_nodes: int) -> dict:
    """Edge set over positions 0..k-1 -> orbit id per position."""
    table = {}
    by_canon = {g.edges: g for g in graphlet_catalog(max_nodes) if g.size == k}
    pairs = [(a, b) for a in range(k) for b in range(k) if a != b]
    for r in range(1, len(pairs) + 1):
        for es in itertools.combinations(pairs, r):
            if not _weakly_connected(k, es):
                continue
            es = frozenset(es)
            for p in itertools.permutations(range(k)):
                mapped = tuple(sorted((p[a], p[b]) for a, b in es))
                g = by_canon.get(mapped)
                if g is not None:
                    table[es] = tuple(g.orbits[p[x]] for x in range(k))
                    break
    return table


def _connected_subsets(nodes, und: dict, max_nodes: int):
    """ESU enumeration of connected node sets of size 2..max_nodes."""
    order = {v: n for n, v in enumerate(nodes)}

    def extend(sub, ext, v):
        if len(sub) >= 2:
            yield tuple(sub)
        if len(sub) == max_nodes:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            excl = set()
            for x in sub:
                excl |= und[x]
            new_ext = ext + [u for u in und[w]
                             if order[u] > order[v] and u not in sub and u not in excl
                             and u not in ext]
            yield from extend(sub + [w], new_ext, v)

    for v in nodes:
        yield from extend([v], [u for u in und[v] if order[u] > order[v]], v)


def orbit_signatures(g: Pdg, max_nodes: int = 3) -> dict:
    n = num_orbits(max_nodes)
    nodes = sorted(g.nodes)
    es = {(a, b) for a, b in g.simple_edges() if a != b}
    und = {v: set() for v in nodes}
    for a, b in es:
        und[a].add(b)
        und[b].add(a)
    sig = {v: [0] * n for v in nodes}
    for sub in _connected_subsets(nodes, und, max_nodes):
        k = len(sub)
        pos = {v: i for i, v in enumerate(sub)}
        local = frozenset((pos[a], pos[b]) for a in sub for b in sub if (a, b) in es)
        orbits = _orbit_lookup(k, max_nodes)[local]
        for v, o in zip(sub, orbits):
            sig[v][o] += 1
    return {v: tuple(s) for v, s in sig.items()}


# Similarity and alignment ----------------------------------------------------------

def topological_similarity(su, sv, weights=None) -> float:
    w = weights if weights is not None else [1.0] * len(su)
    num = sum(wn * abs(math.log(a + 1) - math.log(b + 1)) / math.log(max(a, b) + 2)
              for wn, a, b in zip(w, su, sv))
    return 1.0 - num / sum(w)


def pdg_similarity(lu: Counter, lv: Counter, su, sv, alpha: float = 0.5, weights=None) -> float:
    return alpha * topological_similarity(su, sv, weights) + (1 - alpha) * jaccard(lu, lv)


@dataclass
class PdgAlignment:
    mapping: dict                      # correct node -> incorrect node
    pair_sim: dict                     # (correct, incorrect) -> Sim
    replacements: list
    additions: list                    # correct nodes missing from the incorrect program
    removals: list                     # incorrect nodes to drop
    edge_correctness: float
    swapped: bool
    mean: float = 0.0
    std: float = 0.0

    def suggestions(self) -> list:
        out = [{"kind": "replace", "correct": u, "incorrect": v} for u, v in self.replacements]
        out += [{"kind": "add", "correct": u} for u in self.additions]
        out += [{"kind": "remove", "incorrect": v} for v in self.removals]
        return out

    def to_json(self) -> dict:
        return {"mapping": {str(u): v for u, v in self.mapping.items()},
                "pairSim": {f"{u}->{v}": s for (u, v), s in self.pair_sim.items()},
                "mean": self.mean, "std": self.std, "edgeCorrectness": self.edge_correctness,
                "swapped": self.swapped, "suggestions": self.suggestions()}


def edge_correctness(g1: Pdg, g2: Pdg, phi: dict) -> float:
    if not g1.edges:
        return 1.0
    hit = sum(1 for u, v, lab in g1.edges
              if u in phi and v in phi and (phi[u], phi[v], lab) in g2.edges)
    return hit / len(g1.edges)


def _undirected_distances(g: Pdg, sources, limit: int) -> dict:
    dist = {s: 0 for s in sources}
    q = deque(sources)
    while q:
        x = q.popleft()
        if dist[x] == limit:
            continue
        for y in g.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                q.append(y)
    return dist


def pdg_align(gc: Pdg, gi: Pdg, alpha: float = 0.5, k: float = 1.5, weights=None,
              hops: int = 2, similarity: Optional[dict] = None) -> PdgAlignment:
    """Align the correct PDG ``gc`` with the incorrect ``gi``.  The smaller
    graph is matched into the larger one.  ``similarity`` optionally overrides
    the computed Sim values (missing pairs count as 0)."""
    if not 0.0 <= alpha <= 1.0 or k < 0:
        raise ValueError("alpha must lie in [0, 1] and k must be non-negative")
    swapped = len(gc.nodes) > len(gi.nodes)
    g1, g2 = (gi, gc) if swapped else (gc, gi)
    V1, V2 = sorted(g1.nodes), sorted(g2.nodes)
    if similarity is None:
        s1, s2 = orbit_signatures(g1), orbit_signatures(g2)
        sim = {(a, b): pdg_similarity(g1.nodes[a].labels, g2.nodes[b].labels, s1[a], s2[b],
                                      alpha, weights) for a in V1 for b in V2}
    else:
        sim = {(a, b): similarity.get((b, a) if swapped else (a, b), 0.0) for a in V1 for b in V2}
    phi12 = {}
    if V1 and V2:
        W = np.array([[sim[(a, b)] for b in V2] for a in V1])
        rows, cols = linear_sum_assignment(W, maximize=True)
        phi12 = {V1[r]: V2[c] for r, c in zip(rows, cols)}
    vals = [sim[(a, b)] for a, b in phi12.items()]
    mu = float(np.mean(vals)) if vals else 0.0
    sd = float(np.std(vals)) if vals else 0.0
    repl12 = [(a, b) for a, b in phi12.items() if sim[(a, b)] < mu - k * sd]
    unaligned = set(V2) - set(phi12.values())
    near = _undirected_distances(g2, [b for _, b in repl12], hops)
    extra = sorted(v for v in unaligned if v in near)
    if swapped:
        mapping = {b: a for a, b in phi12.items()}
        pair_sim = {(b, a): sim[(a, b)] for a, b in phi12.items()}
        repl = sorted((b, a) for a, b in repl12)
        adds, rems = extra, []
    else:
        mapping = dict(phi12)
        pair_sim = {(a, b): sim[(a, b)] for a, b in phi12.items()}
        repl = sorted(repl12)
        adds, rems = [], extra
    ec = edge_correctness(gc, gi, mapping)
    return PdgAlignment(dict(sorted(mapping.items())), pair_sim, repl, adds, rems, ec,
                        swapped, mu, sd)
