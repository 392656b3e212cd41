"""Brute-force reference implementations used by the test suites."""
import itertools
import random
from collections import Counter

from flexrepair.cfg import SINK, make_cfg

LABELS = ["Add", "Lt", "cond", "0", "1", "GetElement", "print"]


def jaccard_ref(a, b):
    keys = set(a) | set(b)
    if not keys:
        return 1.0
    return sum(min(a[k], b[k]) for k in keys) / sum(max(a[k], b[k]) for k in keys)


def pair_score_ref(gc, gi, phi, u, v, edges):
    lab = jaccard_ref(Counter(gc.nodes[u].labels), Counter(gi.nodes[v].labels))
    if not edges:
        return (lab + 1) / 2
    hits = (phi.get(gc.true_succ[u], "x") == gi.true_succ[v]) + \
        (phi.get(gc.false_succ[u], "x") == gi.false_succ[v])
    return (lab + {0: 0.0, 1: 0.5, 2: 1.0}[hits]) / 2


def exhaustive_best(gc, gi, edges=True):
    """Maximum summed pair score over every injection of the smaller node set."""
    U, V = gc.inner, gi.inner
    best = 0.0
    if len(U) <= len(V):
        cands = ((dict(zip(U, p))) for p in itertools.permutations(V, len(U)))
    else:
        cands = ({u: v for v, u in zip(V, p)} for p in itertools.permutations(U, len(V)))
    for phi in cands:
        phi[SINK] = SINK
        s = sum(pair_score_ref(gc, gi, phi, u, v, edges) for u, v in phi.items() if u is not SINK)
        best = max(best, s)
    return best


def random_cfg(rng: random.Random, n: int, name="f"):
    ids = list(range(1, n + 1))
    targets = ids + [None]
    labels = {i: rng.choices(LABELS, k=rng.randint(0, 3)) for i in ids}
    ts = {i: rng.choice(targets) for i in ids}
    fs = {i: rng.choice(targets) if rng.random() < 0.4 else None for i in ids}
    return make_cfg(labels, ts, fs, 1, name)
