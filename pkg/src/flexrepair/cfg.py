"""Labeled control flow graphs over model locations."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .model import Const, Expr, ModelFunction, Op, Var, is_generated

SINK = None   # node id of the distinguished None sink


def label_of_name(name: str) -> Optional[str]:
    """Generated names are labels ($ stripped); user variables are not."""
    if not is_generated(name):
        return None
    return name.lstrip("$")


def extract_labels(e: Expr) -> Counter:
    out: Counter = Counter()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Op):
            out[x.name] += 1
            stack.extend(x.args)
        elif isinstance(x, Const):
            out[x.lexeme] += 1
        elif isinstance(x, Var):
            lab = label_of_name(x.name)
            if lab is not None:
                out[lab] += 1
    return out


def binding_labels(var: str, e: Expr) -> Counter:
    out = extract_labels(e)
    lab = label_of_name(var)
    if lab is not None:
        out[lab] += 1
    return out


def location_labels(bindings) -> Counter:
    out: Counter = Counter()
    for v, e in bindings:
        out.update(binding_labels(v, e))
    return out


@dataclass(frozen=True)
class CfgNode:
    id: Optional[int]
    labels: Counter
    line: int = 0
    description: str = ""
    bindings: tuple = ()

    @property
    def is_sink(self) -> bool:
        return self.id is SINK


@dataclass(frozen=True)
class Cfg:
    function: str
    nodes: dict                # id -> CfgNode, sink last
    true_succ: dict            # id -> id (non-sink nodes only)
    false_succ: dict
    entry: int

    @property
    def inner(self) -> list[int]:
        """Non-sink node ids, ascending."""
        return [i for i in self.nodes if i is not SINK]

    def edges(self) -> set[tuple]:
        return ({(u, v, True) for u, v in self.true_succ.items()}
                | {(u, v, False) for u, v in self.false_succ.items()})

    def to_text(self) -> str:
        lines = [f"cfg {self.function} entry {self.entry}"]
        for i, n in self.nodes.items():
            labs = " ".join(f"{k}x{c}" if c > 1 else k for k, c in sorted(n.labels.items()))
            lines.append(f"node {i if i is not SINK else 'None'} [{labs}]")
        for u in self.inner:
            lines.append(f"edge {u} -> {self.true_succ[u]} T")
            lines.append(f"edge {u} -> {self.false_succ[u]} F")
        return "\n".join(lines) + "\n"


def build_cfg(f: ModelFunction) -> Cfg:
    nodes = {}
    ts, fs = {}, {}
    for i, loc in f.locations.items():
        nodes[i] = CfgNode(i, location_labels(loc.bindings), loc.line, loc.description, loc.bindings)
        ts[i] = loc.true_next
        fs[i] = loc.false_next
    nodes[SINK] = CfgNode(SINK, Counter(), 0, "None")
    return Cfg(f.name, nodes, ts, fs, f.entry)


def make_cfg(labels: dict, true_succ: dict, false_succ: dict, entry: int = 1,
             name: str = "f") -> Cfg:
    """Build a Cfg directly from label lists; handy for tests and fixtures."""
    nodes = {i: CfgNode(i, Counter(labels[i])) for i in sorted(labels)}
    nodes[SINK] = CfgNode(SINK, Counter(), 0, "None")
    return Cfg(name, nodes, {i: true_succ.get(i) for i in labels},
               {i: false_succ.get(i) for i in labels}, entry)
