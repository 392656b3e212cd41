"""Ordered tree edit distance (Zhang-Shasha, unit costs) over expressions."""
from __future__ import annotations

from functools import lru_cache

from .model import Const, Expr, Op, Var


def node_label(e: Expr) -> str:
    if isinstance(e, Var):
        return "v:" + str(e)
    if isinstance(e, Const):
        return "c:" + str(e)
    return "o:" + e.name


def _postorder(e: Expr) -> tuple[list[str], list[int]]:
    labels: list[str] = []
    leftmost: list[int] = []

    def rec(node) -> int:
        first = None
        for ch in (node.args if isinstance(node, Op) else ()):
            l = rec(ch)
            if first is None:
                first = l
        idx = len(labels)
        labels.append(node_label(node))
        leftmost.append(idx if first is None else first)
        return leftmost[idx]

    rec(e)
    return labels, leftmost


def _keyroots(leftmost: list[int]) -> list[int]:
    top = {}
    for i, l in enumerate(leftmost):
        top[l] = i
    return sorted(top.values())


@lru_cache(maxsize=200_000)
def tree_distance(a: Expr, b: Expr) -> int:
    if a == b:
        return 0
    la, ma = _postorder(a)
    lb, mb = _postorder(b)
    td = [[0] * len(lb) for _ in la]
    for i in _keyroots(ma):
        for j in _keyroots(mb):
            li, lj = ma[i], mb[j]
            m, n = i - li + 2, j - lj + 2
            fd = [[0] * n for _ in range(m)]
            for x in range(1, m):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, n):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, m):
                ix = li + x - 1
                for y in range(1, n):
                    jy = lj + y - 1
                    if ma[ix] == li and mb[jy] == lj:
                        fd[x][y] = min(fd[x - 1][y] + 1, fd[x][y - 1] + 1,
                                       fd[x - 1][y - 1] + (la[ix] != lb[jy]))
                        td[ix][jy] = fd[x][y]
                    else:
                        p, q = ma[ix] - li, mb[jy] - lj
                        fd[x][y] = min(fd[x - 1][y] + 1, fd[x][y - 1] + 1,
                                       fd[p][q] + td[ix][jy])
    return td[-1][-1]
