"""Exact list-coloring by backtracking, and a coloring checker."""

from typing import NamedTuple

import numpy as np


class InstanceTooLarge(ValueError):
    pass


class Unsolvable:
    """Proof by exhaustion that no proper list coloring exists."""

    def __init__(self, explored=0):
        self.explored = explored

    def __bool__(self):
        return False

    def __repr__(self):
        return f"Unsolvable(explored={self.explored})"


class BudgetExceeded(RuntimeError):
    pass


class ColoringViolation(NamedTuple):
    kind: str          # "conflict", "palette" or "uncolored"
    nodes: tuple
    color: int


def verify_coloring(instance, coloring, complete=False):
    """Conflicting edges, colors outside a node's palette and (with
    complete) uncolored nodes. Negative entries mean uncolored."""
    col = np.asarray(coloring, np.int64)
    g = instance.graph
    out = []
    if len(col) != g.n:
        raise ValueError(f"coloring has {len(col)} entries for {g.n} nodes")
    cu, cv = col[g.eu], col[g.ev]
    for i in np.flatnonzero((cu >= 0) & (cu == cv)).tolist():
        out.append(ColoringViolation("conflict", (int(g.eu[i]), int(g.ev[i])), int(cu[i])))
    for v in np.flatnonzero(col >= 0).tolist():
        pal = instance.palette(v)
        j = np.searchsorted(pal, col[v])
        if j >= len(pal) or pal[j] != col[v]:
            out.append(ColoringViolation("palette", (v,), int(col[v])))
    if complete:
        for v in np.flatnonzero(col < 0).tolist():
            out.append(ColoringViolation("uncolored", (v,), -1))
    return out


def solve_lists(nbrs, pals, fixed=None, budget=None, pruned=True):
    """Backtracking over list assignments.

    `nbrs[v]` lists v's neighbors, `pals[v]` its colors, `fixed` maps nodes
    to colors that stay as they are. With pruned, the next node is the one
    with the fewest usable colors (ties by id); otherwise nodes go in id
    order. Returns (coloring dict or None, assignments tried) and raises
    BudgetExceeded after more than `budget` assignments."""
    n = len(pals)
    palset = [set(p) for p in pals]
    col = {}
    block = [dict() for _ in range(n)]
    avail = [len(p) for p in pals]

    def put(v, c):
        col[v] = c
        for u in nbrs[v]:
            k = block[u].get(c, 0)
            block[u][c] = k + 1
            if k == 0 and c in palset[u]:
                avail[u] -= 1

    def take(v):
        c = col.pop(v)
        for u in nbrs[v]:
            k = block[u][c] - 1
            block[u][c] = k
            if k == 0 and c in palset[u]:
                avail[u] += 1

    for v, c in (fixed or {}).items():
        put(v, c)
    left = set(range(n)) - set(col)
    explored = 0
    stack = []

    def pick():
        if pruned:
            return min(left, key=lambda v: (avail[v], v))
        return min(left)

    def options(v):
        return [c for c in pals[v] if block[v].get(c, 0) == 0]

    if not left:
        return dict(col), 0
    v = pick()
    stack.append([v, options(v), 0])
    left.discard(v)
    while stack:
        top = stack[-1]
        v, opts, i = top
        if v in col:
            take(v)
        if i >= len(opts):
            stack.pop()
            left.add(v)
            continue
        top[2] = i + 1
        explored += 1
        if budget is not None and explored > budget:
            raise BudgetExceeded(f"more than {budget} assignments")
        put(v, opts[i])
        if not left:
            return dict(col), explored
        w = pick()
        if pruned and avail[w] == 0:
            continue
        left.discard(w)
        stack.append([w, options(w), 0])
    return None, explored


def brute_force_solve(instance, cap=12, pruned_cap=25):
    """Proper list coloring of the instance, or Unsolvable.

    Up to `cap` nodes every assignment is enumerated in id order; up to
    `pruned_cap` the search picks the most constrained node first."""
    n = instance.n
    if n > pruned_cap:
        raise InstanceTooLarge(f"{n} nodes exceeds the limit of {pruned_cap}")
    g = instance.graph
    nbrs = [g.neighbors(v).tolist() for v in range(n)]
    pals = [instance.palette(v).tolist() for v in range(n)]
    col, explored = solve_lists(nbrs, pals, pruned=n > cap)
    if col is None:
        return Unsolvable(explored)
    return np.array([col[v] for v in range(n)], np.int64)
