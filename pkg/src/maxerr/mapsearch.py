"""Worst input vector by depth-first branch and bound.

The search instantiates the primary inputs one at a time.  Each child
node gets an upper bound on P(inputs, comparator evidence) over all
completions from a collect rooted at the singleton of the variable just
assigned; a child whose bound falls below the incumbent by more than a
hair is cut.  A complete instantiation makes the bound exact, so the
incumbent at the end is the true maximum.  A greedy descent plus
single-bit-flip hill climbing seeds the incumbent; it never changes the
answer, only the amount of pruning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from .jointree import BinaryJoinTree
from .model import ErrorModelNet
from .propagate import Propagator, best_bound_root

PRUNE_TOL = 1e-12


@dataclass
class MapQuery:
    net: ErrorModelNet
    tree: BinaryJoinTree
    evid_o: dict[int, int]                 # comparator evidence, usually {O_j: 1}
    var_order: tuple[int, ...] = ()        # branching order over the inputs

    def __post_init__(self):
        if not self.var_order:
            self.var_order = var_order_heuristic(self.net)
        if sorted(self.var_order) != sorted(self.net.input_vars):
            raise ValueError("var_order must permute the input variables")


@dataclass
class MapResult:
    assignment: dict[int, int]
    p_map: float                           # P(assignment, evid_o)
    nodes_expanded: int
    nodes_pruned: int
    seed_value: float | None = None


def var_order_heuristic(net: ErrorModelNet) -> tuple[int, ...]:
    """Inputs by descending connectivity (CPTs they appear in), ties on
    the lower id; branching on busy inputs first moves the bounds
    quickest."""
    counts = {v: 0 for v in net.input_vars}
    for cpt in net.cpts:
        for v in cpt.scope:
            if v in counts:
                counts[v] += 1
    return tuple(sorted(counts, key=lambda v: (-counts[v], v)))


def _assign_key(assignment: Mapping[int, int], order: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(assignment[v] for v in order)


class _Search:
    def __init__(self, q: MapQuery, prune: bool,
                 on_bound: Callable[[dict, float], None] | None):
        self.q = q
        self.prune = prune
        self.on_bound = on_bound
        self.prop = Propagator(q.tree, q.net, map_vars=q.net.input_vars)
        self.best = -1.0
        self.best_assign: dict[int, int] | None = None
        self.expanded = 0
        self.pruned = 0

    def bound(self, partial: dict[int, int], new_var: int | None) -> float:
        ev = dict(self.q.evid_o)
        ev.update(partial)
        self.prop.set_evidence(ev)
        if new_var is None:
            root = best_bound_root(self.q.tree, self.prop.map_vars)
        else:
            root = self.q.tree.singleton[new_var]
        u = self.prop.query(root)
        if self.on_bound is not None:
            self.on_bound(dict(partial), u)
        return u

    def offer(self, assignment: dict[int, int], value: float) -> None:
        if value > self.best:
            self.best = value
            self.best_assign = dict(assignment)
        elif value == self.best and self.best_assign is not None:
            if _assign_key(assignment, self.q.var_order) < \
               _assign_key(self.best_assign, self.q.var_order):
                self.best_assign = dict(assignment)

    def walk(self, partial: dict[int, int], depth: int) -> None:
        v = self.q.var_order[depth]
        kids = []
        for s in (0, 1):
            partial[v] = s
            kids.append((self.bound(partial, v), s))
            self.expanded += 1
        del partial[v]
        kids.sort(key=lambda t: (-t[0], t[1]))
        for u, s in kids:
            if self.prune and u < self.best - PRUNE_TOL:
                self.pruned += 1
                continue
            partial[v] = s
            if depth + 1 == len(self.q.var_order):
                self.offer(partial, u)  # complete: the bound is exact
            else:
                self.walk(partial, depth + 1)
            del partial[v]


def seed(q: MapQuery) -> tuple[dict[int, int], float]:
    """Greedy descent on the child bounds, then single-bit-flip hill
    climbing on the exact P(i, evid_o).  Returns a feasible assignment
    and its exact probability (a lower bound on the optimum)."""
    s = _Search(q, prune=False, on_bound=None)
    partial: dict[int, int] = {}
    for v in q.var_order:
        vals = []
        for state in (0, 1):
            partial[v] = state
            vals.append((s.bound(partial, v), state))
        u1, u0 = vals[1][0], vals[0][0]
        partial[v] = 1 if u1 > u0 else 0
    best = s.bound(partial, q.var_order[-1])
    improved = True
    while improved:
        improved = False
        flip_best = None
        for v in q.var_order:
            partial[v] ^= 1
            p = s.bound(partial, v)
            partial[v] ^= 1
            if p > best and (flip_best is None or p > flip_best[0]):
                flip_best = (p, v)
        if flip_best is not None:
            best = flip_best[0]
            partial[flip_best[1]] ^= 1
            improved = True
    # re-collect at the root the walk uses for complete nodes, so the
    # incumbent is bit-identical whether it came from here or the walk
    return dict(partial), s.bound(partial, q.var_order[-1])


def solve(q: MapQuery, use_seed: bool = True, prune: bool = True,
          on_bound: Callable[[dict, float], None] | None = None) -> MapResult:
    """Exact worst-vector search.

    ``on_bound`` (assignment, bound) fires for every bound computed at a
    search node, for auditing.  With ``prune`` off the search visits the
    full binary tree over the inputs.  Ties resolve to the
    lexicographically smallest assignment along ``q.var_order``.
    """
    if not q.var_order:
        raise ValueError("no input variables to search over")
    s = _Search(q, prune, on_bound)
    seed_value = None
    if use_seed:
        assign, seed_value = seed(q)
        s.best = seed_value
        s.best_assign = assign
    s.bound({}, None)  # root node
    s.expanded += 1
    s.walk({}, 0)
    assert s.best_assign is not None
    return MapResult(s.best_assign, max(s.best, 0.0), s.expanded, s.pruned, seed_value)
