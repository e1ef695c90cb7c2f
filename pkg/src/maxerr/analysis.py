"""Circuit-level reliability quantities.

Builds on the search and the propagator: the worst-case output error of
a circuit is, per output, the conditional error probability at the most
error-prone input vector; sweeping the gate error probability locates
the point where that worst case stops being useful (crosses 0.5); the
spectrum enumerates every input vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, index_vector, vector_string
from .jointree import BinaryJoinTree, build_tree, choose_order
from .mapsearch import MapQuery, MapResult, solve
from .model import ErrorModelNet, build_error_model
from .propagate import Propagator


@dataclass
class OutputReport:
    output: str
    vector: str | None      # worst input vector, None when unreachable
    p_error: float          # P(output wrong | worst vector)
    unreachable: bool = False
    nodes_expanded: int = 0
    nodes_pruned: int = 0


@dataclass
class ErrorReport:
    per_output: list[OutputReport]
    max_error: float
    worst_vector: str | None
    worst_output: str | None
    input_order: tuple[str, ...]


@dataclass
class SweepPoint:
    epsilon: float
    max_error: float
    avg_error: float
    worst_vector: str | None
    worst_output: str | None


@dataclass
class SweepCurve:
    points: list[SweepPoint]
    error_bound: float | None = None     # first grid eps with max_error >= 0.5
    refined_bound: float | None = None   # bisected to +-1e-4 when requested


@dataclass
class Spectrum:
    input_order: tuple[str, ...]
    per_output: np.ndarray   # (2**k, n) conditional error probabilities
    max_probs: np.ndarray    # (2**k,) max over outputs
    mu: float
    sigma: float

    def above(self, threshold: float | None = None) -> list[tuple[str, float]]:
        """Vectors whose worst-output error reaches the threshold
        (default mu + sigma)."""
        t = self.mu + self.sigma if threshold is None else threshold
        k = len(self.input_order)
        return [(vector_string(index_vector(i, k)), float(p))
                for i, p in enumerate(self.max_probs) if p >= t]


def prepare(c: Circuit, eps, prior1: float = 0.5, width_limit: int | None = None):
    """Model plus join tree for a circuit; the usual entry point."""
    net = build_error_model(c, eps, prior1)
    kwargs = {} if width_limit is None else {"width_limit": width_limit}
    tree = build_tree(net, choose_order(net), **kwargs)
    return net, tree


def _cond_error(prop: Propagator, input_assign: dict[int, int], comp_var: int) -> float:
    """P(comparator = 1 | inputs) via P(comparator, inputs) normalized."""
    prop.set_evidence(input_assign)
    belief = prop.var_belief(comp_var)
    t = belief.table if not belief.log else np.exp(belief.table)
    total = float(t[0] + t[1])
    if total == 0.0:
        return 0.0
    return float(t[1]) / total


def max_error(net: ErrorModelNet, tree: BinaryJoinTree,
              use_seed: bool = True, prune: bool = True,
              joint: bool = False) -> ErrorReport:
    """Worst-case output error report.

    Per output: search for the input vector maximizing P(inputs, output
    wrong), then condition every comparator on that vector; the report
    maximum is over all of it.  With ``joint`` the search instead
    evidences every comparator at once (all outputs wrong together).
    An output no fault combination can flip is marked unreachable.
    """
    k = len(net.input_vars)
    cond_prop = Propagator(tree, net)
    rows: list[OutputReport] = []
    names = list(net.circuit.outputs)
    if joint:
        queries = [("*", {v: 1 for v in net.comparators})]
    else:
        queries = [(names[j], {net.comparators[j]: 1}) for j in range(len(names))]

    for name, evid in queries:
        res: MapResult = solve(MapQuery(net, tree, evid), use_seed=use_seed, prune=prune)
        if res.p_map <= 0.0:
            rows.append(OutputReport(name, None, 0.0, True,
                                     res.nodes_expanded, res.nodes_pruned))
            continue
        bits = [res.assignment[v] for v in net.input_vars]
        if joint:
            cond_prop.set_evidence(dict(res.assignment))
            p_inputs = cond_prop.query(tree.singleton[net.input_vars[0]])
            p = res.p_map / p_inputs
        else:
            comp = next(iter(evid))
            p = _cond_error(cond_prop, dict(res.assignment), comp)
        rows.append(OutputReport(name, vector_string(bits), p, False,
                                 res.nodes_expanded, res.nodes_pruned))

    reachable = [r for r in rows if not r.unreachable]
    if reachable:
        top = max(reachable, key=lambda r: r.p_error)
        rep = ErrorReport(rows, top.p_error, top.vector, top.output,
                          net.circuit.inputs)
    else:
        rep = ErrorReport(rows, 0.0, None, None, net.circuit.inputs)
    return rep


def avg_error(net: ErrorModelNet, tree: BinaryJoinTree) -> float:
    """Max over outputs of P(output wrong) with no input evidence, i.e.
    the error rate averaged over uniformly weighted input vectors."""
    prop = Propagator(tree, net)
    worst = 0.0
    for comp in net.comparators:
        belief = prop.var_belief(comp)
        t = belief.table if not belief.log else np.exp(belief.table)
        worst = max(worst, float(t[1]) / float(t[0] + t[1]))
    return worst


def sweep(c: Circuit, grid, prior1: float = 0.5, refine: bool = False,
          width_limit: int | None = None) -> SweepCurve:
    """Max/avg error across a gate error probability grid.

    The join tree depends only on the structure, so it is built once
    and rebound per grid point.  ``refine`` bisects the first 0.5
    crossing of max_error down to +-1e-4 in eps.
    """
    grid = [float(e) for e in grid]
    if not grid:
        raise ValueError("empty eps grid")
    _, tree = prepare(c, grid[0], prior1, width_limit)

    def at(eps: float) -> tuple[float, ErrorReport]:
        rep = max_error(build_error_model(c, eps, prior1), tree)
        return rep.max_error, rep

    points: list[SweepPoint] = []
    for eps in grid:
        m, rep = at(eps)
        avg = avg_error(build_error_model(c, eps, prior1), tree)
        points.append(SweepPoint(eps, m, avg, rep.worst_vector, rep.worst_output))

    curve = SweepCurve(points)
    crossing = next((i for i, p in enumerate(points) if p.max_error >= 0.5), None)
    if crossing is not None:
        curve.error_bound = points[crossing].epsilon
        if refine:
            lo = points[crossing - 1].epsilon if crossing else 0.0
            hi = points[crossing].epsilon
            while hi - lo > 2e-4:
                mid = 0.5 * (lo + hi)
                if at(mid)[0] >= 0.5:
                    hi = mid
                else:
                    lo = mid
            curve.refined_bound = 0.5 * (lo + hi)
    return curve


MAX_SPECTRUM_INPUTS = 20


def spectrum(c: Circuit, eps, prior1: float = 0.5,
             width_limit: int | None = None) -> Spectrum:
    """Exact per-vector worst-output error over all 2**k input vectors.

    Enumerates vectors in Gray order so each step moves one evidence
    bit and most messages stay cached.  Capped at 20 inputs.
    """
    if c.n_inputs > MAX_SPECTRUM_INPUTS:
        raise ValueError("spectrum enumeration capped at %d inputs, circuit has %d"
                         % (MAX_SPECTRUM_INPUTS, c.n_inputs))
    net, tree = prepare(c, eps, prior1, width_limit)
    prop = Propagator(tree, net)
    k = c.n_inputs
    table = np.zeros((1 << k, len(net.comparators)))
    for step in range(1 << k):
        idx = step ^ (step >> 1)
        bits = index_vector(idx, k)
        assign = {v: bits[j] for j, v in enumerate(net.input_vars)}
        for j, comp in enumerate(net.comparators):
            table[idx, j] = _cond_error(prop, assign, comp)
    maxes = table.max(axis=1)
    return Spectrum(c.inputs, table, maxes, float(maxes.mean()), float(maxes.std()))
