"""Message passing: totals, cache deltas, bounds, root choices."""

import itertools

import numpy as np
import pytest

from maxerr.circuit import parse_bench, vector_index
from maxerr.jointree import build_tree
from maxerr.model import build_error_model, joint_prob
from maxerr.oracle import FaultEnumerator
from maxerr.propagate import (Propagator, best_bound_root,
                              count_order_inversions, map_upper_bound,
                              prob_evidence, propagate)
from maxerr.valuation import from_log, reduce_all

SMALL = parse_bench("""
INPUT(a)
INPUT(b)
INPUT(c)
OUTPUT(z)
d = AND(a, b)
e = NOR(d, c)
z = NAND(e, a)
""")

EPS = 0.05


def _net_tree(circuit, eps=EPS):
    net = build_error_model(circuit, eps)
    return net, build_tree(net)


def _enum_prob(net, evidence):
    """Brute-force P(evidence) over all 2**N joint assignments."""
    total = 0.0
    for bits in itertools.product((0, 1), repeat=net.n_vars):
        if all(bits[v] == s for v, s in evidence.items()):
            total += joint_prob(net, bits)
    return total


def test_empty_evidence_sums_to_one(c17):
    for circuit in (SMALL, c17):
        net, tree = _net_tree(circuit)
        assert prob_evidence(tree, net, {}) == pytest.approx(1.0, abs=1e-9)


def test_empty_evidence_sums_to_one_on_corpus(corpus):
    for circuit in corpus[:15]:
        net, tree = _net_tree(circuit)
        assert prob_evidence(tree, net, {}) == pytest.approx(1.0, abs=1e-9)


def test_matches_brute_force_enumeration():
    net, tree = _net_tree(SMALL)
    cmp_var = net.comparator_of("z")
    for evidence in ({cmp_var: 1},
                     {cmp_var: 1, net.input_vars[0]: 0},
                     {cmp_var: 0, net.input_vars[1]: 1, net.input_vars[2]: 0}):
        want = _enum_prob(net, evidence)
        got = prob_evidence(tree, net, evidence)
        assert got == pytest.approx(want, abs=1e-12)


def test_every_root_gives_same_probability():
    net, tree = _net_tree(SMALL)
    cmp_var = net.comparator_of("z")
    p = Propagator(tree, net)
    p.set_evidence({cmp_var: 1})
    answers = [p.query(cid) for cid in sorted(set(tree.singleton.values()))]
    assert max(answers) - min(answers) < 1e-9


def test_var_belief_recovers_marginals():
    net, tree = _net_tree(SMALL)
    p = Propagator(tree, net)

    cells = p.var_belief(net.input_vars[0]).table
    assert cells == pytest.approx([0.5, 0.5], abs=1e-12)

    cmp_var = net.comparator_of("z")
    want1 = _enum_prob(net, {cmp_var: 1})
    cells = p.var_belief(cmp_var).table
    assert cells[1] == pytest.approx(want1, abs=1e-12)
    assert cells.sum() == pytest.approx(1.0, abs=1e-12)


def test_evidence_delta_matches_fresh_propagator():
    net, tree = _net_tree(SMALL)
    cmp_var = net.comparator_of("z")
    root = tree.singleton[cmp_var]
    i0, i1 = net.input_vars[0], net.input_vars[1]

    p = Propagator(tree, net)
    steps = [{}, {i0: 0}, {i0: 0, i1: 1}, {i0: 1, i1: 1}, {cmp_var: 1, i0: 1}]
    for ev in steps:
        p.set_evidence(ev)
        got = p.query(root)
        fresh = Propagator(tree, net)
        fresh.set_evidence(ev)
        assert got == pytest.approx(fresh.query(root), abs=1e-12)


def test_evidence_delta_keeps_unrelated_messages(c17):
    net, tree = _net_tree(c17)
    p = Propagator(tree, net)
    p.set_evidence({net.input_vars[0]: 0})
    p.query(tree.singleton[net.comparators[0]])
    before = set(p._msg)
    p.set_evidence({net.input_vars[0]: 1})
    assert before & set(p._msg), "flipping one input should not drop every message"
    # and the reused cache still gives the fresh answer
    got = p.query(tree.singleton[net.comparators[0]])
    fresh = Propagator(tree, net)
    fresh.set_evidence({net.input_vars[0]: 1})
    assert got == pytest.approx(fresh.query(tree.singleton[net.comparators[0]]), abs=1e-12)


def test_log_space_parity(c17):
    net, tree = _net_tree(c17)
    ev = {net.comparators[0]: 1, net.input_vars[2]: 1}
    lin = prob_evidence(tree, net, ev)
    logv = prob_evidence(tree, net, ev, log_space=True)
    assert logv == pytest.approx(lin, rel=1e-10)


def test_propagate_belief_cells_are_joint_probs():
    net, tree = _net_tree(SMALL)
    cmp_var = net.comparator_of("z")
    bel = propagate(tree, net, {}, tree.singleton[cmp_var])
    assert bel.scope == (cmp_var,)
    assert bel.table[1] == pytest.approx(_enum_prob(net, {cmp_var: 1}), abs=1e-12)
    bel_log = propagate(tree, net, {}, tree.singleton[cmp_var], log_space=True)
    assert from_log(bel_log).table == pytest.approx(bel.table, rel=1e-10)


def test_sum_only_schedule_has_no_inversions():
    net, tree = _net_tree(SMALL)
    for cid in range(tree.n_clusters):
        assert count_order_inversions(tree, cid, ()) == 0


def test_best_bound_root_minimizes_inversions(c17):
    net, tree = _net_tree(c17)
    root = best_bound_root(tree, net.input_vars)
    counts = {cid: count_order_inversions(tree, cid, net.input_vars)
              for cid in set(tree.singleton.values())}
    assert counts[root] == min(counts.values())


def test_mixed_query_bounds_exact_max():
    net, tree = _net_tree(SMALL)
    cmp_var = net.comparator_of("z")
    k = SMALL.n_inputs
    enum = FaultEnumerator(SMALL)
    cond = enum.cond_errors(EPS)[:, 0]
    exact = 0.5 ** k * cond.max()

    p = Propagator(tree, net, map_vars=net.input_vars)
    p.set_evidence({cmp_var: 1})
    for cid in sorted(set(tree.singleton.values())):
        u = p.query(cid)
        assert u >= exact - 1e-12
        if count_order_inversions(tree, cid, net.input_vars) == 0:
            assert u == pytest.approx(exact, abs=1e-12)


def test_complete_assignment_bound_is_exact():
    net, tree = _net_tree(SMALL)
    cmp_var = net.comparator_of("z")
    k = SMALL.n_inputs
    enum = FaultEnumerator(SMALL)
    cond = enum.cond_errors(EPS)[:, 0]
    prop = Propagator(tree, net, map_vars=net.input_vars)
    for bits in itertools.product((0, 1), repeat=k):
        partial = dict(zip(net.input_vars, bits))
        u = map_upper_bound(tree, net, partial, {cmp_var: 1},
                            new_var=net.input_vars[-1], _prop=prop)
        want = 0.5 ** k * cond[vector_index(bits)]
        assert u == pytest.approx(want, abs=1e-12)


def test_partial_assignment_bound_dominates_completions():
    net, tree = _net_tree(SMALL)
    cmp_var = net.comparator_of("z")
    k = SMALL.n_inputs
    enum = FaultEnumerator(SMALL)
    cond = enum.cond_errors(EPS)[:, 0]
    prop = Propagator(tree, net, map_vars=net.input_vars)
    for pattern in itertools.product((None, 0, 1), repeat=k):
        partial = {net.input_vars[j]: b for j, b in enumerate(pattern) if b is not None}
        best = max(0.5 ** k * cond[vector_index(bits)]
                   for bits in itertools.product((0, 1), repeat=k)
                   if all(bits[j] == b for j, b in enumerate(pattern) if b is not None))
        u = map_upper_bound(tree, net, partial, {cmp_var: 1}, _prop=prop)
        assert u >= best - 1e-12


def test_rejects_tree_from_other_network(c17):
    net_small, tree_small = _net_tree(SMALL)
    net_c17 = build_error_model(c17, EPS)
    with pytest.raises(ValueError):
        Propagator(tree_small, net_c17)


def test_evidence_requires_singleton_cluster():
    net = build_error_model(SMALL, EPS)
    tree = build_tree(net, targets=list(net.input_vars) + list(net.comparators))
    p = Propagator(tree, net)
    hidden = [v.id for v in net.vars if v.id not in tree.singleton]
    assert hidden, "expected some variable without a singleton cluster"
    with pytest.raises(KeyError):
        p.set_evidence({hidden[0]: 1})
