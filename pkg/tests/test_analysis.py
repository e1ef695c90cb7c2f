"""Report-level checks; the numeric anchors were derived once from the
fault-set enumeration oracle and are pinned here as literals."""

import numpy as np
import pytest

from maxerr.analysis import (MAX_SPECTRUM_INPUTS, avg_error, max_error,
                             prepare, spectrum, sweep)
from maxerr.circuit import all_input_vectors, parse_bench
from maxerr.oracle import FaultEnumerator, random_circuit
from maxerr.valuation import WidthLimitError

GRID = [round(0.005 * i, 3) for i in range(1, 41)]  # 0.005 .. 0.2


def test_worst_case_report_frozen(c17):
    net, tree = prepare(c17, 0.05)
    rep = max_error(net, tree)
    assert rep.max_error == pytest.approx(0.3160, abs=1e-12)
    assert rep.worst_vector == "01111"
    assert rep.worst_output == "23"
    assert rep.input_order == c17.inputs
    by_name = {r.output: r for r in rep.per_output}
    assert by_name["22"].vector == "01110"
    assert by_name["22"].p_error == pytest.approx(0.3096, abs=1e-12)
    assert by_name["23"].p_error == pytest.approx(0.3160, abs=1e-12)
    assert not any(r.unreachable for r in rep.per_output)


def test_average_error_frozen(c17):
    net, tree = prepare(c17, 0.05)
    assert avg_error(net, tree) == pytest.approx(0.2398, abs=1e-12)


def test_per_output_matches_oracle_across_eps(c17):
    enum = FaultEnumerator(c17)
    for eps in (0.01, 0.2):
        net, tree = prepare(c17, eps)
        rep = max_error(net, tree)
        cond = enum.cond_errors(eps)
        for j, row in enumerate(rep.per_output):
            assert row.p_error == pytest.approx(cond[:, j].max(), abs=1e-12)
        assert avg_error(net, tree) == pytest.approx(cond.mean(axis=0).max(), abs=1e-12)


def test_search_counters_surface_in_report(c17):
    net, tree = prepare(c17, 0.05)
    rep = max_error(net, tree, use_seed=False, prune=False)
    for row in rep.per_output:
        assert row.nodes_expanded == 2 ** (c17.n_inputs + 1) - 1
        assert row.nodes_pruned == 0


def test_joint_mode_matches_direct_enumeration(c17):
    eps = 0.05
    net, tree = prepare(c17, eps)
    rep = max_error(net, tree, joint=True)
    assert [r.output for r in rep.per_output] == ["*"]

    # independent route: weight the fault sets flipping every output at once
    w = FaultEnumerator(c17).weights(eps)
    fault_rows = all_input_vectors(c17.n_gates)
    vectors = all_input_vectors(c17.n_inputs)
    good = c17.eval_batch(vectors)
    per_vec = []
    for i in range(vectors.shape[0]):
        tiled = np.broadcast_to(vectors[i], (fault_rows.shape[0], c17.n_inputs))
        out = c17.eval_batch(tiled, fault_rows)
        per_vec.append(float(w @ (out != good[i]).all(axis=1)))
    assert rep.max_error == pytest.approx(max(per_vec), abs=1e-12)
    assert rep.worst_vector is not None


def test_zero_eps_marks_outputs_unreachable(c17):
    net, tree = prepare(c17, 0.0)
    rep = max_error(net, tree)
    assert all(r.unreachable for r in rep.per_output)
    assert all(r.vector is None and r.p_error == 0.0 for r in rep.per_output)
    assert rep.max_error == 0.0
    assert rep.worst_vector is None and rep.worst_output is None


def test_sweep_curve_frozen(c17):
    curve = sweep(c17, GRID, refine=True)
    assert len(curve.points) == 40
    assert curve.error_bound == pytest.approx(0.110, abs=1e-12)
    assert curve.refined_bound == pytest.approx(0.105703, abs=2e-4)
    assert 0.1035 <= curve.refined_bound <= 0.1075
    for p in curve.points:
        # the worst vector stays put across the whole grid
        assert p.worst_vector == "01111"
        assert p.worst_output == "23"
        assert p.avg_error <= p.max_error + 1e-12
    at = {p.epsilon: p for p in curve.points}
    assert at[0.05].max_error == pytest.approx(0.3160, abs=1e-12)
    assert at[0.105].max_error < 0.5 < at[0.110].max_error


def test_sweep_without_crossing_leaves_bounds_unset(c17):
    curve = sweep(c17, [0.01, 0.03, 0.05], refine=True)
    assert curve.error_bound is None
    assert curve.refined_bound is None
    assert [p.epsilon for p in curve.points] == [0.01, 0.03, 0.05]


def test_sweep_rejects_empty_grid(c17):
    with pytest.raises(ValueError):
        sweep(c17, [])


def test_spectrum_frozen(c17):
    sp = spectrum(c17, 0.05)
    assert sp.per_output.shape == (32, 2)
    assert sp.mu == pytest.approx(0.2523, abs=1e-9)
    assert sp.sigma == pytest.approx(0.0325393, abs=1e-6)
    tail = sp.above()
    assert len(tail) == 6
    assert {v for v, _ in tail} == {"00111", "01110", "01111",
                                    "10111", "11110", "11111"}
    assert sp.above(0.5) == []
    assert np.allclose(sp.max_probs, sp.per_output.max(axis=1))


def test_spectrum_matches_oracle_cellwise(c17):
    sp = spectrum(c17, 0.05)
    cond = FaultEnumerator(c17).cond_errors(0.05)
    assert np.max(np.abs(sp.per_output - cond)) < 1e-12


def test_spectrum_input_cap():
    rng = np.random.default_rng(5)
    big = random_circuit(rng, MAX_SPECTRUM_INPUTS + 1, 3)
    with pytest.raises(ValueError):
        spectrum(big, 0.05)


def test_prepare_forwards_width_limit(c17):
    with pytest.raises(WidthLimitError):
        prepare(c17, 0.05, width_limit=2)


def test_reports_on_corpus_match_oracle(corpus):
    for circuit in corpus[:10]:
        enum = FaultEnumerator(circuit)
        net, tree = prepare(circuit, 0.1)
        rep = max_error(net, tree)
        cond = enum.cond_errors(0.1)
        for j, row in enumerate(rep.per_output):
            assert row.p_error == pytest.approx(cond[:, j].max(), abs=1e-9)
