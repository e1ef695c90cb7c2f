import numpy as np
import pytest

from maxerr.circuit import GateFunc, parse_bench
from maxerr.model import (Var, VarClass, build_error_model, cpt_for_gate,
                          eps_by_net_name, input_prior, joint_prob)

AND2 = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nz = AND(a, b)\n")


def test_variable_layout(c17):
    net = build_error_model(c17, 0.05)
    k, G, n = 5, 6, 2
    assert net.n_vars == k + 2 * G + n
    assert [v.klass for v in net.vars[:k]] == [VarClass.INPUT] * k
    assert net.vars[k].name == "10"
    assert net.vars[k + G].name == "10'"
    assert net.vars[-1].name == "err:23"
    assert len(net.cpts) == net.n_vars
    assert net.input_vars == (0, 1, 2, 3, 4)


def test_faulty_cpt_entries_are_twice_eps():
    child = Var(2, "z", VarClass.INTERNAL)
    parents = (Var(0, "a", VarClass.INPUT), Var(1, "b", VarClass.INPUT))
    cpt = cpt_for_gate(GateFunc.AND, 2, 0.05, True, child, parents)
    # correct AND output gets 0.9, its complement 0.1, in every row
    assert cpt.prob(1, (1, 1)) == pytest.approx(0.9)
    assert cpt.prob(0, (1, 1)) == pytest.approx(0.1)
    assert cpt.prob(0, (0, 1)) == pytest.approx(0.9)
    assert cpt.prob(1, (0, 1)) == pytest.approx(0.1)


def test_ideal_cpt_deterministic():
    child = Var(2, "z", VarClass.INTERNAL)
    parents = (Var(0, "a", VarClass.INPUT), Var(1, "b", VarClass.INPUT))
    cpt = cpt_for_gate(GateFunc.NAND, 2, 0.0, False, child, parents)
    assert set(np.unique(cpt.table)) == {0.0, 1.0}
    assert cpt.prob(0, (1, 1)) == 1.0


def test_eps_validation():
    child = Var(1, "z", VarClass.INTERNAL)
    parent = (Var(0, "a", VarClass.INPUT),)
    with pytest.raises(ValueError):
        cpt_for_gate(GateFunc.NOT, 1, 0.6, True, child, parent)
    with pytest.raises(ValueError):
        cpt_for_gate(GateFunc.NOT, 1, -0.1, True, child, parent)
    with pytest.raises(ValueError):
        input_prior(child, 1.5)


def test_comparator_is_deterministic_xor():
    net = build_error_model(AND2, 0.1)
    comp = net.cpts[net.comparators[0]]
    assert len(comp.parents) == 2
    for a in (0, 1):
        for b in (0, 1):
            assert comp.prob(a ^ b, (a, b)) == 1.0


def test_output_fed_by_input_gets_constant_comparator():
    c = parse_bench("INPUT(a)\nOUTPUT(a)\nOUTPUT(z)\nz = NOT(a)\n")
    net = build_error_model(c, 0.1)
    comp = net.cpts[net.comparator_of("a")]
    # both copies are the same shared input: never a mismatch
    assert len(comp.parents) == 1
    assert comp.prob(0, (0,)) == 1.0 and comp.prob(0, (1,)) == 1.0


def test_per_gate_eps_map(c17):
    eps = {gi: 0.01 * (gi + 1) for gi in range(6)}
    net = build_error_model(c17, eps)
    assert net.epsilon[3] == pytest.approx(0.04)
    with pytest.raises(ValueError):
        build_error_model(c17, {0: 0.05})  # missing gates


def test_eps_by_net_name(c17):
    m = eps_by_net_name(c17, {"22": 0.02}, default=0.01)
    assert m[c17.gate_of_net("22")] == pytest.approx(0.02)
    assert m[c17.gate_of_net("10")] == pytest.approx(0.01)
    with pytest.raises(ValueError):
        eps_by_net_name(c17, {"nope": 0.1}, default=0.01)
    with pytest.raises(ValueError):
        eps_by_net_name(c17, {"22": 0.1})  # no default for the rest


def test_joint_prob_sums_to_one():
    net = build_error_model(AND2, 0.07)
    total = 0.0
    for code in range(1 << net.n_vars):
        assign = [(code >> i) & 1 for i in range(net.n_vars)]
        total += joint_prob(net, assign)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_joint_prob_zero_on_ideal_violation():
    net = build_error_model(AND2, 0.07)
    # inputs 1,1 force the ideal AND variable to 1; setting it 0 is impossible
    assign = [1, 1, 0, 1, 0]
    assert joint_prob(net, assign) == 0.0


def test_joint_marginal_matches_flip_semantics():
    # P(faulty z wrong | a=1, b=1) must be 2*eps exactly for one gate
    eps = 0.08
    net = build_error_model(AND2, eps)
    wrong = 0.0
    seen = 0.0
    for code in range(1 << net.n_vars):
        assign = [(code >> i) & 1 for i in range(net.n_vars)]
        if assign[0] == 1 and assign[1] == 1:
            p = joint_prob(net, assign)
            seen += p
            if assign[3] != 1:  # faulty copy of z disagrees with AND(1,1)
                wrong += p
    assert wrong / seen == pytest.approx(2 * eps, abs=1e-12)


def test_prior_parameter():
    net = build_error_model(AND2, 0.05, prior1=0.25)
    cpt = net.cpts[0]
    assert cpt.prob(1, ()) == pytest.approx(0.25)
