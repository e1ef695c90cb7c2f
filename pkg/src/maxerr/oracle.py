"""Independent ground truth for small circuits.

Everything here works straight off :meth:`Circuit.eval` semantics (the
batch variant of it) and never touches the inference machinery, so the
two routes can be checked against each other.  Exact enumeration walks
all 2**G fault sets; the Monte Carlo estimator samples them.  Input
priors are taken uniform (0.5) throughout, and a gate with error rate
eps misfires (emits its complement) with probability 2*eps, matching
the error-model convention.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, GateFunc, all_input_vectors, index_vector

MAX_ENUM_GATES = 22
MAX_ENUM_INPUTS = 16


def _check_eps(c: Circuit, eps) -> np.ndarray:
    arr = np.full(c.n_gates, float(eps)) if np.isscalar(eps) else \
        np.array([float(eps[gi]) for gi in range(c.n_gates)])
    if np.any((arr < 0) | (arr > 0.5)):
        raise ValueError("gate error probabilities must lie in [0, 0.5]")
    return arr


class FaultEnumerator:
    """Exhaustive fault-set table for one circuit.

    Precomputes, per input vector, which fault sets flip each output;
    those masks are eps-independent, so sweeping eps only reweights
    them.
    """

    def __init__(self, c: Circuit):
        if c.n_gates > MAX_ENUM_GATES:
            raise ValueError("fault enumeration capped at %d gates, circuit has %d"
                             % (MAX_ENUM_GATES, c.n_gates))
        if c.n_inputs > MAX_ENUM_INPUTS:
            raise ValueError("fault enumeration capped at %d inputs, circuit has %d"
                             % (MAX_ENUM_INPUTS, c.n_inputs))
        self.circuit = c
        self.fault_rows = all_input_vectors(c.n_gates)  # (2**G, G)
        vectors = all_input_vectors(c.n_inputs)
        good = c.eval_batch(vectors)  # (2**k, n)
        # diff[i] has shape (2**G, n): fault set s flips output j on i.
        self._diff = []
        for i in range(vectors.shape[0]):
            tiled = np.broadcast_to(vectors[i], (self.fault_rows.shape[0], c.n_inputs))
            out = c.eval_batch(tiled, self.fault_rows)
            self._diff.append(out != good[i])

    def weights(self, eps) -> np.ndarray:
        flip = 2.0 * _check_eps(self.circuit, eps)
        return np.prod(np.where(self.fault_rows, flip, 1.0 - flip), axis=1)

    def cond_errors(self, eps) -> np.ndarray:
        """P(output j wrong | input i) for all i, j; shape (2**k, n)."""
        w = self.weights(eps)
        return np.stack([w @ d for d in self._diff])


def exact_cond_error(c: Circuit, input_bits: Sequence[int], eps) -> np.ndarray:
    """Exact per-output error probabilities for one input vector.

    Sums, over every subset S of gates, the probability that exactly
    the gates in S misfire times the indicator that the faulty outputs
    disagree with the fault-free ones.
    """
    enum = FaultEnumerator(c)
    w = enum.weights(eps)
    idx = 0
    for b in input_bits:
        idx = (idx << 1) | int(b)
    return w @ enum._diff[idx]


@dataclass
class MapTruth:
    vector: tuple[int, ...]
    prob: float          # P(inputs, output wrong) under uniform priors
    cond_error: float    # P(output wrong | inputs)


def exact_map(c: Circuit, eps, output_index: int,
              enum: FaultEnumerator | None = None) -> MapTruth:
    """Most error-prone input vector for one output, by enumeration.

    Maximizes 0.5**k * P(output wrong | i); ties go to the
    lexicographically smallest vector.
    """
    enum = enum or FaultEnumerator(c)
    col = enum.cond_errors(eps)[:, output_index]
    best = int(np.argmax(col))
    return MapTruth(index_vector(best, c.n_inputs),
                    0.5 ** c.n_inputs * float(col[best]), float(col[best]))


@dataclass
class McConfig:
    runs: int = 1_000_000
    seed: int = 0
    shard: int = 1 << 16
    workers: int | None = None


@dataclass
class McEstimate:
    p_error: np.ndarray   # per output
    stderr: np.ndarray
    runs: int


def monte_carlo(c: Circuit, input_bits: Sequence[int], eps,
                cfg: McConfig = McConfig()) -> McEstimate:
    """Sampled per-output error probabilities for one input vector.

    Each run draws an independent misfire flag per gate.  Shards use
    seeds spawned from ``cfg.seed`` and merge by summing counts, so the
    estimate does not depend on scheduling.
    """
    flip = 2.0 * _check_eps(c, eps)
    good = np.array(c.eval(input_bits), dtype=bool)
    row = np.array(input_bits, dtype=bool)
    n_shards = (cfg.runs + cfg.shard - 1) // cfg.shard
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_shards)
    sizes = [min(cfg.shard, cfg.runs - i * cfg.shard) for i in range(n_shards)]

    def one(shard_idx: int) -> np.ndarray:
        rng = np.random.default_rng(seeds[shard_idx])
        m = sizes[shard_idx]
        faults = rng.random((m, c.n_gates)) < flip
        out = c.eval_batch(np.broadcast_to(row, (m, c.n_inputs)), faults)
        return np.sum(out != good, axis=0)

    workers = cfg.workers or int(os.environ.get("MAXERR_THREADS", "0") or 0)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = sum(pool.map(one, range(n_shards)))
    else:
        counts = sum(one(i) for i in range(n_shards))
    p = counts / cfg.runs
    return McEstimate(p, np.sqrt(p * (1.0 - p) / cfg.runs), cfg.runs)


_TWO_IN = (GateFunc.AND, GateFunc.NAND, GateFunc.OR, GateFunc.NOR,
           GateFunc.XOR, GateFunc.XNOR)


def random_circuit(rng: np.random.Generator, n_inputs: int, n_gates: int,
                   funcs: Sequence[GateFunc] = _TWO_IN,
                   p_unary: float = 0.15, p_wide: float = 0.1) -> Circuit:
    """Seeded random layered DAG for test corpora.

    Gates draw their fan-ins from all earlier nets with a bias toward
    recent ones (deeper, narrower circuits); outputs are the gate nets
    nothing consumes.
    """
    nets = ["i%d" % j for j in range(n_inputs)]
    gates = []
    used: set[str] = set()
    for gi in range(n_gates):
        if rng.random() < p_unary:
            func = GateFunc.NOT if rng.random() < 0.5 else GateFunc.BUF
            arity = 1
        else:
            func = funcs[rng.integers(len(funcs))]
            arity = 3 if (rng.random() < p_wide and len(nets) >= 3) else 2
        arity = min(arity, len(nets))
        weights = np.arange(1, len(nets) + 1, dtype=float)
        weights /= weights.sum()
        picks = rng.choice(len(nets), size=arity, replace=False, p=weights)
        fanin = tuple(nets[i] for i in sorted(picks))
        name = "g%d" % gi
        gates.append(Gate(name, func, fanin))
        used.update(fanin)
        nets.append(name)
    outputs = [g.output for g in gates if g.output not in used]
    return Circuit(["i%d" % j for j in range(n_inputs)], gates, outputs)
