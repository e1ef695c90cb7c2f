"""Valuation algebra over binary variables.

A valuation is a nonnegative table over an ordered scope of variable
ids.  The scope is kept sorted ascending and the table is a dense numpy
array of shape (2,)*len(scope); flattened in C order the first scope
variable is the most significant bit of the cell index.  Combination is
pointwise multiplication over the union scope, marginalization removes
variables by summing or maximizing.

Tables may alternatively hold log-probabilities (``log=True``): combine
adds, marg_sum does log-sum-exp, zeros become -inf.  Deep circuits whose
cell values underflow in linear space can run the whole pipeline in log
space; both modes share every code path here.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_WIDTH_LIMIT = 25


class WidthLimitError(RuntimeError):
    """A scope grew past the configured width limit (intractable clique)."""

    def __init__(self, width, limit, context=""):
        self.width = width
        self.limit = limit
        msg = "scope of %d variables exceeds the width limit %d" % (width, limit)
        if context:
            msg += " (%s)" % context
        super().__init__(msg)


class Valuation:
    __slots__ = ("scope", "table", "log")

    def __init__(self, scope: Sequence[int], table: np.ndarray, log: bool = False):
        self.scope = tuple(scope)
        self.table = np.asarray(table, dtype=np.float64)
        self.log = log
        if self.table.shape != (2,) * len(self.scope):
            raise ValueError("table shape %s does not match scope size %d"
                             % (self.table.shape, len(self.scope)))
        if any(a >= b for a, b in zip(self.scope, self.scope[1:])):
            raise ValueError("scope must be strictly increasing: %s" % (self.scope,))

    def __repr__(self):
        return "Valuation(scope=%s%s)" % (self.scope, ", log" if self.log else "")

    def value_at(self, assignment: Mapping[int, int]) -> float:
        """Table cell for a full assignment of the scope."""
        idx = tuple(assignment[v] for v in self.scope)
        return float(self.table[idx])

    def copy(self) -> "Valuation":
        return Valuation(self.scope, self.table.copy(), self.log)


def unit(log: bool = False) -> Valuation:
    """Neutral element of combination (empty scope)."""
    return Valuation((), np.array(0.0 if log else 1.0), log)


def from_cells(scope: Sequence[int], cells: Sequence[float], log: bool = False) -> Valuation:
    """Valuation from a flat cell list in the given (not necessarily
    sorted) scope order; axes are permuted into canonical order."""
    scope = tuple(scope)
    table = np.asarray(cells, dtype=np.float64).reshape((2,) * len(scope))
    perm = sorted(range(len(scope)), key=lambda i: scope[i])
    return Valuation(tuple(scope[i] for i in perm), np.transpose(table, perm), log)


def indicator(var: int, state: int, log: bool = False) -> Valuation:
    """Evidence valuation: 1 on the observed state, 0 elsewhere."""
    t = np.zeros(2)
    t[state] = 1.0
    if log:
        with np.errstate(divide="ignore"):
            t = np.log(t)
    return Valuation((var,), t, log)


def to_log(v: Valuation) -> Valuation:
    if v.log:
        return v
    with np.errstate(divide="ignore"):
        return Valuation(v.scope, np.log(v.table), True)


def from_log(v: Valuation) -> Valuation:
    if not v.log:
        return v
    return Valuation(v.scope, np.exp(v.table), False)


def _merge_scopes(a: tuple[int, ...], b: tuple[int, ...]):
    """Union of two sorted scopes plus broadcast shapes for each operand."""
    union: list[int] = []
    sa: list[int] = []
    sb: list[int] = []
    i = j = 0
    while i < len(a) or j < len(b):
        if j >= len(b) or (i < len(a) and a[i] < b[j]):
            union.append(a[i]); sa.append(2); sb.append(1); i += 1
        elif i >= len(a) or b[j] < a[i]:
            union.append(b[j]); sa.append(1); sb.append(2); j += 1
        else:
            union.append(a[i]); sa.append(2); sb.append(2); i += 1; j += 1
    return tuple(union), tuple(sa), tuple(sb)


def combine(a: Valuation, b: Valuation,
            width_limit: int = DEFAULT_WIDTH_LIMIT) -> Valuation:
    """Pointwise product over the union scope (sum in log space)."""
    if a.log != b.log:
        raise ValueError("cannot combine linear and log-space valuations")
    union, sa, sb = _merge_scopes(a.scope, b.scope)
    if len(union) > width_limit:
        raise WidthLimitError(len(union), width_limit, "combine")
    ta = a.table.reshape(sa)
    tb = b.table.reshape(sb)
    return Valuation(union, ta + tb if a.log else ta * tb, a.log)


def _drop_axes(v: Valuation, drop: Iterable[int]):
    drop = set(drop)
    extra = drop - set(v.scope)
    if extra:
        raise ValueError("variables %s not in scope %s" % (sorted(extra), v.scope))
    axes = tuple(i for i, var in enumerate(v.scope) if var in drop)
    kept = tuple(var for var in v.scope if var not in drop)
    return axes, kept


def _logsumexp(table: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    m = np.max(table, axis=axes, keepdims=True)
    safe = np.where(np.isneginf(m), 0.0, m)
    with np.errstate(divide="ignore"):  # log(0) -> -inf is the point
        out = np.log(np.sum(np.exp(table - safe), axis=axes)) + np.squeeze(safe, axis=axes)
    return np.where(np.isneginf(np.squeeze(m, axis=axes)), -np.inf, out)


def marg_sum(v: Valuation, drop: Iterable[int]) -> Valuation:
    """Sum out the given variables."""
    axes, kept = _drop_axes(v, drop)
    if not axes:
        return v
    table = _logsumexp(v.table, axes) if v.log else np.sum(v.table, axis=axes)
    return Valuation(kept, table, v.log)


def marg_max(v: Valuation, drop: Iterable[int]):
    """Max out the given variables.

    Returns ``(valuation, witness)`` where witness is an int array over
    the kept cells giving one maximizing assignment of the dropped
    variables, packed as a binary number whose most significant bit is
    the lowest dropped variable id.  Ties resolve to the smallest packed
    value, i.e. the lexicographically smallest assignment.
    """
    axes, kept = _drop_axes(v, drop)
    if not axes:
        return v, np.zeros(v.table.shape, dtype=np.int64)
    moved = np.moveaxis(v.table, axes, range(len(kept), len(v.scope)))
    flat = moved.reshape(moved.shape[:len(kept)] + (-1,))
    witness = np.argmax(flat, axis=-1)
    table = np.max(flat, axis=-1)
    return Valuation(kept, table, v.log), witness


def decode_witness(packed: int, dropped: Sequence[int]) -> dict[int, int]:
    """Unpack one witness cell into an assignment of the dropped vars
    (sorted ascending)."""
    d = len(dropped)
    return {var: (packed >> (d - 1 - i)) & 1 for i, var in enumerate(sorted(dropped))}


def reduce_mixed(v: Valuation, drop_sum: Iterable[int], drop_max: Iterable[int]) -> Valuation:
    """Drop ``drop_sum`` by summation, then ``drop_max`` by maximization.

    Summing first keeps the result as tight as this split allows while
    staying an upper bound of the sum-before-max value whenever some max
    variable must leave early.
    """
    out = marg_sum(v, drop_sum)
    drop_max = set(drop_max)
    if drop_max:
        out, _ = marg_max(out, drop_max)
    return out


def reduce_all(v: Valuation, max_vars: Iterable[int] = ()) -> float:
    """Collapse the whole scope to a scalar: sum variables not in
    ``max_vars``, then max the rest.  Scalar is linear-space."""
    mv = set(max_vars) & set(v.scope)
    out = reduce_mixed(v, set(v.scope) - mv, mv)
    x = float(out.table)
    return float(np.exp(x)) if v.log else x
