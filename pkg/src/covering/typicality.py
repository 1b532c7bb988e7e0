"""
Weak typicality for tuples of sequences.

A tuple (u_0^n, ..., u_{k+1}^n) is in A_δ^(n) when every nonempty subset T of
the variables has |-(1/n) ln p(u_T^n) - H(U_T)| <= δ. A position whose subset
symbol has zero probability gives rate +inf, so such tuples are never typical.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from src.covering.bounds import EventSet
from src.covering.distcore import (
    DEFAULT_GUARD, JointPmf, SubsetId, VariableId, entropy, nonempty_subsets, power,
)
from src.covering.errors import PmfError

# Absolute slack on |rate - H|; rates and entropies are summed in different orders.
RATE_TOLERANCE = 1e-12

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SequenceTuple:
    n: int
    symbols: Mapping[VariableId, np.ndarray]

    @classmethod
    def from_rows(cls, rows: Mapping[VariableId, Sequence[int]]) -> SequenceTuple:
        arrs = {int(j): np.asarray(seq, dtype=np.int64) for j, seq in rows.items()}
        lengths = {a.shape[-1] if a.ndim else 0 for a in arrs.values()}
        if len(lengths) != 1 or 0 in lengths:
            raise PmfError(f"sequences must share one positive length, got lengths {sorted(lengths)}")
        return cls(lengths.pop(), arrs)

    @property
    def variables(self) -> SubsetId:
        return SubsetId.from_iterable(self.symbols)

    def check_against(self, p: JointPmf) -> None:
        for j, seq in self.symbols.items():
            size = p.size_of(j)
            if seq.size and (seq.min() < 0 or seq.max() >= size):
                raise PmfError(f"symbols of U_{j} outside 0..{size - 1}")


@dataclass(frozen=True)
class TypicalityVerdict:
    typical: bool
    per_subset: dict[SubsetId, tuple[float, float]]   # T -> (empirical rate, deviation)
    worst_subset: SubsetId
    delta: float


def subset_rate(p: JointPmf, T: SubsetId, symbols: Mapping[VariableId, np.ndarray]) -> np.ndarray:
    """-(1/n) Σ_i ln p(u_{T,i}) for every sequence in the (broadcast) batch; last axis is position."""
    if not T: raise PmfError("empirical rate of an empty subset")
    table = p.marginal_table(T)
    try:
        idx = np.broadcast_arrays(*(np.asarray(symbols[j]) for j in T))
    except KeyError as e:
        raise PmfError(f"no sequence for variable U_{e.args[0]}") from None
    with np.errstate(divide="ignore"):
        return -np.log(table[tuple(idx)]).mean(axis=-1)


def empirical_rate(seqs: SequenceTuple, p: JointPmf, T: SubsetId) -> float:
    return float(subset_rate(p, T, seqs.symbols))


def within(rate, H: float, delta: float):
    return np.abs(rate - H) <= delta + RATE_TOLERANCE


def is_weakly_typical(seqs: SequenceTuple, p: JointPmf, delta: float) -> TypicalityVerdict:
    if delta < 0: raise ValueError(f"delta must be >= 0, got {delta}")
    if not p.scope.issubset(seqs.variables):
        raise PmfError(f"sequence tuple covers {seqs.variables}, typicality needs {p.scope}")
    return _verdict(seqs, p, delta, nonempty_subsets(p.variables))


def projected_typical(seqs: SequenceTuple, p: JointPmf, delta: float, S: SubsetId) -> bool:
    """Typicality restricted to subsets of {0} ∪ S ∪ {k+1} (membership test for the projection F_S)."""
    if not S or not S.issubset(SubsetId.from_iterable(range(1, p.k + 1))):
        raise PmfError(f"{S} is not a nonempty codebook subset of [1..{p.k}]")
    scope = S | SubsetId.of(0, p.side)
    if not scope.issubset(seqs.variables):
        raise PmfError(f"sequence tuple covers {seqs.variables}, projection needs {scope}")
    return _verdict(seqs, p, delta, nonempty_subsets(scope)).typical


def _verdict(seqs: SequenceTuple, p: JointPmf, delta: float, subsets: Iterable[SubsetId]) -> TypicalityVerdict:
    per: dict[SubsetId, tuple[float, float]] = {}
    worst, worst_dev = None, -1.0
    for T in subsets:
        rate = empirical_rate(seqs, p, T)
        dev = abs(rate - entropy(p, T))
        per[T] = (rate, dev)
        if dev > worst_dev:
            worst, worst_dev = T, dev
    typical = all(d <= delta + RATE_TOLERANCE for _, d in per.values())
    return TypicalityVerdict(typical, per, worst, float(delta))


def typical_mask(p: JointPmf, symbols: Mapping[VariableId, np.ndarray], delta: float,
                 variables: Iterable[VariableId] | None = None) -> np.ndarray:
    """Batched typicality over every nonempty subset of `variables` (default: all of p's variables)."""
    scope = p.variables if variables is None else tuple(variables)
    mask = None
    for T in nonempty_subsets(scope):
        ok = within(subset_rate(p, T, symbols), entropy(p, T), delta)
        mask = ok if mask is None else mask & ok
    return mask


def typical_event(p: JointPmf, n: int, delta: float, guard: float = DEFAULT_GUARD) -> EventSet:
    """A_δ^(n) as an explicit event over the alphabets of power(p, n)."""
    if delta < 0: raise ValueError(f"delta must be >= 0, got {delta}")
    pw = power(p, n, guard)
    mask = np.ones(pw.alphabet_sizes, dtype=bool)
    for T in nonempty_subsets(p.variables):
        with np.errstate(divide="ignore"):
            rate = -np.log(pw.marginal_table(T, keepdims=True)) / n
        mask &= within(rate, entropy(p, T), delta)
    log.debug("typical set n=%d delta=%g: %d of %d tuples", n, delta, int(mask.sum()), mask.size)
    return EventSet(mask, f"A_delta(n={n}, delta={delta:g})")


def log_ratio(p: JointPmf, seqs: SequenceTuple, S: SubsetId, given: SubsetId | None = None) -> tuple[float, float]:
    """
    ln[p(u_S^n | u_0^n, u_given^n, u_{k+1}^n) / ∏_{j∈S} p(u_j^n | u_0^n)] and its centre
    n(Σ_{j∈S} H(U_j|U_0) - H(U_S|U_0, U_given, U_{k+1})).

    For typical tuples the two differ by at most 2n(|S|+1)δ.
    """
    given = given or SubsetId()
    cond = given | SubsetId.of(0, p.side)
    full = cond | S
    n = seqs.n
    r = lambda T: empirical_rate(seqs, p, T)
    h = lambda T: entropy(p, T)
    zero = SubsetId.of(0)
    value = n * (r(cond) - r(full) + sum(r(SubsetId.of(0, j)) - r(zero) for j in S))
    centre = n * (h(cond) - h(full) + sum(h(SubsetId.of(0, j)) - h(zero) for j in S))
    return value, centre


def bracket_deviation(p: JointPmf, seqs: SequenceTuple, S: SubsetId, given: SubsetId | None = None) -> float:
    """|log_ratio - centre|; at most 2n(|S|+1)δ on A_δ^(n)."""
    value, centre = log_ratio(p, seqs, S, given)
    return abs(value - centre)
