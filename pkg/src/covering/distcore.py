"""
Finite joint distributions over the variables U_0, U_1..U_k, U_{k+1}.

Variable 0 is the common part, k+1 the side variable, 1..k the codebook
variables. Tables are dense numpy arrays with one axis per variable; alphabets
are the integer ranges 0..size-1. Every quantity is in nats.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.special import entr

from src.covering.errors import GuardExceeded, PmfError, ZeroConditioningError

DEFAULT_TOLERANCE = 1e-9
DEFAULT_GUARD = 10_000_000

VariableId = int

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class SubsetId:
    """Set of variable indices stored as a bitmask (bit j <=> U_j)."""
    bitmask: int = 0

    @classmethod
    def of(cls, *indices: VariableId) -> SubsetId:
        return cls.from_iterable(indices)

    @classmethod
    def from_iterable(cls, indices: Iterable[VariableId]) -> SubsetId:
        mask = 0
        for j in indices:
            if j < 0: raise PmfError(f"negative variable index {j}")
            mask |= 1 << int(j)
        return cls(mask)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.bitmask.bit_length()) if self.bitmask >> j & 1)

    def __iter__(self) -> Iterator[int]: return iter(self.indices)
    def __len__(self) -> int: return bin(self.bitmask).count("1")
    def __bool__(self) -> bool: return self.bitmask != 0
    def __contains__(self, j: object) -> bool: return isinstance(j, int) and j >= 0 and bool(self.bitmask >> j & 1)
    def __or__(self, other: SubsetId) -> SubsetId: return SubsetId(self.bitmask | other.bitmask)
    def __and__(self, other: SubsetId) -> SubsetId: return SubsetId(self.bitmask & other.bitmask)
    def __sub__(self, other: SubsetId) -> SubsetId: return SubsetId(self.bitmask & ~other.bitmask)
    def isdisjoint(self, other: SubsetId) -> bool: return not self.bitmask & other.bitmask
    def issubset(self, other: SubsetId) -> bool: return self.bitmask & ~other.bitmask == 0

    def label(self) -> str:
        return "{" + ",".join(str(j) for j in self.indices) + "}"

    __str__ = label


EMPTY = SubsetId(0)


def nonempty_subsets(indices: Iterable[VariableId]) -> list[SubsetId]:
    """All nonempty subsets of `indices`, ordered by bitmask."""
    idx = sorted(set(int(j) for j in indices))
    out = [SubsetId.from_iterable(c) for r in range(1, len(idx) + 1) for c in itertools.combinations(idx, r)]
    return sorted(out)


def codebook_subsets(k: int) -> list[SubsetId]:
    """Nonempty S ⊆ [k]."""
    return nonempty_subsets(range(1, k + 1))


def full_codebook_set(k: int) -> SubsetId:
    return SubsetId.from_iterable(range(1, k + 1))


@dataclass(frozen=True, eq=False)
class JointPmf:
    alphabet_sizes: tuple[int, ...]
    probs: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE
    variables: tuple[int, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.variables:
            object.__setattr__(self, "variables", tuple(range(len(self.alphabet_sizes))))
        self.probs.setflags(write=False)

    @property
    def k(self) -> int:
        """Number of codebook variables when this pmf spans U_0..U_{k+1}."""
        return len(self.variables) - 2

    @property
    def side(self) -> int:
        return self.variables[-1]

    @property
    def scope(self) -> SubsetId:
        return SubsetId.from_iterable(self.variables)

    def axes(self, S: SubsetId) -> tuple[int, ...]:
        try:
            return tuple(self.variables.index(j) for j in S)
        except ValueError:
            raise PmfError(f"subset {S} not within variables {self.variables}") from None

    def size_of(self, j: VariableId) -> int:
        return self.alphabet_sizes[self.axes(SubsetId.of(j))[0]]

    def marginal_table(self, S: SubsetId, keepdims: bool = False) -> np.ndarray:
        """p(u_S) with axes in increasing variable order; keepdims keeps size-1 axes for broadcasting."""
        key = (S.bitmask, keepdims)
        if key not in self._cache:
            keep = set(self.axes(S))
            drop = tuple(a for a in range(self.probs.ndim) if a not in keep)
            table = self.probs.sum(axis=drop, keepdims=keepdims) if drop else self.probs.copy()
            table.setflags(write=False)
            self._cache[key] = table
        return self._cache[key]


@dataclass(frozen=True, eq=False)
class CondPmf:
    """p(u_target | u_given); table axes are the given variables then the target variables."""
    target: SubsetId
    given: SubsetId
    table: np.ndarray
    given_mass: np.ndarray
    tolerance: float = DEFAULT_TOLERANCE

    def prob(self, u_target: Sequence[int], u_given: Sequence[int] = ()) -> float:
        g = tuple(int(u) for u in u_given)
        if self.given_mass[g] <= 0:
            raise ZeroConditioningError(f"p(u_{self.given}={g}) = 0; conditional undefined")
        return float(self.table[g + tuple(int(u) for u in u_target)])


@dataclass(frozen=True, eq=False)
class GenerationLaw:
    """The codeword-generation law p(u_0) ∏_{j=1}^{k+1} p(u_j|u_0)."""
    base: JointPmf
    factors: tuple[np.ndarray, ...]   # factors[j-1][u_0, u_j] = p(u_j|u_0); zero rows where p(u_0) = 0
    law: JointPmf

    @property
    def k(self) -> int:
        return self.base.k

    def codeword_table(self, j: VariableId) -> np.ndarray:
        if not 1 <= j <= self.k + 1: raise PmfError(f"no generation factor for variable {j}")
        return self.factors[j - 1]

    def common_table(self) -> np.ndarray:
        return self.base.marginal_table(SubsetId.of(0))

    def sequence_probability(self, j: VariableId, seq: Sequence[int], u0_seq: Sequence[int]) -> float:
        """∏_i p(u_{j,i} | u_{0,i}) for one length-n sequence."""
        vals = self.codeword_table(j)[np.asarray(u0_seq), np.asarray(seq)]
        return float(np.prod(vals))


def validate_pmf(raw_table, alphabet_sizes: Sequence[int], tolerance: float = DEFAULT_TOLERANCE) -> JointPmf:
    sizes = tuple(int(s) for s in alphabet_sizes)
    if len(sizes) < 3:
        raise PmfError(f"need variables U_0, U_1..U_k, U_(k+1) with k >= 1, got {len(sizes)} alphabets")
    if any(s < 1 for s in sizes):
        raise PmfError(f"empty alphabet in alphabet_sizes={list(sizes)}")
    if tolerance < 0:
        raise PmfError(f"tolerance must be >= 0, got {tolerance}")
    arr = np.asarray(raw_table, dtype=float)
    if arr.size != math.prod(sizes):
        raise PmfError(f"table has {arr.size} entries, alphabet sizes {list(sizes)} need {math.prod(sizes)}")
    arr = arr.reshape(sizes).copy()
    if not np.all(np.isfinite(arr)):
        raise PmfError("table contains non-finite entries")
    if np.any(arr < 0):
        raise PmfError(f"negative entry {arr.min():.6g}")
    total = float(arr.sum())
    if abs(total - 1.0) > tolerance:
        raise PmfError(f"mass sums to {total:.12g}, deviates from 1 by more than {tolerance:g}")
    return JointPmf(sizes, arr, float(tolerance))


def marginal(p: JointPmf, S: SubsetId) -> JointPmf:
    if not S: raise PmfError("marginal over an empty subset")
    table = p.marginal_table(S).copy()
    return JointPmf(tuple(table.shape), table, p.tolerance, S.indices)


def conditional(p: JointPmf, target: SubsetId, given: SubsetId) -> CondPmf:
    if not target: raise PmfError("conditional with empty target")
    if not target.isdisjoint(given):
        raise PmfError(f"target {target} and given {given} overlap")
    union = target | given
    joint = p.marginal_table(union)
    order = union.indices
    perm = [order.index(j) for j in given] + [order.index(j) for j in target]
    joint = np.transpose(joint, perm)
    if given:
        mass = p.marginal_table(given)
        denom = mass.reshape(mass.shape + (1,) * len(target))
    else:
        mass = np.asarray(1.0)
        denom = mass
    with np.errstate(divide="ignore", invalid="ignore"):
        table = np.where(denom > 0, joint / np.where(denom > 0, denom, 1.0), np.nan)
    return CondPmf(target, given, table, mass, p.tolerance)


def entropy(p: JointPmf, S: SubsetId) -> float:
    """H(U_S) in nats with 0 ln 0 = 0."""
    if not S: raise PmfError("entropy of an empty subset")
    return float(entr(p.marginal_table(S)).sum())


def cond_entropy(p: JointPmf, S: SubsetId, T: SubsetId = EMPTY) -> float:
    """H(U_S | U_T) = H(U_{S∪T}) - H(U_T)."""
    if not S: raise PmfError("conditional entropy of an empty subset")
    if not S.isdisjoint(T): raise PmfError(f"subsets {S} and {T} overlap")
    if not T:
        return entropy(p, S)
    return max(0.0, entropy(p, S | T) - entropy(p, T))


def mutual_information(p: JointPmf, S: SubsetId, T: SubsetId, given: SubsetId = EMPTY) -> float:
    """I(U_S; U_T | U_given)."""
    if not S.isdisjoint(T): raise PmfError(f"subsets {S} and {T} overlap")
    return max(0.0, cond_entropy(p, S, given) + cond_entropy(p, T, given) - cond_entropy(p, S | T, given))


def generation_law(p: JointPmf) -> GenerationLaw:
    k = p.k
    if k < 1 or p.variables != tuple(range(k + 2)):
        raise PmfError(f"generation law needs a pmf over U_0..U_(k+1), got variables {p.variables}")
    p0 = p.marginal_table(SubsetId.of(0))
    factors: list[np.ndarray] = []
    law = p0.reshape((-1,) + (1,) * (k + 1))
    for j in range(1, k + 2):
        pj = p.marginal_table(SubsetId.of(0, j))
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(p0[:, None] > 0, pj / np.where(p0[:, None] > 0, p0[:, None], 1.0), 0.0)
        f.setflags(write=False)
        factors.append(f)
        shape = [1] * (k + 2); shape[0] = f.shape[0]; shape[j] = f.shape[1]
        law = law * f.reshape(shape)
    law_pmf = JointPmf(p.alphabet_sizes, np.ascontiguousarray(law), p.tolerance)
    log.debug("generation law built: k=%d sizes=%s", k, p.alphabet_sizes)
    return GenerationLaw(p, tuple(factors), law_pmf)


def enforce_guard(what: str, terms: Iterable[tuple[int, int]], guard: float) -> None:
    """Raise GuardExceeded when ∏ base**exponent over `terms` exceeds guard; compared as logarithms."""
    log_size = math.fsum(e * math.log(b) for b, e in terms if e and b > 1)
    if log_size > math.log(guard):
        size = math.exp(log_size) if log_size < 700 else math.inf
        raise GuardExceeded(what, size, guard, log_size=log_size)


def power(p: JointPmf, n: int, guard: float = DEFAULT_GUARD) -> JointPmf:
    """n-fold i.i.d. extension; variable j's super-alphabet is 0..|U_j|^n - 1 (position 1 most significant)."""
    if n < 1: raise PmfError(f"blocklength must be >= 1, got {n}")
    enforce_guard(f"{n}-fold product table", ((s, n) for s in p.alphabet_sizes), guard)
    if n == 1:
        return p
    table = power_array(p.probs, n)
    return JointPmf(table.shape, table, p.tolerance, p.variables)


def power_array(arr: np.ndarray, n: int) -> np.ndarray:
    """Product of n copies of `arr` with each axis widened to size**n (sequence index, position 1 first)."""
    V = arr.ndim
    table = arr
    for _ in range(n - 1):
        table = np.multiply.outer(table, arr)
    order = [i * V + v for v in range(V) for i in range(n)]
    return np.ascontiguousarray(np.transpose(table, order).reshape(tuple(s ** n for s in arr.shape)))


def encode_sequence(seq: Sequence[int], size: int) -> int:
    return int(np.ravel_multi_index(tuple(int(u) for u in seq), (size,) * len(seq)))


def decode_sequence(index, size: int, n: int) -> np.ndarray:
    """Super-symbol(s) → sequence(s); output shape is index.shape + (n,)."""
    return np.stack(np.unravel_index(np.asarray(index), (size,) * n), axis=-1)
