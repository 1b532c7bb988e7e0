"""
One-shot bounds on P{Z = 0}, the probability that no codeword tuple lands in F.

    lower_bound                 1 - min_S |M_S| e^{-α_S}                       (union bound)
    upper_bound_chebyshev       P{F^c}/ε + e^γ/((1-ε)|M|) + Σ_{∅⊂S⊂[k]} ...   (good/bad split + Chebyshev)
    upper_bound_cauchy_schwarz  same split, conditional step 1 - E[Z]^2/E[Z^2]

All exponentials are evaluated from logarithms so codebook sizes like e^{nR}
never overflow; raw values may leave [0, 1] and are reported next to the
clamped ones.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal, localcontext
from typing import Callable, Iterable, Sequence

import numpy as np

from src.covering.distcore import (
    DEFAULT_GUARD, JointPmf, SubsetId, codebook_subsets, full_codebook_set,
)
from src.covering.errors import BoundsError, GuardExceeded

DEFAULT_EPSILON_GRID = tuple(round(0.1 * i, 10) for i in range(1, 10))
# 1 - ε test slack for membership in the good set
GOOD_SET_TOLERANCE = 1e-12

log = logging.getLogger(__name__)


def _exp(x: float) -> float:
    if math.isnan(x) or x >= 709.78:
        return math.inf
    return math.exp(x)


@dataclass(frozen=True, eq=False)
class EventSet:
    """Explicit event F: a boolean mask over the alphabet product (u_0, u_1..u_k, u_{k+1})."""
    mask: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        m = np.asarray(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def full(cls, sizes: Sequence[int]) -> EventSet:
        return cls(np.ones(tuple(sizes), dtype=bool), "full")

    @classmethod
    def empty(cls, sizes: Sequence[int]) -> EventSet:
        return cls(np.zeros(tuple(sizes), dtype=bool), "empty")

    @classmethod
    def from_predicate(cls, sizes: Sequence[int], pred: Callable[[tuple[int, ...]], bool], label: str = "") -> EventSet:
        mask = np.zeros(tuple(sizes), dtype=bool)
        for u in itertools.product(*(range(s) for s in sizes)):
            mask[u] = bool(pred(u))
        return cls(mask, label)

    @classmethod
    def from_members(cls, sizes: Sequence[int], members: Iterable[Sequence[int]], label: str = "") -> EventSet:
        mask = np.zeros(tuple(sizes), dtype=bool)
        for u in members:
            u = tuple(int(x) for x in u)
            if len(u) != len(sizes) or any(not 0 <= x < s for x, s in zip(u, sizes)):
                raise BoundsError(f"member {list(u)} outside alphabets {list(sizes)}")
            mask[u] = True
        return cls(mask, label or "explicit")

    @classmethod
    def coordinates_equal(cls, sizes: Sequence[int], variables: Sequence[int]) -> EventSet:
        """{u: u_i = u_j for all listed variables i, j}."""
        vs = list(variables)
        if len(vs) < 2: raise BoundsError(f"need at least two variables to compare, got {vs}")
        return cls.from_predicate(sizes, lambda u: len({u[v] for v in vs}) == 1,
                                  "{" + "=".join(f"u_{v}" for v in vs) + "}")

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.mask.shape

    def __contains__(self, u: object) -> bool:
        return bool(self.mask[tuple(u)])  # type: ignore[arg-type]

    def is_empty(self) -> bool:
        return not self.mask.any()

    def projection(self, S: SubsetId) -> np.ndarray:
        """F_S as a keepdims mask: axes of codebook variables outside S collapsed to size 1."""
        k = self.mask.ndim - 2
        drop = tuple(j for j in range(1, k + 1) if j not in S)
        return self.mask.any(axis=drop, keepdims=True) if drop else self.mask

    def slice_mass(self, p: JointPmf) -> np.ndarray:
        """P{(u_0, U_[k], u_{k+1}) ∈ F, U_0 = u_0, U_{k+1} = u_{k+1}} as a (|U_0|, |U_{k+1}|) array."""
        k = self.mask.ndim - 2
        return np.where(self.mask, p.probs, 0.0).sum(axis=tuple(range(1, k + 1)))

    def check(self, p: JointPmf) -> None:
        if tuple(self.mask.shape) != tuple(p.alphabet_sizes):
            raise BoundsError(f"event lives on alphabets {list(self.mask.shape)}, pmf on {list(p.alphabet_sizes)}")


@dataclass(frozen=True)
class SubsetConstants:
    alpha: dict[SubsetId, float]
    beta: dict[SubsetId, float]
    gamma: float


@dataclass(frozen=True)
class CodebookSizes:
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(int(m) < 0 for m in self.sizes):
            raise BoundsError(f"codebook sizes must be >= 0, got {list(self.sizes)}")
        object.__setattr__(self, "sizes", tuple(int(m) for m in self.sizes))

    @classmethod
    def from_rates(cls, rates: Sequence[float], n: int) -> CodebookSizes:
        """M_j = ceil(e^{n R_j}), exact for exponents beyond float range."""
        return cls(tuple(_ceil_exp(n * float(r)) for r in rates))

    @property
    def k(self) -> int:
        return len(self.sizes)

    def of(self, S: SubsetId) -> int:
        """|M_S|, with |M_∅| = 1."""
        return math.prod(self.sizes[j - 1] for j in S)

    def log_of(self, S: SubsetId) -> float:
        size = self.of(S)
        return math.log(size) if size > 0 else -math.inf

    @property
    def total(self) -> int:
        return math.prod(self.sizes)


def _ceil_exp(x: float) -> int:
    if x < 700:
        return math.ceil(math.exp(x))
    with localcontext() as ctx:
        ctx.prec = int(x / 2.30258509) + 30
        return int(Decimal(x).exp().to_integral_value(rounding=ROUND_CEILING))


@dataclass(frozen=True)
class GoodSet:
    mask: np.ndarray                 # (|U_0|, |U_{k+1}|); zero-mass pairs are never members
    conditional_mass: np.ndarray     # P{F(u_0,u_{k+1}) | u_0, u_{k+1}}, nan at zero-mass pairs
    prob_outside: float
    epsilon: float


@dataclass(frozen=True)
class BoundsReport:
    epsilon: float
    lower: float
    lower_raw: float
    upper_chebyshev: float
    upper_chebyshev_raw: float
    upper_cauchy_schwarz: float
    upper_cauchy_schwarz_raw: float
    p_F_complement: float
    p_not_good: float
    constants: SubsetConstants
    terms: dict[str, float] = field(default_factory=dict)


def _logs(p: JointPmf, S: SubsetId) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(p.marginal_table(S, keepdims=True))


def _singles(p: JointPmf, S: SubsetId) -> tuple[np.ndarray, np.ndarray]:
    """Σ_{j∈S} ln p(u_j|u_0) and the mask where every p(u_0, u_j) > 0."""
    zero = SubsetId.of(0)
    total, ok = np.zeros((1,) * p.probs.ndim), np.ones((1,) * p.probs.ndim, dtype=bool)
    l0 = _logs(p, zero)
    for j in S:
        pair = p.marginal_table(SubsetId.of(0, j), keepdims=True)
        ok = ok & (pair > 0)
        with np.errstate(invalid="ignore"):
            total = total + (_logs(p, SubsetId.of(0, j)) - l0)
    return total, ok


def _scan(p: JointPmf, members: np.ndarray, numer: SubsetId, cond: SubsetId, S: SubsetId, what: str) -> np.ndarray:
    """ln[p(u_S | u_cond) / ∏_{j∈S} p(u_j|u_0)] over the member tuples; zero denominators rejected."""
    singles, ok = _singles(p, S)
    ok = ok & (p.marginal_table(cond, keepdims=True) > 0)
    members, ok = np.broadcast_arrays(members, ok)
    if np.any(members & ~ok):
        raise BoundsError(f"zero denominator in the {what} ratio on a member of F")
    with np.errstate(invalid="ignore"):
        ratio = _logs(p, numer) - _logs(p, cond) - singles
    ratio = np.broadcast_to(ratio, members.shape)
    return ratio[members]


def tightest_constants(p: JointPmf, F: EventSet) -> SubsetConstants:
    F.check(p)
    if F.is_empty():
        raise BoundsError("event F is empty; alpha, beta, gamma are undefined")
    k = p.k
    ends = SubsetId.of(0, k + 1)
    full = full_codebook_set(k)
    alpha: dict[SubsetId, float] = {}
    beta: dict[SubsetId, float] = {}
    for S in codebook_subsets(k):
        alpha[S] = float(_scan(p, F.projection(S), ends | S, ends, S, f"alpha_{S}").min())
        cond = ends | (full - S)
        beta[S] = float(_scan(p, F.mask, cond | S, cond, S, f"beta_{S}").min())
    gamma = float(_scan(p, F.mask, ends | full, ends, full, "gamma").max())
    log.debug("tightest constants k=%d gamma=%.6g", k, gamma)
    return SubsetConstants(alpha, beta, gamma)


def lower_bound_raw(M: CodebookSizes, c: SubsetConstants) -> float:
    terms = [0.0 if M.of(S) == 0 else _exp(M.log_of(S) - a) for S, a in c.alpha.items()]
    return 1.0 - min(terms)


def lower_bound(M: CodebookSizes, c: SubsetConstants) -> float:
    return max(0.0, lower_bound_raw(M, c))


def _check_upper_args(M: CodebookSizes, epsilon: float, p_Fc: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise BoundsError(f"epsilon must lie in (0, 1), got {epsilon}")
    if M.total == 0:
        raise BoundsError("|M| = 0; the upper bounds need at least one codeword tuple")
    if not -1e-12 <= p_Fc <= 1.0 + 1e-12:
        raise BoundsError(f"P(F^c) must lie in [0, 1], got {p_Fc}")


def _conditional_terms(M: CodebookSizes, c: SubsetConstants, epsilon: float) -> dict[str, float]:
    """The two γ-based pieces of the conditional Chebyshev bound on the good set."""
    k = M.k
    full = full_codebook_set(k)
    terms = {"full": _exp(c.gamma - M.log_of(full)) / (1.0 - epsilon)}
    for S in codebook_subsets(k):
        if S == full:
            continue
        x = -M.log_of(S) - c.alpha[S] - 2.0 * c.beta[full - S] + 2.0 * c.gamma
        terms[f"S={S}"] = _exp(x) / (1.0 - epsilon) ** 2
    return terms


def upper_bound_chebyshev_raw(M: CodebookSizes, c: SubsetConstants, epsilon: float, p_Fc: float) -> float:
    _check_upper_args(M, epsilon, p_Fc)
    return p_Fc / epsilon + math.fsum(_conditional_terms(M, c, epsilon).values())


def upper_bound_chebyshev(M: CodebookSizes, c: SubsetConstants, epsilon: float, p_Fc: float) -> float:
    return min(1.0, upper_bound_chebyshev_raw(M, c, epsilon, p_Fc))


def upper_bound_cauchy_schwarz_raw(M: CodebookSizes, c: SubsetConstants, epsilon: float, p_Fc: float) -> float:
    _check_upper_args(M, epsilon, p_Fc)
    t = math.fsum(_conditional_terms(M, c, epsilon).values())
    # E^2/E[Z^2] >= 1/(1 + t), so P{Z=0 | good pair} <= t/(1 + t)
    conditional = 1.0 if math.isinf(t) else t / (1.0 + t)
    return p_Fc / epsilon + conditional


def upper_bound_cauchy_schwarz(M: CodebookSizes, c: SubsetConstants, epsilon: float, p_Fc: float) -> float:
    return min(1.0, upper_bound_cauchy_schwarz_raw(M, c, epsilon, p_Fc))


def good_set(p: JointPmf, F: EventSet, epsilon: float) -> GoodSet:
    F.check(p)
    if not 0.0 < epsilon < 1.0:
        raise BoundsError(f"epsilon must lie in (0, 1), got {epsilon}")
    pair = p.marginal_table(SubsetId.of(0, p.k + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(pair > 0, F.slice_mass(p) / np.where(pair > 0, pair, 1.0), np.nan)
    mask = (pair > 0) & (np.nan_to_num(cond, nan=-1.0) >= 1.0 - epsilon - GOOD_SET_TOLERANCE)
    outside = math.fsum(pair[(pair > 0) & ~mask].tolist())
    return GoodSet(mask, cond, outside, float(epsilon))


def event_probability(p: JointPmf, F: EventSet, guard: float = DEFAULT_GUARD) -> float:
    F.check(p)
    if F.mask.size > guard:
        raise GuardExceeded("event enumeration", F.mask.size, guard)
    return math.fsum(p.probs[F.mask].tolist())


def evaluate(p: JointPmf, F: EventSet, M: CodebookSizes, epsilon: float,
             constants: SubsetConstants | None = None) -> BoundsReport:
    c = constants or tightest_constants(p, F)
    p_Fc = max(0.0, 1.0 - event_probability(p, F))
    lo = lower_bound_raw(M, c)
    cheb = upper_bound_chebyshev_raw(M, c, epsilon, p_Fc)
    cs = upper_bound_cauchy_schwarz_raw(M, c, epsilon, p_Fc)
    terms = {"P(F^c)/eps": p_Fc / epsilon, **_conditional_terms(M, c, epsilon)}
    return BoundsReport(
        epsilon=float(epsilon), lower=max(0.0, lo), lower_raw=lo,
        upper_chebyshev=min(1.0, cheb), upper_chebyshev_raw=cheb,
        upper_cauchy_schwarz=min(1.0, cs), upper_cauchy_schwarz_raw=cs,
        p_F_complement=p_Fc, p_not_good=good_set(p, F, epsilon).prob_outside,
        constants=c, terms=terms,
    )


def sweep_epsilon(p: JointPmf, F: EventSet, M: CodebookSizes,
                  grid: Sequence[float] = DEFAULT_EPSILON_GRID) -> list[BoundsReport]:
    if not grid: raise BoundsError("empty epsilon grid")
    c = tightest_constants(p, F)
    return [evaluate(p, F, M, eps, c) for eps in grid]


def best_epsilon(reports: Sequence[BoundsReport], which: str = "cauchy_schwarz") -> BoundsReport:
    """Grid point with the smallest raw upper bound (first one on ties)."""
    key = {"cauchy_schwarz": lambda r: r.upper_cauchy_schwarz_raw,
           "chebyshev": lambda r: r.upper_chebyshev_raw}[which]
    return min(reports, key=key)
