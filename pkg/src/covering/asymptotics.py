"""
Asymptotic side of the covering lemma: blocklength-n constants, the direct and
converse rate conditions, and Chernoff exponents for leaving the typical set.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np
from scipy.special import logsumexp

from src.covering.bounds import SubsetConstants
from src.covering.distcore import (
    JointPmf, SubsetId, VariableId, codebook_subsets, cond_entropy, entropy, full_codebook_set, mutual_information,
    nonempty_subsets,
)
from src.covering.errors import DegenerateExponentError

Tail = Literal["upper", "lower"]

T_MAX = 1e6
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# a within this of the extreme value of ln(1/p) counts as the boundary case
EDGE_TOLERANCE = 1e-12

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateTuple:
    R: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(r) for r in self.R)
        if any(not math.isfinite(r) or r < 0 for r in vals):
            raise ValueError(f"rates must be finite and >= 0, got {list(vals)}")
        object.__setattr__(self, "R", vals)

    def total(self, S: SubsetId) -> float:
        return math.fsum(self.R[j - 1] for j in S)


@dataclass(frozen=True)
class RegionVerdict:
    kind: Literal["direct", "converse"]
    satisfied: bool
    per_subset_slack: dict[SubsetId, float]
    binding_subset: SubsetId


@dataclass(frozen=True)
class ScanRow:
    R: tuple[float, ...]
    direct: bool
    converse: bool


@dataclass(frozen=True)
class ExponentReport:
    epsilon: float
    variables: tuple[int, ...]
    per_subset_upper: dict[SubsetId, float]
    per_subset_lower: dict[SubsetId, float]
    overall: float
    prefactor: float
    unbounded: tuple[str, ...] = field(default_factory=tuple)   # "T:tail" entries whose search hit the cap


def information_term(p: JointPmf, S: SubsetId, given: SubsetId = SubsetId()) -> float:
    """Σ_{j∈S} H(U_j|U_0) - H(U_S | U_0, U_given, U_{k+1})."""
    zero = SubsetId.of(0)
    singles = math.fsum(cond_entropy(p, SubsetId.of(j), zero) for j in S)
    return singles - cond_entropy(p, S, zero | given | SubsetId.of(p.side))


def asymptotic_constants(p: JointPmf, n: int, delta: float) -> SubsetConstants:
    if n < 1: raise ValueError(f"n must be >= 1, got {n}")
    if delta < 0: raise ValueError(f"delta must be >= 0, got {delta}")
    k = p.k
    full = full_codebook_set(k)
    alpha, beta = {}, {}
    for S in codebook_subsets(k):
        slack = 2 * (len(S) + 1) * delta
        alpha[S] = n * (information_term(p, S) - slack)
        beta[S] = n * (information_term(p, S, full - S) - slack)
    gamma = n * (information_term(p, full) + 2 * (k + 1) * delta)
    return SubsetConstants(alpha, beta, gamma)


def direct_rhs(p: JointPmf, S: SubsetId, delta: float) -> float:
    k = p.k
    if S == full_codebook_set(k):
        return information_term(p, S) + 2 * (k + 1) * delta
    return information_term(p, S) + (8 * k - 2 * len(S) + 10) * delta


def converse_rhs(p: JointPmf, S: SubsetId, delta: float) -> float:
    return information_term(p, S) - 2 * (len(S) + 1) * delta


def _verdict(kind, p: JointPmf, R: RateTuple, delta: float, rhs: Callable, strict: bool) -> RegionVerdict:
    if delta < 0: raise ValueError(f"delta must be >= 0, got {delta}")
    if len(R.R) != p.k: raise ValueError(f"need {p.k} rates, got {len(R.R)}")
    slack = {S: R.total(S) - rhs(p, S, delta) for S in codebook_subsets(p.k)}
    binding = min(slack, key=lambda S: slack[S])
    ok = all((v > 0) if strict else (v >= 0) for v in slack.values())
    return RegionVerdict(kind, ok, slack, binding)


def direct_check(p: JointPmf, R: RateTuple, delta: float) -> RegionVerdict:
    """Sufficient condition for covering; S = [k] uses the weakened 2(k+1)δ slack."""
    return _verdict("direct", p, R, delta, direct_rhs, strict=True)


def converse_check(p: JointPmf, R: RateTuple, delta: float) -> RegionVerdict:
    return _verdict("converse", p, R, delta, converse_rhs, strict=False)


def boundary_scan(p: JointPmf, delta: float, grid: Sequence[Sequence[float]]) -> list[ScanRow]:
    """Both verdicts for every point of the product grid, first coordinate most significant."""
    if len(grid) != p.k or any(len(axis) == 0 for axis in grid):
        raise ValueError(f"rate grid needs {p.k} nonempty axes")
    rows = []
    for point in itertools.product(*grid):
        R = RateTuple(tuple(point))
        rows.append(ScanRow(R.R, direct_check(p, R, delta).satisfied, converse_check(p, R, delta).satisfied))
    return rows


def _support(p: JointPmf, T: SubsetId) -> tuple[np.ndarray, np.ndarray]:
    probs = p.marginal_table(T).ravel()
    pos = probs[probs > 0]
    return np.log(pos), -np.log(pos)


def log_mgf(p: JointPmf, T: SubsetId, t: float) -> float:
    """ln E[e^{t ln(1/p(U_T))}] = ln Σ_{p>0} p(u_T)^{1-t}."""
    logp, _ = _support(p, T)
    return float(logsumexp((1.0 - t) * logp))


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-12, max_iter: int = 400) -> tuple[float, float]:
    """Maximizer and maximum of a unimodal f on [lo, hi]."""
    x1 = hi - INV_PHI * (hi - lo); x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    it = 0
    while hi - lo > tol * max(1.0, abs(hi)) and it < max_iter:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo); f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo); f1 = f(x1)
        it += 1
    t = 0.5 * (lo + hi)
    return t, f(t)


def _tail_exponent(p: JointPmf, T: SubsetId, eps: float, tail: Tail) -> tuple[float, bool]:
    """(exponent, unbounded) for P{±(mean of ln 1/p(U_T)) >= ±H + ε}."""
    if eps <= 0: raise ValueError(f"epsilon must be > 0, got {eps}")
    if tail not in ("upper", "lower"): raise ValueError(f"unknown tail {tail!r}")
    logp, x = _support(p, T)
    H = float(np.dot(np.exp(logp), x))
    y = x if tail == "upper" else -x
    a = (H if tail == "upper" else -H) + eps
    top = float(y.max())
    if a > top + EDGE_TOLERANCE:
        return math.inf, True
    if a >= top - EDGE_TOLERANCE:
        # boundary: sup is the limit -ln P{Y = max Y}
        return float(-logsumexp(logp[y >= top - EDGE_TOLERANCE])), False

    def f(t: float) -> float:
        return t * a - float(logsumexp(logp + t * y))

    def slope(t: float) -> float:
        w = logp + t * y
        w = np.exp(w - logsumexp(w))
        return a - float(np.dot(w, y))

    hi = 1.0
    while slope(hi) > 0:
        hi *= 2.0
        if hi > T_MAX:
            log.debug("exponent search for %s/%s hit the cap", T, tail)
            return math.inf, True
    lo = hi / 2.0 if hi > 1.0 else 0.0
    _, value = golden_section_max(f, lo, hi)
    return max(0.0, value), False


def chernoff_exponent(p: JointPmf, T: SubsetId, epsilon: float, tail: Tail = "upper") -> float:
    return _tail_exponent(p, T, epsilon, tail)[0]


def exponent_report(p: JointPmf, epsilon: float, variables: Iterable[VariableId] | None = None) -> ExponentReport:
    scope = tuple(p.variables if variables is None else sorted(set(variables)))
    upper, lower, unbounded = {}, {}, []
    for T in nonempty_subsets(scope):
        for tail, into in (("upper", upper), ("lower", lower)):
            value, capped = _tail_exponent(p, T, epsilon, tail)
            into[T] = value
            if capped: unbounded.append(f"{T}:{tail}")
    overall = min(min(upper.values()), min(lower.values()))
    prefactor = 2.0 * (2 ** len(scope) - 1)
    return ExponentReport(float(epsilon), scope, upper, lower, overall, prefactor, tuple(unbounded))


def atypicality_bound(p: JointPmf, epsilon: float, n: int, variables: Iterable[VariableId] | None = None) -> float:
    """prefactor * e^{-n I(ε)} >= P{not weakly typical}."""
    if n < 0: raise ValueError(f"n must be >= 0, got {n}")
    rep = exponent_report(p, epsilon, variables)
    if n == 0:
        return rep.prefactor
    if math.isinf(rep.overall):
        return 0.0
    return rep.prefactor * math.exp(-n * rep.overall)


def epsilon_schedule(p: JointPmf, delta: float, n: int, variables: Iterable[VariableId] | None = None) -> float:
    """ε_n = min(1/2, e^{-n I(δ)/2}); (1/ε_n) * atypicality bound still decays at rate I(δ)/2."""
    if delta <= 0: raise ValueError(f"delta must be > 0, got {delta}")
    if n < 0: raise ValueError(f"n must be >= 0, got {n}")
    I = exponent_report(p, delta, variables).overall
    if I <= 0:
        raise DegenerateExponentError(f"I(delta={delta}) = {I}; no schedule drives P(atypical)/eps_n to 0")
    if n == 0:
        return 0.5
    value = 0.0 if math.isinf(I) else math.exp(-n * I / 2.0)
    if value == 0.0:
        log.warning("eps_n underflows (I(delta)=%s, n=%d); using the smallest positive float", I, n)
        return math.ulp(0.0)
    return min(0.5, value)


def covering_threshold(p: JointPmf) -> float:
    """I(U_1; U_2 | U_0): the k = 1 rate threshold both conditions collapse to as δ -> 0."""
    if p.k != 1: raise ValueError(f"single-codebook threshold needs k = 1, got k = {p.k}")
    return mutual_information(p, SubsetId.of(1), SubsetId.of(2), SubsetId.of(0))
